use std::io::Write;
use std::sync::Mutex;
use std::time::Duration;

use thiserror::Error;

use super::{AlertEvent, AlertKind};

#[derive(Debug, Error, Clone, PartialEq)]
#[error("sink `{sink}` failed: {message}")]
pub struct SinkError {
    pub sink: String,
    pub message: String,
}

/// Destination for alert events. Implementations serialize their own output
/// and may be called from several threads at once.
pub trait AlertSink: Send + Sync {
    fn name(&self) -> &str;
    fn deliver(&self, event: &AlertEvent) -> Result<(), SinkError>;
}

/// Keeps every delivered event in memory.
#[derive(Debug, Default)]
pub struct MemorySink {
    events: Mutex<Vec<AlertEvent>>,
}

impl MemorySink {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn events(&self) -> Vec<AlertEvent> {
        self.events.lock().expect("sink lock").clone()
    }
}

impl AlertSink for MemorySink {
    fn name(&self) -> &str {
        "memory"
    }

    fn deliver(&self, event: &AlertEvent) -> Result<(), SinkError> {
        self.events.lock().expect("sink lock").push(event.clone());
        Ok(())
    }
}

/// Writes one JSON object per event per line.
pub struct JsonLinesSink<W: Write + Send> {
    writer: Mutex<W>,
}

impl<W: Write + Send> JsonLinesSink<W> {
    pub fn new(writer: W) -> Self {
        JsonLinesSink {
            writer: Mutex::new(writer),
        }
    }

    pub fn into_inner(self) -> W {
        self.writer.into_inner().expect("sink lock")
    }
}

impl<W: Write + Send> AlertSink for JsonLinesSink<W> {
    fn name(&self) -> &str {
        "jsonl"
    }

    fn deliver(&self, event: &AlertEvent) -> Result<(), SinkError> {
        let line = serde_json::to_string(event).expect("events serialize");
        let mut w = self.writer.lock().expect("sink lock");
        writeln!(w, "{line}")
            .and_then(|_| w.flush())
            .map_err(|e| SinkError {
                sink: self.name().to_string(),
                message: e.to_string(),
            })
    }
}

/// Stand-in for the GSM modem: POSTs each SMS text as `text/plain` to a URL.
/// Buzzer events are ignored.
pub struct WebhookSink {
    url: String,
    agent: ureq::Agent,
}

impl WebhookSink {
    pub fn new(url: impl Into<String>) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(2)))
            .build()
            .into();
        WebhookSink {
            url: url.into(),
            agent,
        }
    }

    pub fn url(&self) -> &str {
        &self.url
    }
}

impl AlertSink for WebhookSink {
    fn name(&self) -> &str {
        "webhook"
    }

    fn deliver(&self, event: &AlertEvent) -> Result<(), SinkError> {
        if event.kind != AlertKind::Sms {
            return Ok(());
        }
        let text = event.message.clone().unwrap_or_default();
        self.agent
            .post(&self.url)
            .content_type("text/plain; charset=utf-8")
            .send(text.as_str())
            .map(|_| ())
            .map_err(|e| SinkError {
                sink: self.name().to_string(),
                message: e.to_string(),
            })
    }
}

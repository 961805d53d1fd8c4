//! Simulated sensor edge: readings, adaptive thresholds, flame handling and
//! buzzer/SMS alert dispatch.
//!
//! Each node keeps running statistics for temperature, humidity and oxygen.
//! A reading is compared against `mean ± k·σ` computed from earlier readings
//! only, then folded in. A flame reading raises a buzzer and an SMS
//! immediately, warmup or not.

mod scenario;
mod sinks;
mod stats;
mod threshold;

use std::fmt;

use chrono::DateTime;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{OXY_RANGE, RH_RANGE, TEMP_RANGE};

pub use scenario::{
    run_scenario, Baseline, InjectedEvent, LogEntry, NodeScript, RunLog, ScenarioScript,
};
pub use sinks::{AlertSink, JsonLinesSink, MemorySink, SinkError, WebhookSink};
pub use stats::RunningStats;
pub use threshold::{EdgePipeline, ThresholdConfig, ThresholdState};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EdgeError {
    #[error("node `{node_id}`: timestamp {ts_ms} is not after {last_ms}")]
    StaleTimestamp {
        node_id: String,
        ts_ms: u64,
        last_ms: u64,
    },
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("invalid reading: `{field}` = {value} is outside [{min}, {max}]")]
    InvalidReading {
        field: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("only SMS events have a message")]
    WrongKind,
    #[error("malformed scenario script: {0}")]
    MalformedScript(String),
}

/// One telemetry sample. Serializes to the wire format
/// `{node_id, ts_ms, temp, rh, oxy, flame}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorReading {
    pub node_id: String,
    /// Milliseconds since the Unix epoch.
    #[serde(rename = "ts_ms")]
    pub timestamp: u64,
    pub temp: f64,
    pub rh: f64,
    pub oxy: f64,
    pub flame: bool,
}

impl SensorReading {
    pub fn validate(&self) -> Result<(), EdgeError> {
        for (field, value, (min, max)) in [
            ("temp", self.temp, TEMP_RANGE),
            ("rh", self.rh, RH_RANGE),
            ("oxy", self.oxy, OXY_RANGE),
        ] {
            if !(min..=max).contains(&value) {
                return Err(EdgeError::InvalidReading {
                    field,
                    value,
                    min,
                    max,
                });
            }
        }
        Ok(())
    }

    fn snapshot(&self) -> ReadingSnapshot {
        ReadingSnapshot {
            temp: self.temp,
            rh: self.rh,
            oxy: self.oxy,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Signal {
    Temp,
    Rh,
    Oxy,
}

impl Signal {
    pub const ALL: [Signal; 3] = [Signal::Temp, Signal::Rh, Signal::Oxy];

    pub fn name(self) -> &'static str {
        match self {
            Signal::Temp => "temp",
            Signal::Rh => "rh",
            Signal::Oxy => "oxy",
        }
    }

    pub fn value(self, r: &SensorReading) -> f64 {
        match self {
            Signal::Temp => r.temp,
            Signal::Rh => r.rh,
            Signal::Oxy => r.oxy,
        }
    }
}

impl fmt::Display for Signal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlertKind {
    Buzzer,
    Sms,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum AlertCause {
    Flame,
    Anomaly {
        signal: Signal,
        value: f64,
        mean: f64,
        sigma: f64,
    },
}

/// Sensor values at the moment the alert fired.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReadingSnapshot {
    pub temp: f64,
    pub rh: f64,
    pub oxy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlertEvent {
    pub kind: AlertKind,
    pub node_id: String,
    #[serde(rename = "ts_ms")]
    pub timestamp: u64,
    pub cause: AlertCause,
    pub reading: ReadingSnapshot,
    /// SMS text; absent for buzzer events.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl AlertEvent {
    /// Buzzer and SMS pair for one cause.
    fn pair(r: &SensorReading, cause: AlertCause) -> [AlertEvent; 2] {
        let buzzer = AlertEvent {
            kind: AlertKind::Buzzer,
            node_id: r.node_id.clone(),
            timestamp: r.timestamp,
            cause,
            reading: r.snapshot(),
            message: None,
        };
        let mut sms = AlertEvent {
            kind: AlertKind::Sms,
            ..buzzer.clone()
        };
        sms.message = Some(format_sms(&sms).expect("sms kind"));
        [buzzer, sms]
    }
}

/// ISO-8601 UTC with second precision.
pub fn format_timestamp(ts_ms: u64) -> String {
    DateTime::from_timestamp_millis(ts_ms as i64)
        .map(|t| t.format("%Y-%m-%dT%H:%M:%SZ").to_string())
        .unwrap_or_else(|| ts_ms.to_string())
}

/// `GREENSHIELD ALERT node=<id> time=<ISO-8601> cause=<FLAME|ANOMALY:signal> temp=<t>C rh=<h>% oxy=<o>%`
pub fn format_sms(e: &AlertEvent) -> Result<String, EdgeError> {
    if e.kind != AlertKind::Sms {
        return Err(EdgeError::WrongKind);
    }
    let cause = match e.cause {
        AlertCause::Flame => "FLAME".to_string(),
        AlertCause::Anomaly { signal, .. } => format!("ANOMALY:{signal}"),
    };
    Ok(format!(
        "GREENSHIELD ALERT node={} time={} cause={} temp={:.1}C rh={:.1}% oxy={:.1}%",
        e.node_id,
        format_timestamp(e.timestamp),
        cause,
        e.reading.temp,
        e.reading.rh,
        e.reading.oxy
    ))
}

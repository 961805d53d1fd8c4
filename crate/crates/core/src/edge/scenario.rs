//! Scripted, seeded replays of sensor streams.
//!
//! A script lists nodes with a Gaussian baseline per signal and a sampling
//! grid, plus injected events (a flame at some offset, or a temperature step
//! from some offset on). Offsets are milliseconds after the node's start.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{AlertEvent, AlertKind, AlertSink, EdgeError, EdgePipeline, SensorReading, ThresholdConfig};
use crate::dataset::{OXY_RANGE, RH_RANGE, TEMP_RANGE};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalBaseline {
    pub mean: f64,
    #[serde(default)]
    pub sd: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Baseline {
    pub temp: SignalBaseline,
    pub rh: SignalBaseline,
    pub oxy: SignalBaseline,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeScript {
    pub id: String,
    /// Epoch milliseconds of the first reading.
    #[serde(default)]
    pub start_ms: u64,
    pub interval_ms: u64,
    pub count: usize,
    pub baseline: Baseline,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum InjectedEvent {
    /// The first reading at or after `at_ms` reports a flame.
    Flame { node: String, at_ms: u64 },
    /// Every reading at or after `at_ms` is `delta` °C warmer.
    TempStep { node: String, at_ms: u64, delta: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioScript {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub threshold: ThresholdConfig,
    pub nodes: Vec<NodeScript>,
    #[serde(default)]
    pub events: Vec<InjectedEvent>,
}

fn malformed(msg: impl Into<String>) -> EdgeError {
    EdgeError::MalformedScript(msg.into())
}

impl ScenarioScript {
    pub fn from_json(text: &str) -> Result<Self, EdgeError> {
        let script: ScenarioScript =
            serde_json::from_str(text).map_err(|e| malformed(e.to_string()))?;
        script.validate()?;
        Ok(script)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, EdgeError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| malformed(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), EdgeError> {
        let mut seen = std::collections::BTreeSet::new();
        for n in &self.nodes {
            if n.id.is_empty() || !seen.insert(n.id.as_str()) {
                return Err(malformed(format!("duplicate or empty node id `{}`", n.id)));
            }
            if n.interval_ms == 0 {
                return Err(malformed(format!("node `{}`: interval_ms must be positive", n.id)));
            }
            for (name, b, (lo, hi)) in [
                ("temp", n.baseline.temp, TEMP_RANGE),
                ("rh", n.baseline.rh, RH_RANGE),
                ("oxy", n.baseline.oxy, OXY_RANGE),
            ] {
                if !(lo..=hi).contains(&b.mean) || !(b.sd >= 0.0 && b.sd.is_finite()) {
                    return Err(malformed(format!("node `{}`: bad {name} baseline", n.id)));
                }
            }
        }
        let t = &self.threshold;
        if !(t.k > 0.0 && t.k.is_finite()) || !(t.guard_band >= 0.0 && t.guard_band.is_finite()) {
            return Err(malformed("threshold k must be positive and guard_band non-negative"));
        }
        for e in &self.events {
            let (node, ok) = match e {
                InjectedEvent::Flame { node, .. } => (node, true),
                InjectedEvent::TempStep { node, delta, .. } => (node, delta.is_finite()),
            };
            if !seen.contains(node.as_str()) {
                return Err(malformed(format!("event refers to unknown node `{node}`")));
            }
            if !ok {
                return Err(malformed("temp_step delta must be finite"));
            }
        }
        Ok(())
    }

    /// All readings of the run, ordered by timestamp then node id.
    pub fn readings(&self) -> Vec<SensorReading> {
        let mut out = Vec::new();
        for (stream, node) in self.nodes.iter().enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
            rng.set_stream(stream as u64);
            let normal = |b: SignalBaseline| Normal::new(b.mean, b.sd).expect("validated baseline");
            let (temp_d, rh_d, oxy_d) = (
                normal(node.baseline.temp),
                normal(node.baseline.rh),
                normal(node.baseline.oxy),
            );
            let mut flames: Vec<u64> = self
                .events
                .iter()
                .filter_map(|e| match e {
                    InjectedEvent::Flame { node: n, at_ms } if *n == node.id => Some(*at_ms),
                    _ => None,
                })
                .collect();
            flames.sort_unstable();
            let mut flame_iter = flames.into_iter().peekable();

            for i in 0..node.count {
                let offset = i as u64 * node.interval_ms;
                let step: f64 = self
                    .events
                    .iter()
                    .filter_map(|e| match e {
                        InjectedEvent::TempStep { node: n, at_ms, delta }
                            if *n == node.id && offset >= *at_ms =>
                        {
                            Some(*delta)
                        }
                        _ => None,
                    })
                    .sum();
                let mut flame = false;
                while flame_iter.peek().is_some_and(|&at| at <= offset) {
                    flame_iter.next();
                    flame = true;
                }
                let temp = temp_d.sample(&mut rng) + step;
                let rh = rh_d.sample(&mut rng);
                let oxy = oxy_d.sample(&mut rng);
                out.push(SensorReading {
                    node_id: node.id.clone(),
                    timestamp: node.start_ms + offset,
                    temp: temp.clamp(TEMP_RANGE.0, TEMP_RANGE.1),
                    rh: rh.clamp(RH_RANGE.0, RH_RANGE.1),
                    oxy: oxy.clamp(OXY_RANGE.0, OXY_RANGE.1),
                    flame,
                });
            }
        }
        out.sort_by(|a, b| {
            a.timestamp
                .cmp(&b.timestamp)
                .then_with(|| a.node_id.cmp(&b.node_id))
        });
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LogEntry {
    Alert(AlertEvent),
    DeliveryFailure {
        sink: String,
        node_id: String,
        ts_ms: u64,
        kind: AlertKind,
        error: String,
    },
}

/// Ordered record of a run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunLog {
    pub entries: Vec<LogEntry>,
}

impl RunLog {
    pub fn alerts(&self) -> impl Iterator<Item = &AlertEvent> {
        self.entries.iter().filter_map(|e| match e {
            LogEntry::Alert(a) => Some(a),
            _ => None,
        })
    }

    pub fn failures(&self) -> usize {
        self.entries
            .iter()
            .filter(|e| matches!(e, LogEntry::DeliveryFailure { .. }))
            .count()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// One JSON object per line, each line newline-terminated.
    pub fn to_json_lines(&self) -> String {
        self.entries
            .iter()
            .map(|e| serde_json::to_string(e).expect("log entries serialize") + "\n")
            .collect()
    }
}

/// Replays the script through fresh threshold state, delivering each alert
/// to every sink. The returned log holds every alert plus any delivery
/// failures; failures never stop the run.
pub fn run_scenario(script: &ScenarioScript, sinks: &[&dyn AlertSink]) -> Result<RunLog, EdgeError> {
    script.validate()?;
    let mut pipeline = EdgePipeline::new(script.threshold);
    for n in &script.nodes {
        pipeline.register(&n.id);
    }
    let mut log = RunLog::default();
    for reading in script.readings() {
        for alert in pipeline.ingest(&reading)? {
            for sink in sinks {
                if let Err(e) = sink.deliver(&alert) {
                    log.entries.push(LogEntry::DeliveryFailure {
                        sink: e.sink,
                        node_id: alert.node_id.clone(),
                        ts_ms: alert.timestamp,
                        kind: alert.kind,
                        error: e.message,
                    });
                }
            }
            log.entries.push(LogEntry::Alert(alert));
        }
    }
    Ok(log)
}

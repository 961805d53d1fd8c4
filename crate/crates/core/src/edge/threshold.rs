use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{AlertCause, AlertEvent, EdgeError, RunningStats, SensorReading, Signal};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ThresholdConfig {
    /// Readings folded in before any anomaly verdict.
    pub warmup: u64,
    /// Sigma multiplier of the acceptance band.
    pub k: f64,
    /// Minimum half-width of the band, in signal units. Covers zero-variance
    /// baselines.
    pub guard_band: f64,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        ThresholdConfig {
            warmup: 30,
            k: 3.0,
            guard_band: 0.5,
        }
    }
}

/// Per-node adaptive threshold state.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdState {
    config: ThresholdConfig,
    stats: [RunningStats; 3],
    last_ts: Option<u64>,
}

impl ThresholdState {
    pub fn new(config: ThresholdConfig) -> Self {
        ThresholdState {
            config,
            stats: [RunningStats::new(); 3],
            last_ts: None,
        }
    }

    pub fn config(&self) -> &ThresholdConfig {
        &self.config
    }

    /// Readings folded in so far.
    pub fn count(&self) -> u64 {
        self.stats[0].count()
    }

    pub fn stats(&self, signal: Signal) -> &RunningStats {
        &self.stats[signal as usize]
    }

    pub fn last_timestamp(&self) -> Option<u64> {
        self.last_ts
    }

    pub fn in_warmup(&self) -> bool {
        self.count() < self.config.warmup
    }

    /// Tests `r` against the current statistics, then folds it in. Stale
    /// or out-of-range readings are rejected without touching the state.
    pub fn ingest(&mut self, r: &SensorReading) -> Result<Vec<AlertEvent>, EdgeError> {
        if let Some(last) = self.last_ts {
            if r.timestamp <= last {
                return Err(EdgeError::StaleTimestamp {
                    node_id: r.node_id.clone(),
                    ts_ms: r.timestamp,
                    last_ms: last,
                });
            }
        }
        r.validate()?;

        let mut alerts = Vec::new();
        if r.flame {
            alerts.extend(AlertEvent::pair(r, AlertCause::Flame));
        } else if !self.in_warmup() {
            for signal in Signal::ALL {
                let s = &self.stats[signal as usize];
                let value = signal.value(r);
                let (mean, sigma) = (s.mean(), s.std_dev());
                let band = (self.config.k * sigma).max(self.config.guard_band);
                if (value - mean).abs() > band {
                    alerts.extend(AlertEvent::pair(
                        r,
                        AlertCause::Anomaly {
                            signal,
                            value,
                            mean,
                            sigma,
                        },
                    ));
                }
            }
        }

        for signal in Signal::ALL {
            self.stats[signal as usize].push(signal.value(r));
        }
        self.last_ts = Some(r.timestamp);
        Ok(alerts)
    }
}

/// Threshold states keyed by node id.
#[derive(Debug, Clone, Default)]
pub struct EdgePipeline {
    config: ThresholdConfig,
    nodes: BTreeMap<String, ThresholdState>,
}

impl EdgePipeline {
    pub fn new(config: ThresholdConfig) -> Self {
        EdgePipeline {
            config,
            nodes: BTreeMap::new(),
        }
    }

    /// Adds a node; a no-op if it already exists.
    pub fn register(&mut self, node_id: &str) {
        let config = self.config;
        self.nodes
            .entry(node_id.to_string())
            .or_insert_with(|| ThresholdState::new(config));
    }

    pub fn is_registered(&self, node_id: &str) -> bool {
        self.nodes.contains_key(node_id)
    }

    pub fn node(&self, node_id: &str) -> Option<&ThresholdState> {
        self.nodes.get(node_id)
    }

    pub fn node_ids(&self) -> impl Iterator<Item = &str> {
        self.nodes.keys().map(String::as_str)
    }

    /// Ingests a reading for a registered node.
    pub fn ingest(&mut self, r: &SensorReading) -> Result<Vec<AlertEvent>, EdgeError> {
        self.nodes
            .get_mut(&r.node_id)
            .ok_or_else(|| EdgeError::UnknownNode(r.node_id.clone()))?
            .ingest(r)
    }

    /// Ingests a reading, registering its node on first sight.
    pub fn ingest_or_register(&mut self, r: &SensorReading) -> Result<Vec<AlertEvent>, EdgeError> {
        self.register(&r.node_id);
        self.ingest(r)
    }
}

use serde::{Deserialize, Serialize};

use super::ModelError;

/// Hyperparameters for all three classifiers plus the shared seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub seed: u64,
    pub logreg: LogRegConfig,
    pub forest: ForestConfig,
    pub svm: SvmConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            seed: 42,
            logreg: LogRegConfig::default(),
            forest: ForestConfig::default(),
            svm: SvmConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogRegConfig {
    pub learning_rate: f64,
    pub max_iters: usize,
    /// Stop once one step lowers the mean loss by less than this.
    pub tol: f64,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        LogRegConfig {
            learning_rate: 0.1,
            max_iters: 5000,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_split: usize,
    /// Features considered per split; `None` means ceil(sqrt(n_features)).
    pub feature_subset_size: Option<usize>,
    /// When false every tree sees the full training set.
    pub bootstrap: bool,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 100,
            max_depth: 12,
            min_samples_split: 2,
            feature_subset_size: None,
            bootstrap: true,
        }
    }
}

impl ForestConfig {
    pub fn subset_size(&self, n_features: usize) -> usize {
        self.feature_subset_size
            .unwrap_or_else(|| (n_features as f64).sqrt().ceil() as usize)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelChoice {
    Linear,
    Rbf,
    /// Parsed but not trainable.
    Polynomial,
}

impl std::str::FromStr for KernelChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Ok(KernelChoice::Linear),
            "rbf" => Ok(KernelChoice::Rbf),
            "poly" | "polynomial" => Ok(KernelChoice::Polynomial),
            other => Err(format!("unknown kernel `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmConfig {
    pub c: f64,
    /// SMO stops after this many consecutive sweeps without an update.
    pub max_passes: usize,
    /// KKT violation tolerance for SMO.
    pub tol: f64,
    pub kernel: KernelChoice,
    /// RBF width; `None` means 1 / n_features.
    pub gamma: Option<f64>,
    /// Sweep budget for SMO before giving up on convergence.
    pub max_sweeps: usize,
    /// Passes over the data for the linear subgradient solver.
    pub epochs: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            c: 1.0,
            max_passes: 5,
            tol: 1e-3,
            kernel: KernelChoice::Rbf,
            gamma: None,
            max_sweeps: 1000,
            epochs: 50,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |what: &str| Err(ModelError::InvalidConfig(what.to_string()));
        let l = &self.logreg;
        if !(l.learning_rate > 0.0 && l.learning_rate.is_finite()) {
            return bad("logreg.learning_rate must be positive");
        }
        if l.max_iters == 0 || l.tol.is_nan() || l.tol < 0.0 {
            return bad("logreg.max_iters must be positive and tol non-negative");
        }
        let f = &self.forest;
        if f.n_trees == 0 || f.max_depth == 0 || f.min_samples_split < 2 {
            return bad("forest.n_trees and max_depth must be >= 1, min_samples_split >= 2");
        }
        if f.feature_subset_size == Some(0) {
            return bad("forest.feature_subset_size must be >= 1");
        }
        let s = &self.svm;
        if !(s.c > 0.0 && s.c.is_finite()) || s.tol.is_nan() || s.tol <= 0.0 {
            return bad("svm.c and svm.tol must be positive");
        }
        if s.max_passes == 0 || s.max_sweeps == 0 || s.epochs == 0 {
            return bad("svm.max_passes, max_sweeps and epochs must be positive");
        }
        if let Some(g) = s.gamma {
            if !(g > 0.0 && g.is_finite()) {
                return bad("svm.gamma must be positive");
            }
        }
        Ok(())
    }
}

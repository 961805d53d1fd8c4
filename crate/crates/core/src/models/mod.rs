//! The three fire classifiers, trained from scratch.
//!
//! Every model stores the scaling parameters fitted on its training data and
//! applies them to raw inputs itself, so callers always pass unscaled
//! features. Training is deterministic for a given config and seed.

mod config;
pub mod forest;
pub mod logistic;
pub mod persist;
pub mod svm;
pub mod tree;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{FeatureVector, Label, LabeledSample};

pub use config::{ForestConfig, KernelChoice, LogRegConfig, SvmConfig, TrainConfig};
pub use forest::ForestModel;
pub use logistic::LogisticModel;
pub use persist::{from_json, load_model, save_model, to_json, FORMAT_VERSION};
pub use svm::{hinge_loss, SvmKernel, SvmModel};
pub use tree::TreeNode;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("expected {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("training data contains a single class")]
    SingleClassInput,
    #[error("loss became non-finite during training")]
    NonFiniteLoss,
    #[error("empty training set")]
    EmptyInput,
    #[error("weight vector is zero")]
    ZeroWeightVector,
    #[error("margin is only defined for the linear kernel")]
    NotLinearKernel,
    #[error("label must be -1 or +1, got {0}")]
    InvalidLabel(f64),
    #[error("not implemented: {0}")]
    NotImplemented(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("unsupported model format version {0}")]
    UnsupportedVersion(u64),
    #[error("malformed model document: {0}")]
    MalformedDocument(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for ModelError {
    fn from(e: std::io::Error) -> Self {
        ModelError::Io(e.to_string())
    }
}

/// Feature rows with labels, in any dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingData {
    rows: Vec<Vec<f64>>,
    labels: Vec<Label>,
}

impl TrainingData {
    pub fn new(rows: Vec<Vec<f64>>, labels: Vec<Label>) -> Result<Self, ModelError> {
        if rows.is_empty() {
            return Err(ModelError::EmptyInput);
        }
        if rows.len() != labels.len() {
            return Err(ModelError::DimensionMismatch {
                expected: rows.len(),
                got: labels.len(),
            });
        }
        let dim = rows[0].len();
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(ModelError::DimensionMismatch {
                expected: dim,
                got: bad.len(),
            });
        }
        Ok(TrainingData { rows, labels })
    }

    pub fn from_samples(samples: &[LabeledSample]) -> Result<Self, ModelError> {
        Self::new(
            samples.iter().map(|s| s.features.to_array().to_vec()).collect(),
            samples.iter().map(|s| s.label).collect(),
        )
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.rows[0].len()
    }

    pub fn has_both_classes(&self) -> bool {
        let fire = self.labels.iter().filter(|l| l.is_fire()).count();
        fire > 0 && fire < self.labels.len()
    }

    /// Same rows with every label inverted.
    pub fn with_flipped_labels(&self) -> Self {
        TrainingData {
            rows: self.rows.clone(),
            labels: self.labels.iter().map(|l| l.flipped()).collect(),
        }
    }
}

pub(crate) fn check_dim(expected: usize, x: &[f64]) -> Result<(), ModelError> {
    if x.len() == expected {
        Ok(())
    } else {
        Err(ModelError::DimensionMismatch {
            expected,
            got: x.len(),
        })
    }
}

/// Logistic function, evaluated without overflow for either sign.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "logistic_regression")]
    LogisticRegression,
    #[serde(rename = "random_forest")]
    RandomForest,
    #[serde(rename = "svm")]
    Svm,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [
        ModelKind::LogisticRegression,
        ModelKind::RandomForest,
        ModelKind::Svm,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::LogisticRegression => "logistic_regression",
            ModelKind::RandomForest => "random_forest",
            ModelKind::Svm => "svm",
        }
    }

    /// Human-readable name for tables.
    pub fn display_name(self) -> &'static str {
        match self {
            ModelKind::LogisticRegression => "Logistic Regression",
            ModelKind::RandomForest => "Random Forest",
            ModelKind::Svm => "Support Vector",
        }
    }

    /// Tie-break rank in model selection; higher wins.
    pub fn preference(self) -> u8 {
        match self {
            ModelKind::Svm => 2,
            ModelKind::RandomForest => 1,
            ModelKind::LogisticRegression => 0,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown model kind `{s}`"))
    }
}

/// Probability and label for one input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Prediction {
    pub probability: f64,
    pub label: Label,
}

/// A trained classifier of any kind. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub enum FireModel {
    Logistic(LogisticModel),
    Forest(ForestModel),
    Svm(SvmModel),
}

impl FireModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            FireModel::Logistic(_) => ModelKind::LogisticRegression,
            FireModel::Forest(_) => ModelKind::RandomForest,
            FireModel::Svm(_) => ModelKind::Svm,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            FireModel::Logistic(m) => m.scaler.dim(),
            FireModel::Forest(m) => m.scaler.dim(),
            FireModel::Svm(m) => m.scaler.dim(),
        }
    }

    /// Fire probability in [0, 1] for a raw feature row.
    pub fn predict_probability(&self, x: &[f64]) -> Result<f64, ModelError> {
        match self {
            FireModel::Logistic(m) => m.predict_proba(x),
            FireModel::Forest(m) => m.predict(x).map(|(_, p)| p),
            FireModel::Svm(m) => m.predict_proba(x),
        }
    }

    /// Class under each model's own decision rule: p >= 0.5 for logistic
    /// regression, majority vote for the forest and the sign of the decision
    /// value for the SVM.
    pub fn predict_label(&self, x: &[f64]) -> Result<Label, ModelError> {
        match self {
            FireModel::Logistic(m) => m.predict_label(x),
            FireModel::Forest(m) => m.predict(x).map(|(l, _)| l),
            FireModel::Svm(m) => m.predict_label(x),
        }
    }

    pub fn predict(&self, x: &FeatureVector) -> Prediction {
        let row = x.to_array();
        Prediction {
            probability: self
                .predict_probability(&row)
                .expect("feature vectors match the three-feature models"),
            label: self
                .predict_label(&row)
                .expect("feature vectors match the three-feature models"),
        }
    }
}

/// Trains one model of the requested kind.
pub fn train(kind: ModelKind, data: &TrainingData, cfg: &TrainConfig) -> Result<FireModel, ModelError> {
    cfg.validate()?;
    Ok(match kind {
        ModelKind::LogisticRegression => FireModel::Logistic(logistic::train(data, cfg)?),
        ModelKind::RandomForest => FireModel::Forest(forest::train(data, cfg)?),
        ModelKind::Svm => FireModel::Svm(svm::train(data, cfg)?),
    })
}

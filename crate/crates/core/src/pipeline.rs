//! The offline pipeline glued together: clean a dataset, split it, train and
//! evaluate all three models, write the artifacts, and load them back for
//! serving.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dataset::{
    impute_missing, remove_outliers, select_features, split, validate_records, DatasetError,
    FeatureVector, Label, RawRecord, SplitResult,
};
use crate::json::to_canonical_string;
use crate::metrics::{evaluate, select_model, EvalReport, MetricsError};
use crate::models::{self, FireModel, ModelError, ModelKind, TrainConfig, TrainingData};

pub const MANIFEST_FILE: &str = "selected.json";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed manifest: {0}")]
    Manifest(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Validation, imputation, outlier removal, feature selection and the
/// seeded 80/20 split. Scaling happens inside each model.
pub fn prepare(records: &[RawRecord], seed: u64) -> Result<SplitResult, PipelineError> {
    validate_records(records)?;
    let imputed = impute_missing(records)?;
    let kept = remove_outliers(&imputed)?;
    let samples = kept
        .iter()
        .map(select_features)
        .collect::<Result<Vec<_>, _>>()?;
    Ok(split(&samples, seed)?)
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// One model per kind, in `ModelKind::ALL` order.
    pub models: Vec<FireModel>,
    pub reports: Vec<EvalReport>,
    pub selected: ModelKind,
    pub split: SplitResult,
}

impl TrainOutcome {
    pub fn model(&self, kind: ModelKind) -> &FireModel {
        self.models
            .iter()
            .find(|m| m.kind() == kind)
            .expect("every kind is trained")
    }

    pub fn report(&self, kind: ModelKind) -> &EvalReport {
        self.reports
            .iter()
            .find(|r| r.model_kind == kind)
            .expect("every kind is evaluated")
    }
}

pub fn train_all(records: &[RawRecord], cfg: &TrainConfig) -> Result<TrainOutcome, PipelineError> {
    cfg.validate()?;
    let split = prepare(records, cfg.seed)?;
    let data = TrainingData::from_samples(&split.train)?;
    if !data.has_both_classes() {
        return Err(ModelError::SingleClassInput.into());
    }
    let mut models = Vec::new();
    let mut reports = Vec::new();
    for kind in ModelKind::ALL {
        let model = models::train(kind, &data, cfg)?;
        reports.push(evaluate(&model, &split.test)?);
        models.push(model);
    }
    let selected = select_model(&reports)?;
    Ok(TrainOutcome {
        models,
        reports,
        selected,
        split,
    })
}

/// Kind plus the first 12 hex digits of the model file's SHA-256.
pub fn model_version(kind: ModelKind, model_json: &str) -> String {
    let digest = Sha256::digest(model_json.as_bytes());
    let hex: String = digest.iter().take(6).map(|b| format!("{b:02x}")).collect();
    format!("{}-{hex}", kind.as_str())
}

/// Contents of `selected.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub kind: ModelKind,
    /// Relative to the manifest's directory.
    pub model_file: String,
    pub version: String,
    pub trained_at: Option<String>,
    pub metrics: EvalReport,
    pub seed: u64,
}

pub fn model_file_name(kind: ModelKind) -> String {
    format!("{}.json", kind.as_str())
}

/// Writes one file per model plus the manifest into `dir`.
pub fn write_artifacts(
    outcome: &TrainOutcome,
    dir: &Path,
    trained_at: Option<String>,
) -> Result<Manifest, PipelineError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut version = String::new();
    for model in &outcome.models {
        let text = models::to_json(model);
        let path = dir.join(model_file_name(model.kind()));
        fs::write(&path, &text).map_err(io_err(&path))?;
        if model.kind() == outcome.selected {
            version = model_version(model.kind(), &text);
        }
    }
    let manifest = Manifest {
        kind: outcome.selected,
        model_file: model_file_name(outcome.selected),
        version,
        trained_at,
        metrics: outcome.report(outcome.selected).clone(),
        seed: outcome.split.seed,
    };
    let path = dir.join(MANIFEST_FILE);
    let text = to_canonical_string(&manifest).expect("finite metrics");
    fs::write(&path, text).map_err(io_err(&path))?;
    Ok(manifest)
}

/// A model ready to serve, with whatever metadata came with it.
#[derive(Debug, Clone)]
pub struct LoadedModel {
    pub model: FireModel,
    pub version: String,
    pub trained_at: Option<String>,
    pub metrics: Option<EvalReport>,
}

impl LoadedModel {
    /// Accepts a manifest, a directory holding one, or a bare model file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let mut path = path.as_ref().to_path_buf();
        if path.is_dir() {
            path = path.join(MANIFEST_FILE);
        }
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        let doc: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| ModelError::MalformedDocument(e.to_string()))?;
        if doc.get("model_file").is_none() {
            let model = models::from_json(&text)?;
            return Ok(LoadedModel {
                version: model_version(model.kind(), &text),
                model,
                trained_at: None,
                metrics: None,
            });
        }
        let manifest: Manifest =
            serde_json::from_value(doc).map_err(|e| PipelineError::Manifest(e.to_string()))?;
        let model_path = path
            .parent()
            .unwrap_or_else(|| Path::new("."))
            .join(&manifest.model_file);
        let model_text = fs::read_to_string(&model_path).map_err(io_err(&model_path))?;
        let model = models::from_json(&model_text)?;
        if model.kind() != manifest.kind {
            return Err(PipelineError::Manifest(format!(
                "manifest names {} but {} holds {}",
                manifest.kind,
                manifest.model_file,
                model.kind()
            )));
        }
        Ok(LoadedModel {
            model,
            version: manifest.version,
            trained_at: manifest.trained_at,
            metrics: Some(manifest.metrics),
        })
    }

    pub fn kind(&self) -> ModelKind {
        self.model.kind()
    }

    pub fn predict(&self, features: &FeatureVector) -> PredictResponse {
        let p = self.model.predict(features);
        PredictResponse {
            probability: p.probability,
            label: p.label,
            model_kind: self.kind(),
            model_version: self.version.clone(),
        }
    }

    pub fn metadata(&self) -> ModelMetadata {
        ModelMetadata {
            kind: self.kind(),
            version: self.version.clone(),
            trained_at: self.trained_at.clone(),
            metrics: self.metrics.clone(),
        }
    }
}

/// Body of a prediction; shared by the HTTP service and `predict --format json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictResponse {
    pub probability: f64,
    #[serde(with = "label_text")]
    pub label: Label,
    pub model_kind: ModelKind,
    pub model_version: String,
}

impl PredictResponse {
    /// Compact JSON plus a trailing newline.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("finite probability") + "\n"
    }

    /// `probability: 0.1234` and `label: fire` lines.
    pub fn to_text(&self) -> String {
        format!(
            "probability: {:.4}\nlabel: {}\n",
            self.probability,
            self.label.as_str()
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMetadata {
    pub kind: ModelKind,
    pub version: String,
    pub trained_at: Option<String>,
    pub metrics: Option<EvalReport>,
}

mod label_text {
    use serde::{de, Deserialize, Deserializer, Serializer};

    use crate::dataset::Label;

    pub fn serialize<S: Serializer>(l: &Label, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(l.as_str())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Label, D::Error> {
        let s = String::deserialize(d)?;
        Label::parse(&s).ok_or_else(|| de::Error::custom(format!("unknown label `{s}`")))
    }
}

//! Model files: `{format_version, kind, scaler, parameters}` in canonical JSON.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use super::{FireModel, ModelError, ModelKind};
use crate::json::to_canonical_string;

pub const FORMAT_VERSION: u64 = 1;

fn split_scaler<T: Serialize>(model: &T) -> (Value, Value) {
    let mut v = serde_json::to_value(model).expect("models serialize");
    let scaler = v
        .as_object_mut()
        .and_then(|m| m.remove("scaler"))
        .expect("every model carries a scaler");
    (scaler, v)
}

pub fn to_json(model: &FireModel) -> String {
    let (scaler, parameters) = match model {
        FireModel::Logistic(m) => split_scaler(m),
        FireModel::Forest(m) => split_scaler(m),
        FireModel::Svm(m) => split_scaler(m),
    };
    let mut doc = Map::new();
    doc.insert("format_version".into(), FORMAT_VERSION.into());
    doc.insert("kind".into(), model.kind().as_str().into());
    doc.insert("scaler".into(), scaler);
    doc.insert("parameters".into(), parameters);
    to_canonical_string(&Value::Object(doc)).expect("finite model parameters")
}

fn malformed(msg: impl Into<String>) -> ModelError {
    ModelError::MalformedDocument(msg.into())
}

fn rebuild<T: DeserializeOwned>(mut parameters: Value, scaler: Value) -> Result<T, ModelError> {
    let obj = parameters
        .as_object_mut()
        .ok_or_else(|| malformed("`parameters` must be an object"))?;
    obj.insert("scaler".into(), scaler);
    serde_json::from_value(parameters).map_err(|e| malformed(e.to_string()))
}

pub fn from_json(text: &str) -> Result<FireModel, ModelError> {
    let doc: Value = serde_json::from_str(text).map_err(|e| malformed(e.to_string()))?;
    let obj = doc
        .as_object()
        .ok_or_else(|| malformed("document must be an object"))?;
    let version = obj
        .get("format_version")
        .and_then(Value::as_u64)
        .ok_or_else(|| malformed("missing or invalid `format_version`"))?;
    if version != FORMAT_VERSION {
        return Err(ModelError::UnsupportedVersion(version));
    }
    let kind: ModelKind = obj
        .get("kind")
        .and_then(Value::as_str)
        .ok_or_else(|| malformed("missing `kind`"))?
        .parse()
        .map_err(malformed)?;
    let scaler = obj
        .get("scaler")
        .cloned()
        .ok_or_else(|| malformed("missing `scaler`"))?;
    let parameters = obj
        .get("parameters")
        .cloned()
        .ok_or_else(|| malformed("missing `parameters`"))?;

    let model = match kind {
        ModelKind::LogisticRegression => FireModel::Logistic(rebuild(parameters, scaler)?),
        ModelKind::RandomForest => FireModel::Forest(rebuild(parameters, scaler)?),
        ModelKind::Svm => FireModel::Svm(rebuild(parameters, scaler)?),
    };
    check_consistency(&model)?;
    Ok(model)
}

fn check_consistency(model: &FireModel) -> Result<(), ModelError> {
    use super::svm::SvmKernel;
    let dim = model.dim();
    let scaler_ok = |s: &crate::dataset::ScalingParams| s.mean.len() == s.stddev.len() && dim > 0;
    let ok = match model {
        FireModel::Logistic(m) => scaler_ok(&m.scaler) && m.coefficients.len() == dim,
        FireModel::Forest(m) => {
            scaler_ok(&m.scaler) && !m.trees.is_empty() && m.trees.len() == m.n_trees
        }
        FireModel::Svm(m) => {
            scaler_ok(&m.scaler)
                && match &m.kernel {
                    SvmKernel::Linear { weights } => weights.len() == dim,
                    SvmKernel::Rbf {
                        support_vectors,
                        dual_coef,
                        ..
                    } => {
                        support_vectors.len() == dual_coef.len()
                            && support_vectors.iter().all(|s| s.len() == dim)
                    }
                }
        }
    };
    if ok {
        Ok(())
    } else {
        Err(malformed("parameter shapes are inconsistent"))
    }
}

pub fn save_model(model: &FireModel, path: impl AsRef<Path>) -> Result<(), ModelError> {
    std::fs::write(path, to_json(model))?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<FireModel, ModelError> {
    from_json(&std::fs::read_to_string(path)?)
}

//! Binary classification metrics with fire as the positive class, ROC/AUC,
//! and model selection.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Label, LabeledSample};
use crate::models::{FireModel, ModelError, ModelKind};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("prediction and truth lengths differ ({pred} vs {truth})")]
    LengthMismatch { pred: usize, truth: usize },
    #[error("empty input")]
    EmptyInput,
    #[error("truth labels contain a single class")]
    SingleClassTruth,
    #[error("empty test set")]
    EmptyTestSet,
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.tp + self.tn, self.total())
    }

    /// 0 when nothing was predicted positive.
    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    /// 0 when there are no positives.
    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    /// 0 when precision and recall are both 0.
    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }
}

pub fn confusion(pred: &[Label], truth: &[Label]) -> Result<ConfusionMatrix, MetricsError> {
    if pred.len() != truth.len() {
        return Err(MetricsError::LengthMismatch {
            pred: pred.len(),
            truth: truth.len(),
        });
    }
    if pred.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let mut c = ConfusionMatrix::default();
    for (p, t) in pred.iter().zip(truth) {
        match (p.is_fire(), t.is_fire()) {
            (true, true) => c.tp += 1,
            (false, false) => c.tn += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    Ok(c)
}

pub fn accuracy(c: &ConfusionMatrix) -> f64 {
    c.accuracy()
}

pub fn precision(c: &ConfusionMatrix) -> f64 {
    c.precision()
}

pub fn recall(c: &ConfusionMatrix) -> f64 {
    c.recall()
}

pub fn f1(c: &ConfusionMatrix) -> f64 {
    c.f1()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    /// Score cut-off producing this point (`score >= threshold` is positive);
    /// absent for the origin.
    pub threshold: Option<f64>,
}

/// ROC curve from (0,0) to (1,1) with thresholds descending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
}

/// Sweeps the threshold down through the distinct scores. Tied scores enter
/// together, producing one vertex.
pub fn roc_curve(scores: &[f64], truth: &[Label]) -> Result<RocCurve, MetricsError> {
    if scores.len() != truth.len() {
        return Err(MetricsError::LengthMismatch {
            pred: scores.len(),
            truth: truth.len(),
        });
    }
    let pos = truth.iter().filter(|l| l.is_fire()).count() as u64;
    let neg = truth.len() as u64 - pos;
    if pos == 0 || neg == 0 {
        return Err(MetricsError::SingleClassTruth);
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![RocPoint {
        fpr: 0.0,
        tpr: 0.0,
        threshold: None,
    }];
    let (mut tp, mut fp) = (0u64, 0u64);
    let mut k = 0;
    while k < order.len() {
        let s = scores[order[k]];
        while k < order.len() && scores[order[k]] == s {
            if truth[order[k]].is_fire() {
                tp += 1;
            } else {
                fp += 1;
            }
            k += 1;
        }
        points.push(RocPoint {
            fpr: fp as f64 / neg as f64,
            tpr: tp as f64 / pos as f64,
            threshold: Some(s),
        });
    }
    Ok(RocCurve { points })
}

/// Trapezoidal area under the curve.
pub fn auc(curve: &RocCurve) -> f64 {
    curve
        .points
        .windows(2)
        .map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0)
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model_kind: ModelKind,
    pub n_samples: u64,
    pub confusion: ConfusionMatrix,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Absent when the test set holds a single class.
    pub auc: Option<f64>,
    pub roc: Option<RocCurve>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl EvalReport {
    /// Builds a report from labels and probability scores.
    pub fn from_predictions(
        model_kind: ModelKind,
        pred: &[Label],
        scores: &[f64],
        truth: &[Label],
    ) -> Result<Self, MetricsError> {
        let c = confusion(pred, truth)?;
        let (roc, auc, warnings) = match roc_curve(scores, truth) {
            Ok(curve) => {
                let a = auc(&curve);
                (Some(curve), Some(a), vec![])
            }
            Err(MetricsError::SingleClassTruth) => (
                None,
                None,
                vec!["single_class_test_set: auc omitted".to_string()],
            ),
            Err(e) => return Err(e),
        };
        Ok(EvalReport {
            model_kind,
            n_samples: c.total(),
            confusion: c,
            accuracy: c.accuracy(),
            precision: c.precision(),
            recall: c.recall(),
            f1: c.f1(),
            auc,
            roc,
            warnings,
        })
    }
}

/// Scores a model on held-out samples using its own decision rule for
/// labels and its probability output for the ROC.
pub fn evaluate(model: &FireModel, test: &[LabeledSample]) -> Result<EvalReport, MetricsError> {
    if test.is_empty() {
        return Err(MetricsError::EmptyTestSet);
    }
    let mut pred = Vec::with_capacity(test.len());
    let mut scores = Vec::with_capacity(test.len());
    for s in test {
        let x = s.features.to_array();
        pred.push(model.predict_label(&x)?);
        scores.push(model.predict_probability(&x)?);
    }
    let truth: Vec<Label> = test.iter().map(|s| s.label).collect();
    EvalReport::from_predictions(model.kind(), &pred, &scores, &truth)
}

/// Highest accuracy wins; ties go to higher F1, then SVM over random forest
/// over logistic regression.
pub fn select_model(reports: &[EvalReport]) -> Result<ModelKind, MetricsError> {
    reports
        .iter()
        .max_by(|a, b| {
            a.accuracy
                .total_cmp(&b.accuracy)
                .then(a.f1.total_cmp(&b.f1))
                .then(a.model_kind.preference().cmp(&b.model_kind.preference()))
        })
        .map(|r| r.model_kind)
        .ok_or(MetricsError::EmptyInput)
}

/// Aligned text table: accuracy as a percentage, other metrics as fractions.
pub fn render_table(reports: &[EvalReport]) -> String {
    let header = ["Model", "Accuracy", "Precision", "Recall", "F1 Score", "AUC"];
    let rows: Vec<[String; 6]> = reports
        .iter()
        .map(|r| {
            [
                r.model_kind.display_name().to_string(),
                format!("{:.2}", r.accuracy * 100.0),
                format!("{:.2}", r.precision),
                format!("{:.2}", r.recall),
                format!("{:.2}", r.f1),
                r.auc.map_or_else(|| "-".to_string(), |a| format!("{a:.3}")),
            ]
        })
        .collect();
    let mut widths = header.map(str::len);
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    let line = |cells: &[&str], out: &mut String| {
        for (i, (cell, w)) in cells.iter().zip(widths).enumerate() {
            if i == 0 {
                let _ = write!(out, "{cell:<w$}");
            } else {
                let _ = write!(out, "  {cell:>w$}");
            }
        }
        out.push('\n');
    };
    line(&header, &mut out);
    let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
    line(&rule.iter().map(String::as_str).collect::<Vec<_>>(), &mut out);
    for row in &rows {
        line(&row.iter().map(String::as_str).collect::<Vec<_>>(), &mut out);
    }
    out
}

//! Logistic regression fitted by full-batch gradient descent on the mean
//! negative log-likelihood.

use serde::{Deserialize, Serialize};

use super::{check_dim, sigmoid, ModelError, TrainConfig, TrainingData};
use crate::dataset::{Label, ScalingParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub scaler: ScalingParams,
}

impl LogisticModel {
    /// Linear predictor on the standardized input.
    pub fn linear_term(&self, x: &[f64]) -> Result<f64, ModelError> {
        check_dim(self.coefficients.len(), x)?;
        let z = self.scaler.transform(x);
        Ok(self.intercept + dot(&self.coefficients, &z))
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<f64, ModelError> {
        self.linear_term(x).map(sigmoid)
    }

    pub fn predict_label(&self, x: &[f64]) -> Result<Label, ModelError> {
        self.predict_proba(x).map(|p| Label::from_bool(p >= 0.5))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// log(1 + e^z) without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Mean negative log-likelihood and its gradient. `theta[0]` is the
/// intercept, `theta[1..]` the coefficients; `rows` are already standardized.
pub fn loss_and_gradient(theta: &[f64], rows: &[Vec<f64>], labels: &[Label]) -> (f64, Vec<f64>) {
    let n = rows.len() as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; theta.len()];
    for (x, y) in rows.iter().zip(labels) {
        let z = theta[0] + dot(&theta[1..], x);
        let y = y.as_f64();
        loss += softplus(z) - y * z;
        let r = sigmoid(z) - y;
        grad[0] += r;
        for (g, xi) in grad[1..].iter_mut().zip(x) {
            *g += r * xi;
        }
    }
    grad.iter_mut().for_each(|g| *g /= n);
    (loss / n, grad)
}

/// Fits the model and returns the loss after every step (index 0 is the
/// loss at the all-zero start).
pub fn train_with_history(
    data: &TrainingData,
    cfg: &TrainConfig,
) -> Result<(LogisticModel, Vec<f64>), ModelError> {
    if data.len() < 2 || !data.has_both_classes() {
        return Err(ModelError::SingleClassInput);
    }
    let lc = &cfg.logreg;
    let scaler = ScalingParams::fit(data.rows()).map_err(|_| ModelError::EmptyInput)?;
    let rows: Vec<Vec<f64>> = data.rows().iter().map(|r| scaler.transform(r)).collect();

    let mut theta = vec![0.0; data.dim() + 1];
    let (mut loss, mut grad) = loss_and_gradient(&theta, &rows, data.labels());
    let mut history = vec![loss];
    for _ in 0..lc.max_iters {
        for (t, g) in theta.iter_mut().zip(&grad) {
            *t -= lc.learning_rate * g;
        }
        let (next_loss, next_grad) = loss_and_gradient(&theta, &rows, data.labels());
        if !next_loss.is_finite() || next_grad.iter().any(|g| !g.is_finite()) {
            return Err(ModelError::NonFiniteLoss);
        }
        let decrease = loss - next_loss;
        loss = next_loss;
        grad = next_grad;
        history.push(loss);
        if decrease < lc.tol {
            break;
        }
    }

    let model = LogisticModel {
        intercept: theta[0],
        coefficients: theta[1..].to_vec(),
        scaler,
    };
    Ok((model, history))
}

pub fn train(data: &TrainingData, cfg: &TrainConfig) -> Result<LogisticModel, ModelError> {
    train_with_history(data, cfg).map(|(m, _)| m)
}

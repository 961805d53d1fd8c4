//! Support vector classifier.
//!
//! The linear kernel is trained in the primal with Pegasos-style stochastic
//! subgradient steps on the regularized hinge loss; the bias is carried as
//! an extra weight on a constant input. The RBF kernel is trained in the dual
//! with simplified SMO. Decision values are mapped to probabilities by a
//! Platt sigmoid whose offset is pinned to zero, so `d >= 0` and
//! `p >= 0.5` always agree.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_dim, sigmoid, KernelChoice, ModelError, TrainConfig, TrainingData};
use crate::dataset::{Label, ScalingParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SvmKernel {
    Linear {
        weights: Vec<f64>,
    },
    Rbf {
        gamma: f64,
        /// Standardized support vectors.
        support_vectors: Vec<Vec<f64>>,
        /// `alpha_i * y_i` for each support vector.
        dual_coef: Vec<f64>,
        /// Box constraint the duals were trained under.
        c: f64,
    },
}

/// Probability calibration `p = 1 / (1 + exp(a * d + b))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Platt {
    pub a: f64,
    pub b: f64,
}

impl Platt {
    pub fn probability(&self, d: f64) -> f64 {
        sigmoid(-(self.a * d + self.b))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub kernel: SvmKernel,
    pub bias: f64,
    pub platt: Platt,
    pub scaler: ScalingParams,
    /// False when SMO ran out of sweeps before meeting its stopping rule.
    pub converged: bool,
}

pub fn rbf(u: &[f64], v: &[f64], gamma: f64) -> f64 {
    let d2: f64 = u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
    (-gamma * d2).exp()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl SvmModel {
    /// Decision value on an already standardized input.
    pub fn decision_scaled(&self, z: &[f64]) -> f64 {
        match &self.kernel {
            SvmKernel::Linear { weights } => dot(weights, z) + self.bias,
            SvmKernel::Rbf {
                gamma,
                support_vectors,
                dual_coef,
                ..
            } => {
                support_vectors
                    .iter()
                    .zip(dual_coef)
                    .map(|(s, a)| a * rbf(s, z, *gamma))
                    .sum::<f64>()
                    + self.bias
            }
        }
    }

    /// Decision value for a raw input.
    pub fn decision(&self, x: &[f64]) -> Result<f64, ModelError> {
        check_dim(self.scaler.dim(), x)?;
        Ok(self.decision_scaled(&self.scaler.transform(x)))
    }

    /// Fire iff the decision value is non-negative.
    pub fn predict_label(&self, x: &[f64]) -> Result<Label, ModelError> {
        self.decision(x).map(label_of)
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<f64, ModelError> {
        self.decision(x).map(|d| self.platt.probability(d))
    }

    /// Geometric margin width `2 / ||w||` of a linear model.
    pub fn margin(&self) -> Result<f64, ModelError> {
        match &self.kernel {
            SvmKernel::Linear { weights } => {
                let norm = dot(weights, weights).sqrt();
                if norm == 0.0 {
                    Err(ModelError::ZeroWeightVector)
                } else {
                    Ok(2.0 / norm)
                }
            }
            SvmKernel::Rbf { .. } => Err(ModelError::NotLinearKernel),
        }
    }
}

pub fn label_of(d: f64) -> Label {
    Label::from_bool(d >= 0.0)
}

/// `max(0, 1 - y d)` for `y` in {-1, +1}.
pub fn hinge_loss(y: f64, d: f64) -> Result<f64, ModelError> {
    if y != 1.0 && y != -1.0 {
        return Err(ModelError::InvalidLabel(y));
    }
    Ok((1.0 - y * d).max(0.0))
}

pub fn train(data: &TrainingData, cfg: &TrainConfig) -> Result<SvmModel, ModelError> {
    if !data.has_both_classes() {
        return Err(ModelError::SingleClassInput);
    }
    let sc = &cfg.svm;
    let scaler = ScalingParams::fit(data.rows()).map_err(|_| ModelError::EmptyInput)?;
    let rows: Vec<Vec<f64>> = data.rows().iter().map(|r| scaler.transform(r)).collect();
    let y: Vec<f64> = data.labels().iter().map(|l| l.sign()).collect();

    let (kernel, bias, converged) = match sc.kernel {
        KernelChoice::Linear => {
            let (weights, bias) = pegasos(&rows, &y, sc.c, sc.epochs, cfg.seed);
            (SvmKernel::Linear { weights }, bias, true)
        }
        KernelChoice::Rbf => {
            let gamma = sc.gamma.unwrap_or(1.0 / data.dim() as f64);
            let fit = smo(&rows, &y, gamma, sc.c, sc.tol, sc.max_passes, sc.max_sweeps, cfg.seed);
            if !fit.converged {
                log::warn!(
                    "SMO hit its sweep budget ({}) before converging; keeping the last iterate",
                    sc.max_sweeps
                );
            }
            let (support_vectors, dual_coef) = rows
                .iter()
                .zip(fit.alpha.iter().zip(&y))
                .filter(|(_, (a, _))| **a > 0.0)
                .map(|(r, (a, yi))| (r.clone(), a * yi))
                .unzip();
            (
                SvmKernel::Rbf {
                    gamma,
                    support_vectors,
                    dual_coef,
                    c: sc.c,
                },
                fit.bias,
                fit.converged,
            )
        }
        KernelChoice::Polynomial => {
            return Err(ModelError::NotImplemented("polynomial kernel".into()));
        }
    };

    let mut model = SvmModel {
        kernel,
        bias,
        platt: Platt { a: 0.0, b: 0.0 },
        scaler,
        converged,
    };
    let decisions: Vec<f64> = rows.iter().map(|z| model.decision_scaled(z)).collect();
    model.platt = fit_platt(&decisions, data.labels());
    Ok(model)
}

/// Primal subgradient descent on `(1/n) sum hinge + (lambda/2) ||w||^2` with
/// `lambda = 1/(C n)` and step `1/(lambda t)`. Returns `(w, b)` averaged over
/// the second half of the steps; the last iterate alone is too noisy.
pub fn pegasos(rows: &[Vec<f64>], y: &[f64], c: f64, epochs: usize, seed: u64) -> (Vec<f64>, f64) {
    let n = rows.len();
    let dim = rows[0].len();
    let lambda = 1.0 / (c * n as f64);
    let radius = 1.0 / lambda.sqrt();
    // last slot is the bias, fed by a constant 1 input
    let mut w = vec![0.0; dim + 1];
    let mut avg = vec![0.0; dim + 1];
    let total = epochs.max(1) * n;
    let burn_in = total / 2;
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = 0usize;
    for _ in 0..epochs.max(1) {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let d = dot(&w[..dim], &rows[i]) + w[dim];
            let shrink = 1.0 - eta * lambda;
            w.iter_mut().for_each(|wj| *wj *= shrink);
            if y[i] * d < 1.0 {
                for (wj, xj) in w.iter_mut().zip(&rows[i]) {
                    *wj += eta * y[i] * xj;
                }
                w[dim] += eta * y[i];
            }
            let norm = dot(&w, &w).sqrt();
            if norm > radius {
                let s = radius / norm;
                w.iter_mut().for_each(|wj| *wj *= s);
            }
            if t > burn_in {
                let k = (t - burn_in) as f64;
                for (a, wj) in avg.iter_mut().zip(&w) {
                    *a += (wj - *a) / k;
                }
            }
        }
    }
    let b = avg.pop().expect("bias slot");
    (avg, b)
}

pub struct SmoFit {
    pub alpha: Vec<f64>,
    pub bias: f64,
    pub converged: bool,
    pub sweeps: usize,
}

/// Simplified SMO: sweep over all multipliers, pair each KKT violator with a
/// random partner, stop after `max_passes` consecutive sweeps without change.
#[allow(clippy::too_many_arguments)]
pub fn smo(
    rows: &[Vec<f64>],
    y: &[f64],
    gamma: f64,
    c: f64,
    tol: f64,
    max_passes: usize,
    max_sweeps: usize,
    seed: u64,
) -> SmoFit {
    let n = rows.len();
    let k: Vec<Vec<f64>> = rows
        .iter()
        .map(|u| rows.iter().map(|v| rbf(u, v, gamma)).collect())
        .collect();
    let mut alpha = vec![0.0; n];
    let mut b = 0.0;
    // f[i] = sum_k alpha_k y_k K(k, i) + b
    let mut f = vec![0.0; n];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut passes = 0;
    let mut sweeps = 0;

    while passes < max_passes && sweeps < max_sweeps {
        let mut changed = 0;
        for i in 0..n {
            let ei = f[i] - y[i];
            let violates = (y[i] * ei < -tol && alpha[i] < c) || (y[i] * ei > tol && alpha[i] > 0.0);
            if !violates || n < 2 {
                continue;
            }
            let mut j = rng.random_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            let ej = f[j] - y[j];
            let (ai_old, aj_old) = (alpha[i], alpha[j]);
            let (lo, hi) = if y[i] != y[j] {
                ((aj_old - ai_old).max(0.0), (c + aj_old - ai_old).min(c))
            } else {
                ((ai_old + aj_old - c).max(0.0), (ai_old + aj_old).min(c))
            };
            if lo >= hi {
                continue;
            }
            let eta = 2.0 * k[i][j] - k[i][i] - k[j][j];
            if eta >= 0.0 {
                continue;
            }
            let aj = (aj_old - y[j] * (ei - ej) / eta).clamp(lo, hi);
            if (aj - aj_old).abs() < 1e-5 {
                continue;
            }
            let ai = ai_old + y[i] * y[j] * (aj_old - aj);
            let (dai, daj) = (ai - ai_old, aj - aj_old);
            let b1 = b - ei - y[i] * dai * k[i][i] - y[j] * daj * k[i][j];
            let b2 = b - ej - y[i] * dai * k[i][j] - y[j] * daj * k[j][j];
            let b_new = if ai > 0.0 && ai < c {
                b1
            } else if aj > 0.0 && aj < c {
                b2
            } else {
                0.5 * (b1 + b2)
            };
            let db = b_new - b;
            for (m, fm) in f.iter_mut().enumerate() {
                *fm += y[i] * dai * k[i][m] + y[j] * daj * k[j][m] + db;
            }
            alpha[i] = ai;
            alpha[j] = aj;
            b = b_new;
            changed += 1;
        }
        sweeps += 1;
        passes = if changed == 0 { passes + 1 } else { 0 };
    }

    SmoFit {
        alpha,
        bias: b,
        converged: passes >= max_passes,
        sweeps,
    }
}

/// Fits the Platt slope `a` (offset fixed at 0) by Newton's method on the
/// cross-entropy against Platt's smoothed targets. The slope is kept
/// strictly negative so larger decision values mean higher fire probability.
pub fn fit_platt(decisions: &[f64], labels: &[Label]) -> Platt {
    const MIN_SLOPE: f64 = -1e-6;
    let n_pos = labels.iter().filter(|l| l.is_fire()).count() as f64;
    let n_neg = labels.len() as f64 - n_pos;
    let hi = (n_pos + 1.0) / (n_pos + 2.0);
    let lo = 1.0 / (n_neg + 2.0);
    let targets: Vec<f64> = labels
        .iter()
        .map(|l| if l.is_fire() { hi } else { lo })
        .collect();

    let loss = |a: f64| -> f64 {
        decisions
            .iter()
            .zip(&targets)
            .map(|(&d, &t)| {
                // -[t ln p + (1-t) ln(1-p)] with p = sigmoid(-a d)
                let f = a * d;
                let log1pexp = f.max(0.0) + (-f.abs()).exp().ln_1p();
                t * log1pexp + (1.0 - t) * (log1pexp - f)
            })
            .sum()
    };

    let mut a = 0.0;
    let mut current = loss(a);
    for _ in 0..100 {
        let (mut g, mut h) = (0.0, 0.0);
        for (&d, &t) in decisions.iter().zip(&targets) {
            let p = sigmoid(-a * d);
            g += d * (t - p);
            h += d * d * p * (1.0 - p);
        }
        if h <= 1e-300 {
            break;
        }
        let step = g / h;
        let mut scale = 1.0;
        let mut improved = false;
        while scale > 1e-10 {
            let cand = a - scale * step;
            let l = loss(cand);
            if l <= current {
                a = cand;
                current = l;
                improved = true;
                break;
            }
            scale *= 0.5;
        }
        if !improved || (scale * step).abs() < 1e-12 {
            break;
        }
    }
    Platt {
        a: a.min(MIN_SLOPE),
        b: 0.0,
    }
}

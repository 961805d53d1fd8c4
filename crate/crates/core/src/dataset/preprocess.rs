use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Column, DatasetError, FeatureVector, LabeledSample, RawRecord};

pub const SPLIT_TRAIN_FRACTION: f64 = 0.8;
const MIN_SPLIT_SAMPLES: usize = 5;

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Linear-interpolation quantile (numpy's default) over sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

fn sorted_present(records: &[RawRecord], col: Column) -> Vec<f64> {
    let mut v: Vec<f64> = records.iter().filter_map(|r| r.get(col)).collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Replaces each missing numeric cell with the median of the present values
/// in its column.
pub fn impute_missing(records: &[RawRecord]) -> Result<Vec<RawRecord>, DatasetError> {
    let mut out = records.to_vec();
    for col in Column::ALL {
        if records.iter().all(|r| r.get(col).is_some()) {
            continue;
        }
        let present = sorted_present(records, col);
        if present.is_empty() {
            return Err(DatasetError::AllMissing(col.name().into()));
        }
        let fill = median(&present);
        for r in out.iter_mut().filter(|r| r.get(col).is_none()) {
            r.set(col, Some(fill));
        }
    }
    Ok(out)
}

/// Drops records whose temp, rh or oxy falls outside the 1.5·IQR fences of
/// its column. Fences are computed over the whole input; order is kept.
pub fn remove_outliers(records: &[RawRecord]) -> Result<Vec<RawRecord>, DatasetError> {
    if records.is_empty() {
        return Err(DatasetError::EmptyInput);
    }
    let fences: Vec<(Column, f64, f64)> = Column::SELECTED
        .iter()
        .filter_map(|&col| {
            let v = sorted_present(records, col);
            if v.is_empty() {
                return None;
            }
            let (q1, q3) = (quantile(&v, 0.25), quantile(&v, 0.75));
            let iqr = q3 - q1;
            Some((col, q1 - 1.5 * iqr, q3 + 1.5 * iqr))
        })
        .collect();

    let kept: Vec<RawRecord> = records
        .iter()
        .filter(|r| {
            fences.iter().all(|&(col, lo, hi)| match r.get(col) {
                Some(x) => x >= lo && x <= hi,
                None => true,
            })
        })
        .cloned()
        .collect();
    if kept.is_empty() {
        return Err(DatasetError::EmptyAfterFiltering);
    }
    Ok(kept)
}

/// Validates every record, reporting the first failure with its 1-based row.
pub fn validate_records(records: &[RawRecord]) -> Result<(), DatasetError> {
    records
        .iter()
        .enumerate()
        .try_for_each(|(i, r)| r.validate(i + 1))
}

/// Keeps temperature, humidity and oxygen plus the label.
///
/// Fails with `MissingValue` when one of the three predictors is absent;
/// impute first.
pub fn select_features(r: &RawRecord) -> Result<LabeledSample, DatasetError> {
    let get = |col: Column| {
        r.get(col).ok_or_else(|| DatasetError::MissingValue {
            row: 0,
            column: col.name().into(),
        })
    };
    Ok(LabeledSample {
        features: FeatureVector {
            temp: get(Column::Temp)?,
            rh: get(Column::Rh)?,
            oxy: get(Column::Oxy)?,
        },
        label: r.class,
    })
}

/// Per-feature z-score parameters. Standard deviations use the population
/// divisor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingParams {
    pub mean: Vec<f64>,
    pub stddev: Vec<f64>,
}

impl ScalingParams {
    /// Fits over arbitrary-dimension rows. All rows must share a length.
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self, DatasetError> {
        let first = rows.first().ok_or(DatasetError::EmptyInput)?;
        let dim = first.len();
        let n = rows.len() as f64;
        let mut mean = vec![0.0; dim];
        for row in rows {
            for (m, x) in mean.iter_mut().zip(row) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; dim];
        for row in rows {
            for ((v, x), m) in var.iter_mut().zip(row).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        let stddev = var.into_iter().map(|v| (v / n).sqrt()).collect();
        Ok(ScalingParams { mean, stddev })
    }

    /// Scaling that leaves inputs unchanged.
    pub fn identity(dim: usize) -> Self {
        ScalingParams {
            mean: vec![0.0; dim],
            stddev: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Standardizes one row. Zero-variance coordinates map to 0.
    pub fn transform(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.mean.iter().zip(&self.stddev))
            .map(|(&x, (&m, &s))| if s == 0.0 { 0.0 } else { (x - m) / s })
            .collect()
    }
}

/// Fits scaling parameters on training samples only.
pub fn fit_scaler(train: &[LabeledSample]) -> Result<ScalingParams, DatasetError> {
    let rows: Vec<Vec<f64>> = train.iter().map(|s| s.features.to_array().to_vec()).collect();
    ScalingParams::fit(&rows)
}

pub fn apply_scaler(params: &ScalingParams, v: &FeatureVector) -> FeatureVector {
    let t = params.transform(&v.to_array());
    FeatureVector {
        temp: t[0],
        rh: t[1],
        oxy: t[2],
    }
}

/// An 80/20 train/test partition. Indices refer to the input order.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitResult {
    pub train: Vec<LabeledSample>,
    pub test: Vec<LabeledSample>,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    pub seed: u64,
}

/// Seeded shuffle of indices; the first `floor(0.8 n)` go to training.
/// No stratification.
pub fn split(samples: &[LabeledSample], seed: u64) -> Result<SplitResult, DatasetError> {
    let n = samples.len();
    if n < MIN_SPLIT_SAMPLES {
        return Err(DatasetError::TooFewSamples {
            needed: MIN_SPLIT_SAMPLES,
            got: n,
        });
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = (n * 4) / 5;
    let test_indices = idx.split_off(n_train);
    let train_indices = idx;
    Ok(SplitResult {
        train: train_indices.iter().map(|&i| samples[i]).collect(),
        test: test_indices.iter().map(|&i| samples[i]).collect(),
        train_indices,
        test_indices,
        seed,
    })
}

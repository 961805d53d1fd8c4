//! Bagged ensemble of CART trees with per-node feature subsampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tree::{build_tree, TreeNode, TreeParams};
use super::{check_dim, ModelError, TrainConfig, TrainingData};
use crate::dataset::{Label, ScalingParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<TreeNode>,
    pub n_trees: usize,
    pub feature_subset_size: usize,
    pub seed: u64,
    pub scaler: ScalingParams,
}

impl ForestModel {
    /// Number of trees voting fire for a raw input.
    pub fn fire_votes(&self, x: &[f64]) -> Result<usize, ModelError> {
        check_dim(self.scaler.dim(), x)?;
        let z = self.scaler.transform(x);
        Ok(self.trees.iter().filter(|t| t.predict(&z).is_fire()).count())
    }

    /// Majority label and fire-vote fraction. A tied vote is fire.
    pub fn predict(&self, x: &[f64]) -> Result<(Label, f64), ModelError> {
        let fire = self.fire_votes(x)?;
        Ok(aggregate_votes(fire, self.trees.len()))
    }
}

/// Majority vote over `n_trees` ballots, `fire` of which are for fire.
pub fn aggregate_votes(fire: usize, n_trees: usize) -> (Label, f64) {
    let label = Label::from_bool(2 * fire >= n_trees);
    (label, fire as f64 / n_trees as f64)
}

/// `n` indices drawn uniformly with replacement from `0..n`.
pub fn bootstrap_indices<R: Rng>(n: usize, rng: &mut R) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

/// Independent random stream for tree `i` of a forest seeded with `seed`.
pub fn tree_rng(seed: u64, i: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i as u64);
    rng
}

pub fn train(data: &TrainingData, cfg: &TrainConfig) -> Result<ForestModel, ModelError> {
    if !data.has_both_classes() {
        log::warn!("random forest trained on a single class; predictions will be constant");
    }
    let fc = &cfg.forest;
    let dim = data.dim();
    let subset = fc.subset_size(dim).clamp(1, dim);
    let params = TreeParams {
        max_depth: fc.max_depth,
        min_samples_split: fc.min_samples_split,
        feature_subset_size: subset,
    };
    let scaler = ScalingParams::fit(data.rows()).map_err(|_| ModelError::EmptyInput)?;
    let rows: Vec<Vec<f64>> = data.rows().iter().map(|r| scaler.transform(r)).collect();
    let all: Vec<usize> = (0..rows.len()).collect();

    let trees = (0..fc.n_trees)
        .map(|i| {
            let mut rng = tree_rng(cfg.seed, i);
            let idx = if fc.bootstrap {
                bootstrap_indices(rows.len(), &mut rng)
            } else {
                all.clone()
            };
            build_tree(&rows, data.labels(), &idx, &params, &mut rng)
        })
        .collect();

    Ok(ForestModel {
        trees,
        n_trees: fc.n_trees,
        feature_subset_size: subset,
        seed: cfg.seed,
        scaler,
    })
}

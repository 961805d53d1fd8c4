//! CART classification trees with Gini impurity.
//!
//! At each node a random subset of features is examined; candidate
//! thresholds are midpoints between consecutive distinct values. Split
//! quality is compared in exact integer arithmetic, so equal-impurity
//! candidates tie exactly and the lowest feature index, then the lowest
//! threshold, wins.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Label;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum TreeNode {
    Leaf {
        /// `[not_fire, fire]` training counts reaching this leaf.
        counts: [u32; 2],
    },
    Split {
        feature: usize,
        threshold: f64,
        /// Samples with `x[feature] <= threshold`.
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

impl TreeNode {
    fn leaf(labels: &[Label], idx: &[usize]) -> Self {
        let mut counts = [0u32; 2];
        for &i in idx {
            counts[labels[i].as_u8() as usize] += 1;
        }
        TreeNode::Leaf { counts }
    }

    /// Leaf reached by `x`.
    pub fn leaf_counts(&self, x: &[f64]) -> [u32; 2] {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { counts } => return *counts,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if x[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }

    /// Majority class of the leaf reached by `x`; an even leaf votes fire.
    pub fn predict(&self, x: &[f64]) -> Label {
        let [neg, pos] = self.leaf_counts(x);
        Label::from_bool(pos >= neg)
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn n_leaves(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Split { left, right, .. } => left.n_leaves() + right.n_leaves(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub feature_subset_size: usize,
}

/// Sum of squared class counts over the count, kept as a fraction so
/// candidates compare exactly. Larger means purer.
#[derive(Clone, Copy)]
struct Purity {
    num: u128,
    den: u128,
}

impl Purity {
    fn of_split(left: [u64; 2], right: [u64; 2]) -> Self {
        let sq = |c: [u64; 2]| (c[0] * c[0] + c[1] * c[1]) as u128;
        let nl = (left[0] + left[1]) as u128;
        let nr = (right[0] + right[1]) as u128;
        Purity {
            num: sq(left) * nr + sq(right) * nl,
            den: nl * nr,
        }
    }

    fn better_than(self, other: Purity) -> bool {
        self.num * other.den > other.num * self.den
    }
}

/// Weighted Gini impurity of a two-way split.
pub fn weighted_gini(left: [u64; 2], right: [u64; 2]) -> f64 {
    let gini = |c: [u64; 2]| {
        let n = (c[0] + c[1]) as f64;
        if n == 0.0 {
            return 0.0;
        }
        let (p0, p1) = (c[0] as f64 / n, c[1] as f64 / n);
        1.0 - p0 * p0 - p1 * p1
    };
    let nl = (left[0] + left[1]) as f64;
    let nr = (right[0] + right[1]) as f64;
    (nl * gini(left) + nr * gini(right)) / (nl + nr)
}

struct Candidate {
    feature: usize,
    threshold: f64,
    purity: Purity,
}

fn best_split_on(rows: &[Vec<f64>], labels: &[Label], idx: &[usize], feature: usize) -> Option<Candidate> {
    let mut pairs: Vec<(f64, usize)> = idx
        .iter()
        .map(|&i| (rows[i][feature], labels[i].as_u8() as usize))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut total = [0u64; 2];
    for &(_, c) in &pairs {
        total[c] += 1;
    }
    let mut left = [0u64; 2];
    let mut best: Option<Candidate> = None;
    for k in 0..pairs.len() - 1 {
        left[pairs[k].1] += 1;
        let (a, b) = (pairs[k].0, pairs[k + 1].0);
        if a == b {
            continue;
        }
        let right = [total[0] - left[0], total[1] - left[1]];
        let purity = Purity::of_split(left, right);
        if best.as_ref().is_none_or(|c| purity.better_than(c.purity)) {
            let mid = a + (b - a) / 2.0;
            let threshold = if mid < b { mid } else { a };
            best = Some(Candidate {
                feature,
                threshold,
                purity,
            });
        }
    }
    best
}

/// Grows a tree over the rows selected by `idx` (duplicates allowed, as in a
/// bootstrap sample).
pub fn build_tree<R: Rng>(
    rows: &[Vec<f64>],
    labels: &[Label],
    idx: &[usize],
    params: &TreeParams,
    rng: &mut R,
) -> TreeNode {
    grow(rows, labels, idx, 0, params, rng)
}

fn grow<R: Rng>(
    rows: &[Vec<f64>],
    labels: &[Label],
    idx: &[usize],
    depth: usize,
    params: &TreeParams,
    rng: &mut R,
) -> TreeNode {
    let fire = idx.iter().filter(|&&i| labels[i].is_fire()).count();
    let pure = fire == 0 || fire == idx.len();
    if idx.is_empty() || pure || depth >= params.max_depth || idx.len() < params.min_samples_split {
        return TreeNode::leaf(labels, idx);
    }

    let dim = rows[idx[0]].len();
    let k = params.feature_subset_size.clamp(1, dim);
    let mut features: Vec<usize> = if k == dim {
        (0..dim).collect()
    } else {
        rand::seq::index::sample(rng, dim, k).into_vec()
    };
    features.sort_unstable();

    let mut best: Option<Candidate> = None;
    for f in features {
        if let Some(c) = best_split_on(rows, labels, idx, f) {
            if best.as_ref().is_none_or(|b| c.purity.better_than(b.purity)) {
                best = Some(c);
            }
        }
    }
    let Some(split) = best else {
        return TreeNode::leaf(labels, idx);
    };

    let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = idx
        .iter()
        .partition(|&&i| rows[i][split.feature] <= split.threshold);
    TreeNode::Split {
        feature: split.feature,
        threshold: split.threshold,
        left: Box::new(grow(rows, labels, &left_idx, depth + 1, params, rng)),
        right: Box::new(grow(rows, labels, &right_idx, depth + 1, params, rng)),
    }
}

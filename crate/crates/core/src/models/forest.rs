//! Random forest: bootstrapped CART trees with per-split feature sampling.

use ndarray::ArrayView2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::models::tree::{build_tree, Criterion, Splitter, TreeModel, TreeSettings};
use crate::util::rng_stream;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<TreeModel>,
}

/// Fits `n_estimators` gini trees; each draws a bootstrap sample of the rows
/// (unless `bootstrap` is disabled) and considers `max_features` random
/// candidates per split. Probability output averages per-tree leaf class-1
/// fractions.
pub fn fit(
    x: ArrayView2<'_, f64>,
    y: &[u8],
    n_estimators: usize,
    max_features: usize,
    min_samples_leaf: usize,
    bootstrap: bool,
    seed: u64,
) -> ForestModel {
    let n = x.nrows();
    let settings = TreeSettings {
        criterion: Criterion::Gini,
        splitter: Splitter::Best,
        max_depth: usize::MAX,
        min_samples_split: 2,
        min_samples_leaf,
        max_features: Some(max_features.clamp(1, x.ncols())),
    };
    let trees = (0..n_estimators)
        .map(|t| {
            let mut rng = rng_stream(seed, &[0x7e8, t as u64]);
            let rows: Vec<usize> = if bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            build_tree(x, y, rows, &settings, &mut rng)
        })
        .collect();
    ForestModel { trees }
}

impl ForestModel {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.predict_row(row)).sum();
        sum / self.trees.len() as f64
    }

    /// Per-feature impurity gain summed over trees (unnormalized).
    pub fn total_gain(&self, n_features: usize) -> Vec<f64> {
        let mut total = vec![0.0; n_features];
        for tree in &self.trees {
            for (j, g) in tree.gain.iter().enumerate() {
                total[j] += g;
            }
        }
        total
    }
}

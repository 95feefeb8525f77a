//! Gradient-boosted trees with second-order logistic loss, exact greedy
//! splits, gamma-gated gain, hessian-gated children, and per-iteration
//! row/column subsampling.

use ndarray::ArrayView2;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::models::tree::Node;
use crate::util::{rng_stream, sigmoid};

const LAMBDA: f64 = 1.0; // leaf L2 regularization

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GboostModel {
    /// Initial margin: logit of the class-1 training prior.
    pub base_score: f64,
    pub trees: Vec<BoostTree>,
    /// Per-feature total split gain, for natural importance.
    pub gain: Vec<f64>,
    /// Training logistic loss after each boosting iteration.
    pub train_loss: Vec<f64>,
}

/// One regression tree over margins; leaves already include the learning
/// rate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoostTree {
    pub nodes: Vec<Node>,
}

impl BoostTree {
    fn predict_row(&self, row: &[f64]) -> f64 {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                Node::Leaf { prob, .. } => return *prob,
                Node::Split { feature, threshold, left, right } => {
                    at = if row[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GboostSettings {
    pub n_estimators: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    /// Minimum loss reduction to accept a split.
    pub gamma: f64,
    /// Minimum hessian sum in each child.
    pub min_child_weight: f64,
    pub subsample: f64,
    pub colsample_bytree: f64,
}

struct TreeGrower<'a> {
    x: ArrayView2<'a, f64>,
    grad: &'a [f64],
    hess: &'a [f64],
    columns: &'a [usize],
    settings: &'a GboostSettings,
    nodes: Vec<Node>,
    gain: Vec<f64>,
}

impl<'a> TreeGrower<'a> {
    fn grow(&mut self, rows: &mut Vec<usize>, depth: usize) -> usize {
        let g: f64 = rows.iter().map(|&r| self.grad[r]).sum();
        let h: f64 = rows.iter().map(|&r| self.hess[r]).sum();
        let leaf_weight = -g / (h + LAMBDA) * self.settings.learning_rate;
        let make_leaf = |nodes: &mut Vec<Node>| {
            nodes.push(Node::Leaf { prob: leaf_weight, n: rows.len() });
            nodes.len() - 1
        };
        if depth >= self.settings.max_depth || rows.len() < 2 {
            return make_leaf(&mut self.nodes);
        }

        let parent_score = g * g / (h + LAMBDA);
        let mut best: Option<(usize, f64, f64)> = None; // (feature, threshold, gain)
        for &feature in self.columns {
            let mut order: Vec<usize> = rows.clone();
            order.sort_by(|&a, &b| {
                self.x[[a, feature]].partial_cmp(&self.x[[b, feature]]).unwrap()
            });
            let mut gl = 0.0;
            let mut hl = 0.0;
            for i in 0..order.len() - 1 {
                gl += self.grad[order[i]];
                hl += self.hess[order[i]];
                let (a, b) = (self.x[[order[i], feature]], self.x[[order[i + 1], feature]]);
                if a == b {
                    continue;
                }
                let (gr, hr) = (g - gl, h - hl);
                if hl < self.settings.min_child_weight || hr < self.settings.min_child_weight {
                    continue;
                }
                let gain = 0.5
                    * (gl * gl / (hl + LAMBDA) + gr * gr / (hr + LAMBDA) - parent_score)
                    - self.settings.gamma;
                if gain > best.map_or(0.0, |(_, _, g)| g) + 1e-15 {
                    best = Some((feature, a + (b - a) / 2.0, gain));
                }
            }
        }
        // only strictly loss-reducing splits survive the gamma gate
        let Some((feature, threshold, gain)) = best else {
            return make_leaf(&mut self.nodes);
        };

        self.gain[feature] += gain;
        let (mut left_rows, mut right_rows): (Vec<usize>, Vec<usize>) =
            rows.drain(..).partition(|&r| self.x[[r, feature]] <= threshold);
        let slot = self.nodes.len();
        self.nodes.push(Node::Split { feature, threshold, left: 0, right: 0 });
        let left = self.grow(&mut left_rows, depth + 1);
        let right = self.grow(&mut right_rows, depth + 1);
        if let Node::Split { left: l, right: r, .. } = &mut self.nodes[slot] {
            *l = left;
            *r = right;
        }
        slot
    }
}

fn logistic_loss(y: &[u8], margins: &[f64]) -> f64 {
    let total: f64 = y
        .iter()
        .zip(margins)
        .map(|(&label, &m)| {
            // -[y log p + (1-y) log(1-p)] in a numerically stable form
            let z = if label == 1 { -m } else { m };
            if z > 0.0 { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() }
        })
        .sum();
    total / y.len() as f64
}

pub fn fit(x: ArrayView2<'_, f64>, y: &[u8], settings: &GboostSettings, seed: u64) -> GboostModel {
    let n = x.nrows();
    let d = x.ncols();
    let prior = (y.iter().filter(|&&l| l == 1).count() as f64 / n as f64).clamp(1e-6, 1.0 - 1e-6);
    let base_score = (prior / (1.0 - prior)).ln();

    let mut margins = vec![base_score; n];
    let mut model = GboostModel {
        base_score,
        trees: Vec::with_capacity(settings.n_estimators),
        gain: vec![0.0; d],
        train_loss: Vec::with_capacity(settings.n_estimators),
    };
    for t in 0..settings.n_estimators {
        let grad: Vec<f64> =
            y.iter().zip(&margins).map(|(&l, &m)| sigmoid(m) - l as f64).collect();
        let hess: Vec<f64> = margins
            .iter()
            .map(|&m| {
                let p = sigmoid(m);
                (p * (1.0 - p)).max(1e-16)
            })
            .collect();

        let mut rng = rng_stream(seed, &[0x9b0057, t as u64]);
        let mut rows: Vec<usize> = (0..n).collect();
        let n_rows = ((settings.subsample * n as f64).round() as usize).clamp(1, n);
        if n_rows < n {
            rows.shuffle(&mut rng);
            rows.truncate(n_rows);
            rows.sort_unstable();
        }
        let mut columns: Vec<usize> = (0..d).collect();
        let n_cols = ((settings.colsample_bytree * d as f64).round() as usize).clamp(1, d);
        if n_cols < d {
            columns.shuffle(&mut rng);
            columns.truncate(n_cols);
            columns.sort_unstable();
        }

        let mut grower = TreeGrower {
            x,
            grad: &grad,
            hess: &hess,
            columns: &columns,
            settings,
            nodes: Vec::new(),
            gain: vec![0.0; d],
        };
        grower.grow(&mut rows, 0);
        let tree = BoostTree { nodes: grower.nodes };
        for i in 0..n {
            margins[i] += tree.predict_row(x.row(i).to_slice().unwrap());
        }
        for (j, g) in grower.gain.iter().enumerate() {
            model.gain[j] += g;
        }
        model.trees.push(tree);
        model.train_loss.push(logistic_loss(y, &margins));
    }
    model
}

impl GboostModel {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let margin: f64 =
            self.base_score + self.trees.iter().map(|t| t.predict_row(row)).sum::<f64>();
        sigmoid(margin)
    }
}

//! CART-style tree learning shared by the decision tree and random forest.

use ndarray::ArrayView2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Gini,
    Entropy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Splitter {
    Best,
    Random,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Node {
    Split { feature: usize, threshold: f64, left: usize, right: usize },
    Leaf { prob: f64, n: usize },
}

/// A fitted binary classification tree. `gain` holds the accumulated
/// weighted impurity decrease per feature for importance reporting.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TreeModel {
    pub nodes: Vec<Node>,
    pub gain: Vec<f64>,
}

impl TreeModel {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
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

#[derive(Debug, Clone)]
pub struct TreeSettings {
    pub criterion: Criterion,
    pub splitter: Splitter,
    pub max_depth: usize,
    /// Absolute count; nodes smaller than this become leaves.
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    /// Candidate features per split; None scans all.
    pub max_features: Option<usize>,
}

fn impurity(criterion: Criterion, n_pos: f64, n: f64) -> f64 {
    if n == 0.0 {
        return 0.0;
    }
    let p = n_pos / n;
    match criterion {
        Criterion::Gini => 2.0 * p * (1.0 - p),
        Criterion::Entropy => {
            let term = |q: f64| if q > 0.0 { -q * q.log2() } else { 0.0 };
            term(p) + term(1.0 - p)
        }
    }
}

struct Builder<'a> {
    x: ArrayView2<'a, f64>,
    y: &'a [u8],
    settings: &'a TreeSettings,
    nodes: Vec<Node>,
    gain: Vec<f64>,
    n_total: f64,
}

/// Candidate split produced by scanning one feature at one node.
struct Candidate {
    feature: usize,
    threshold: f64,
    gain: f64,
}

impl<'a> Builder<'a> {
    /// Splits may have zero gain; a node only becomes a leaf when it is
    /// pure, too small, at depth, or no feature admits a valid partition.
    fn grow(&mut self, rows: &mut Vec<usize>, depth: usize, rng: &mut ChaCha8Rng) -> usize {
        let n = rows.len();
        let n_pos = rows.iter().filter(|&&r| self.y[r] == 1).count();
        let make_leaf = |nodes: &mut Vec<Node>| {
            nodes.push(Node::Leaf { prob: n_pos as f64 / n as f64, n });
            nodes.len() - 1
        };
        if n_pos == 0
            || n_pos == n
            || n < self.settings.min_samples_split
            || n < 2 * self.settings.min_samples_leaf
            || depth >= self.settings.max_depth
        {
            return make_leaf(&mut self.nodes);
        }

        let candidates = self.feature_candidates(rng);
        let node_imp = impurity(self.settings.criterion, n_pos as f64, n as f64);
        let mut best: Option<Candidate> = None;
        for &feature in &candidates {
            let cand = match self.settings.splitter {
                Splitter::Best => self.best_threshold(feature, rows, node_imp),
                Splitter::Random => self.random_threshold(feature, rows, node_imp, rng),
            };
            if let Some(c) = cand {
                let better = match &best {
                    None => true,
                    Some(b) => c.gain > b.gain + 1e-15,
                };
                if better {
                    best = Some(c);
                }
            }
        }
        let Some(split) = best else {
            return make_leaf(&mut self.nodes);
        };

        let (mut left_rows, mut right_rows): (Vec<usize>, Vec<usize>) =
            rows.drain(..).partition(|&r| self.x[[r, split.feature]] <= split.threshold);
        self.gain[split.feature] += (n as f64 / self.n_total) * split.gain;
        let slot = self.nodes.len();
        self.nodes.push(Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left: 0,
            right: 0,
        });
        let left = self.grow(&mut left_rows, depth + 1, rng);
        let right = self.grow(&mut right_rows, depth + 1, rng);
        if let Node::Split { left: l, right: r, .. } = &mut self.nodes[slot] {
            *l = left;
            *r = right;
        }
        slot
    }

    /// Feature subset for this node, ascending so ties resolve to the
    /// lowest feature index.
    fn feature_candidates(&self, rng: &mut ChaCha8Rng) -> Vec<usize> {
        let d = self.x.ncols();
        match self.settings.max_features {
            Some(m) if m < d => {
                let mut pool: Vec<usize> = (0..d).collect();
                for i in 0..m {
                    let j = i + rng.random_range(0..d - i);
                    pool.swap(i, j);
                }
                let mut subset = pool[..m].to_vec();
                subset.sort_unstable();
                subset
            }
            _ => (0..d).collect(),
        }
    }

    fn best_threshold(&self, feature: usize, rows: &[usize], node_imp: f64) -> Option<Candidate> {
        let n = rows.len();
        let mut order: Vec<usize> = rows.to_vec();
        order.sort_by(|&a, &b| {
            self.x[[a, feature]].partial_cmp(&self.x[[b, feature]]).unwrap()
        });
        let total_pos = rows.iter().filter(|&&r| self.y[r] == 1).count() as f64;
        let mut left_pos = 0.0;
        let mut best: Option<Candidate> = None;
        for i in 0..n - 1 {
            if self.y[order[i]] == 1 {
                left_pos += 1.0;
            }
            let (a, b) = (self.x[[order[i], feature]], self.x[[order[i + 1], feature]]);
            if a == b {
                continue;
            }
            let n_left = i + 1;
            let n_right = n - n_left;
            if n_left < self.settings.min_samples_leaf || n_right < self.settings.min_samples_leaf
            {
                continue;
            }
            let child = (n_left as f64 * impurity(self.settings.criterion, left_pos, n_left as f64)
                + n_right as f64
                    * impurity(self.settings.criterion, total_pos - left_pos, n_right as f64))
                / n as f64;
            let gain = node_imp - child;
            let threshold = a + (b - a) / 2.0;
            if best.as_ref().is_none_or(|c| gain > c.gain + 1e-15) {
                best = Some(Candidate { feature, threshold, gain });
            }
        }
        best
    }

    fn random_threshold(
        &self,
        feature: usize,
        rows: &[usize],
        node_imp: f64,
        rng: &mut ChaCha8Rng,
    ) -> Option<Candidate> {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &r in rows {
            lo = lo.min(self.x[[r, feature]]);
            hi = hi.max(self.x[[r, feature]]);
        }
        if lo >= hi {
            return None;
        }
        let threshold = lo + rng.random::<f64>() * (hi - lo);
        let n = rows.len();
        let mut n_left = 0usize;
        let mut left_pos = 0.0;
        let mut total_pos = 0.0;
        for &r in rows {
            let pos = (self.y[r] == 1) as u64 as f64;
            total_pos += pos;
            if self.x[[r, feature]] <= threshold {
                n_left += 1;
                left_pos += pos;
            }
        }
        let n_right = n - n_left;
        if n_left < self.settings.min_samples_leaf || n_right < self.settings.min_samples_leaf {
            return None;
        }
        let child = (n_left as f64 * impurity(self.settings.criterion, left_pos, n_left as f64)
            + n_right as f64
                * impurity(self.settings.criterion, total_pos - left_pos, n_right as f64))
            / n as f64;
        Some(Candidate { feature, threshold, gain: node_imp - child })
    }
}

pub fn build_tree(
    x: ArrayView2<'_, f64>,
    y: &[u8],
    rows: Vec<usize>,
    settings: &TreeSettings,
    rng: &mut ChaCha8Rng,
) -> TreeModel {
    let mut builder = Builder {
        x,
        y,
        settings,
        nodes: Vec::new(),
        gain: vec![0.0; x.ncols()],
        n_total: rows.len() as f64,
    };
    let mut rows = rows;
    builder.grow(&mut rows, 0, rng);
    TreeModel { nodes: builder.nodes, gain: builder.gain }
}

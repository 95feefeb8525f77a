//! Permutation importance and rank-agreement analysis across explanation
//! methods.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::TabularDataset;
use crate::error::{Error, Result};
use crate::metrics;
use crate::models::TrainedModel;
use crate::util::{mean_std, rng_stream};

/// Evaluation metric for importance drops.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Accuracy,
    Bacc,
    Auroc,
    F1,
    Mcc,
}

impl std::str::FromStr for Metric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "accuracy" | "acc" => Ok(Metric::Accuracy),
            "bacc" | "balanced_accuracy" => Ok(Metric::Bacc),
            "auroc" | "auc" => Ok(Metric::Auroc),
            "f1" | "f1_macro" => Ok(Metric::F1),
            "mcc" => Ok(Metric::Mcc),
            other => Err(Error::Config(format!("unknown metric '{other}'"))),
        }
    }
}

impl Metric {
    pub fn score(self, y_true: &[u8], proba: &[f64]) -> Result<f64> {
        let report = metrics::score_probabilities(y_true, proba)?;
        Ok(match self {
            Metric::Accuracy => report.acc,
            Metric::Bacc => report.bacc,
            Metric::Auroc => report.auroc,
            Metric::F1 => report.f1_macro,
            Metric::Mcc => report.mcc,
        })
    }
}

/// Importance of column groups by joint permutation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PermutationReport {
    pub names: Vec<String>,
    pub baseline: f64,
    /// Mean metric drop per group over the repeats.
    pub mean_drop: Vec<f64>,
    pub std_drop: Vec<f64>,
    /// Mean permuted score per group; baseline - mean_drop reconstructs it.
    pub permuted_mean: Vec<f64>,
}

impl PermutationReport {
    /// Features ordered by descending mean drop (ties by index).
    pub fn ranking(&self, method: &str) -> Ranking {
        let mut order: Vec<usize> = (0..self.names.len()).collect();
        order.sort_by(|&a, &b| {
            self.mean_drop[b].partial_cmp(&self.mean_drop[a]).unwrap().then(a.cmp(&b))
        });
        Ranking {
            method: method.to_string(),
            features: order.iter().map(|&j| self.names[j].clone()).collect(),
            scores: Some(order.iter().map(|&j| self.mean_drop[j]).collect()),
        }
    }
}

/// Core permutation-importance loop over arbitrary column groups. Every
/// group/repeat pair has its own derived seed and all columns of a group
/// share one row permutation, preserving within-group joint structure.
pub fn group_permutation_importance(
    model: &TrainedModel,
    ds: &TabularDataset,
    groups: &[(String, Vec<usize>)],
    metric: Metric,
    n_repeats: usize,
    seed: u64,
) -> Result<PermutationReport> {
    if ds.column_names() != model.feature_names {
        return Err(Error::Schema("columns do not match the model's training features".into()));
    }
    if n_repeats == 0 {
        return Err(Error::Config("n_repeats must be at least 1".into()));
    }
    let baseline = metric.score(&ds.labels, &model.predict_proba_raw(ds.values.view()))?;
    let n = ds.n_rows();

    let drops: Vec<(f64, f64, f64)> = groups
        .par_iter()
        .enumerate()
        .map(|(g, (_, cols))| -> Result<(f64, f64, f64)> {
            let mut scores = Vec::with_capacity(n_repeats);
            for r in 0..n_repeats {
                let mut rng = rng_stream(seed, &[0x9e2, g as u64, r as u64]);
                let mut perm: Vec<usize> = (0..n).collect();
                perm.shuffle(&mut rng);
                let mut x: Array2<f64> = ds.values.clone();
                for &c in cols {
                    for (i, &p) in perm.iter().enumerate() {
                        x[[i, c]] = ds.values[[p, c]];
                    }
                }
                scores.push(metric.score(&ds.labels, &model.predict_proba_raw(x.view()))?);
            }
            let (permuted_mean, _) = mean_std(&scores);
            let per_drop: Vec<f64> = scores.iter().map(|s| baseline - s).collect();
            let (mean_drop, std_drop) = mean_std(&per_drop);
            Ok((mean_drop, std_drop, permuted_mean))
        })
        .collect::<Result<_>>()?;

    Ok(PermutationReport {
        names: groups.iter().map(|(n, _)| n.clone()).collect(),
        baseline,
        mean_drop: drops.iter().map(|d| d.0).collect(),
        std_drop: drops.iter().map(|d| d.1).collect(),
        permuted_mean: drops.iter().map(|d| d.2).collect(),
    })
}

/// Single-column permutation importance over all features.
pub fn permutation_importance(
    model: &TrainedModel,
    ds: &TabularDataset,
    metric: Metric,
    n_repeats: usize,
    seed: u64,
) -> Result<PermutationReport> {
    let groups: Vec<(String, Vec<usize>)> = ds
        .columns
        .iter()
        .enumerate()
        .map(|(j, c)| (c.name.clone(), vec![j]))
        .collect();
    group_permutation_importance(model, ds, &groups, metric, n_repeats, seed)
}

/// An ordered feature-importance ranking from one explanation method.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Ranking {
    pub method: String,
    /// Most important first.
    pub features: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores: Option<Vec<f64>>,
}

impl Ranking {
    pub fn new(method: &str, features: Vec<String>, scores: Option<Vec<f64>>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for f in &features {
            if !seen.insert(f.as_str()) {
                return Err(Error::Integrity(format!("duplicate feature '{f}' in ranking")));
            }
        }
        if let Some(s) = &scores {
            if s.len() != features.len() {
                return Err(Error::Integrity("scores and features differ in length".into()));
            }
            if s.windows(2).any(|w| w[0] < w[1]) {
                return Err(Error::Integrity("ranking order inconsistent with scores".into()));
            }
        }
        Ok(Ranking { method: method.to_string(), features, scores })
    }

    /// Importance value per feature: the provided score, or a rank-derived
    /// surrogate (higher = more important) when scores are absent.
    fn value_of(&self, feature: &str) -> Option<f64> {
        let pos = self.features.iter().position(|f| f == feature)?;
        Some(match &self.scores {
            Some(s) => s[pos],
            None => (self.features.len() - pos) as f64,
        })
    }
}

/// Strict inversion counting by merge sort; equal elements do not count.
fn count_inversions(values: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = values.len();
    if n <= 1 {
        return 0;
    }
    let mid = n / 2;
    let (left, right) = values.split_at_mut(mid);
    let mut inv = count_inversions(left, buf) + count_inversions(right, buf);
    let (mut i, mut j, mut k) = (0, 0, 0);
    while i < left.len() && j < right.len() {
        if left[i] <= right[j] {
            buf[k] = left[i];
            i += 1;
        } else {
            inv += (left.len() - i) as u64;
            buf[k] = right[j];
            j += 1;
        }
        k += 1;
    }
    while i < left.len() {
        buf[k] = left[i];
        i += 1;
        k += 1;
    }
    while j < right.len() {
        buf[k] = right[j];
        j += 1;
        k += 1;
    }
    values.copy_from_slice(&buf[..n]);
    inv
}

fn tie_term(sorted: &[f64]) -> (u64, u64) {
    // returns (sum t(t-1)/2, sum over joint use) -- only first element used here
    let mut total = 0u64;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as u64;
        total += t * (t - 1) / 2;
        i = j + 1;
    }
    (total, 0)
}

/// Tie-corrected Kendall tau-b on paired value vectors (Knight's
/// O(n log n) construction).
pub fn kendall_tau_values(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Data("paired values differ in length".into()));
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::Undefined("tau needs at least 2 common observations".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a[i].partial_cmp(&a[j]).unwrap().then(b[i].partial_cmp(&b[j]).unwrap())
    });
    let a_sorted: Vec<f64> = order.iter().map(|&i| a[i]).collect();
    let b_by_a: Vec<f64> = order.iter().map(|&i| b[i]).collect();

    // joint ties: groups equal in both a and b
    let mut n3 = 0u64;
    {
        let mut i = 0;
        while i < n {
            let mut j = i;
            while j + 1 < n && a_sorted[j + 1] == a_sorted[i] && b_by_a[j + 1] == b_by_a[i] {
                j += 1;
            }
            let t = (j - i + 1) as u64;
            n3 += t * (t - 1) / 2;
            i = j + 1;
        }
    }
    let (n1, _) = tie_term(&a_sorted);
    let mut b_sorted = b_by_a.clone();
    b_sorted.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (n2, _) = tie_term(&b_sorted);

    let n0 = (n as u64) * (n as u64 - 1) / 2;
    if n0 == n1 || n0 == n2 {
        return Err(Error::Undefined("tau undefined: one ranking is entirely tied".into()));
    }
    let mut work = b_by_a;
    let mut buf = vec![0.0; n];
    let dis = count_inversions(&mut work, &mut buf);

    let con_minus_dis = n0 as i128 - n1 as i128 - n2 as i128 + n3 as i128 - 2 * dis as i128;
    let denom = ((n0 - n1) as f64 * (n0 - n2) as f64).sqrt();
    Ok(con_minus_dis as f64 / denom)
}

/// Kendall tau-b between two rankings on their common features
/// (pairwise-complete rule). Errors when fewer than 2 features are shared.
pub fn kendall_tau(a: &Ranking, b: &Ranking) -> Result<f64> {
    let common: Vec<&String> =
        a.features.iter().filter(|f| b.features.contains(f)).collect();
    if common.len() < 2 {
        return Err(Error::Undefined(format!(
            "rankings '{}' and '{}' share {} features; need at least 2",
            a.method,
            b.method,
            common.len()
        )));
    }
    let va: Vec<f64> = common.iter().map(|f| a.value_of(f).unwrap()).collect();
    let vb: Vec<f64> = common.iter().map(|f| b.value_of(f).unwrap()).collect();
    kendall_tau_values(&va, &vb)
}

/// Pairwise tau matrix over methods; undefined pairs stay None and the
/// common-feature counts are reported alongside.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RankingMatrix {
    pub methods: Vec<String>,
    pub tau: Vec<Vec<Option<f64>>>,
    pub common_counts: Vec<Vec<usize>>,
}

impl RankingMatrix {
    /// CSV with method-name headers; undefined entries are empty cells.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("method");
        for m in &self.methods {
            out.push(',');
            out.push_str(m);
        }
        out.push('\n');
        for (i, m) in self.methods.iter().enumerate() {
            out.push_str(m);
            for j in 0..self.methods.len() {
                out.push(',');
                if let Some(t) = self.tau[i][j] {
                    out.push_str(&format!("{t:.4}"));
                }
            }
            out.push('\n');
        }
        out
    }
}

pub fn ranking_correlation_matrix(rankings: &[Ranking]) -> Result<RankingMatrix> {
    if rankings.len() < 2 {
        return Err(Error::Data("need at least 2 rankings".into()));
    }
    let k = rankings.len();
    let mut tau = vec![vec![None; k]; k];
    let mut counts = vec![vec![0usize; k]; k];
    for i in 0..k {
        tau[i][i] = Some(1.0);
        counts[i][i] = rankings[i].features.len();
        for j in i + 1..k {
            let common = rankings[i]
                .features
                .iter()
                .filter(|f| rankings[j].features.contains(f))
                .count();
            counts[i][j] = common;
            counts[j][i] = common;
            match kendall_tau(&rankings[i], &rankings[j]) {
                Ok(t) => {
                    tau[i][j] = Some(t);
                    tau[j][i] = Some(t);
                }
                Err(Error::Undefined(_)) => {}
                Err(e) => return Err(e),
            }
        }
    }
    Ok(RankingMatrix {
        methods: rankings.iter().map(|r| r.method.clone()).collect(),
        tau,
        common_counts: counts,
    })
}

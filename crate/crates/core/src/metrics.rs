//! Classification scores, ROC analysis, and the rank-based significance
//! tests used to compare feature sets and model families.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::util::midranks;

/// Binary contingency counts; class 1 is the patient/positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

/// The evaluation scores reported per cohort.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub acc: f64,
    pub bacc: f64,
    pub auroc: f64,
    pub f1_macro: f64,
    pub mcc: f64,
    pub no_information_rate: f64,
}

impl ScoreReport {
    /// One CSV row in the table column order ACC, BACC, AUROC, F1, MCC.
    pub fn csv_row(&self) -> String {
        format!(
            "{:.6},{:.6},{:.6},{:.6},{:.6}",
            self.acc, self.bacc, self.auroc, self.f1_macro, self.mcc
        )
    }

    pub const CSV_HEADER: &'static str = "acc,bacc,auroc,f1,mcc";
}

pub fn confusion(y_true: &[u8], y_pred: &[u8]) -> Result<ConfusionMatrix> {
    if y_true.len() != y_pred.len() {
        return Err(Error::Data(format!(
            "length mismatch: {} true labels vs {} predictions",
            y_true.len(),
            y_pred.len()
        )));
    }
    let mut cm = ConfusionMatrix { tp: 0, fp: 0, fn_: 0, tn: 0 };
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t, p) {
            (1, 1) => cm.tp += 1,
            (0, 1) => cm.fp += 1,
            (1, 0) => cm.fn_ += 1,
            (0, 0) => cm.tn += 1,
            _ => return Err(Error::Data(format!("labels must be binary, got ({t},{p})"))),
        }
    }
    Ok(cm)
}

/// (acc, bacc, f1_macro, mcc) from a contingency table.
///
/// F1 is macro-averaged over both one-vs-rest assignments; MCC and the rate
/// terms fall back to 0 on a zero denominator.
pub fn classification_scores(cm: &ConfusionMatrix) -> (f64, f64, f64, f64) {
    let (tp, fp, fn_, tn) = (cm.tp as f64, cm.fp as f64, cm.fn_ as f64, cm.tn as f64);
    let total = tp + fp + fn_ + tn;
    let acc = if total > 0.0 { (tp + tn) / total } else { 0.0 };
    let tpr = if tp + fn_ > 0.0 { tp / (tp + fn_) } else { 0.0 };
    let tnr = if tn + fp > 0.0 { tn / (tn + fp) } else { 0.0 };
    let bacc = (tpr + tnr) / 2.0;
    let f1 = |tp: f64, fp: f64, fn_: f64| {
        let denom = tp + 0.5 * (fp + fn_);
        if denom > 0.0 { tp / denom } else { 0.0 }
    };
    let f1_macro = (f1(tp, fp, fn_) + f1(tn, fn_, fp)) / 2.0;
    let denom = ((tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_)).sqrt();
    let mcc = if denom == 0.0 { 0.0 } else { (tp * tn - fp * fn_) / denom };
    (acc, bacc, f1_macro, mcc)
}

/// Area under the ROC curve via the tie-corrected Mann-Whitney statistic.
pub fn auroc(y_true: &[u8], scores: &[f64]) -> Result<f64> {
    if y_true.len() != scores.len() {
        return Err(Error::Data("labels and scores differ in length".into()));
    }
    let n_pos = y_true.iter().filter(|&&y| y == 1).count();
    let n_neg = y_true.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Undefined("AUROC needs both classes present".into()));
    }
    let ranks = midranks(scores);
    let rank_sum_pos: f64 =
        ranks.iter().zip(y_true).filter(|(_, &y)| y == 1).map(|(&r, _)| r).sum();
    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos * n_neg) as f64)
}

/// Majority-class frequency: the accuracy of the constant classifier.
pub fn no_information_rate(y_true: &[u8]) -> f64 {
    if y_true.is_empty() {
        return 0.0;
    }
    let ones = y_true.iter().filter(|&&y| y == 1).count();
    ones.max(y_true.len() - ones) as f64 / y_true.len() as f64
}

/// All scores at the 0.5 probability threshold plus AUROC from the raw
/// scores.
pub fn score_probabilities(y_true: &[u8], proba: &[f64]) -> Result<ScoreReport> {
    let y_pred: Vec<u8> = proba.iter().map(|&p| (p >= 0.5) as u8).collect();
    let cm = confusion(y_true, &y_pred)?;
    let (acc, bacc, f1_macro, mcc) = classification_scores(&cm);
    let auroc = auroc(y_true, proba).unwrap_or(0.5);
    Ok(ScoreReport {
        acc,
        bacc,
        auroc,
        f1_macro,
        mcc,
        no_information_rate: no_information_rate(y_true),
    })
}

/// Friedman rank test over a (configurations x treatments) accuracy matrix.
///
/// Uses the tie-corrected chi-square form with k-1 degrees of freedom; rows
/// that are entirely tied contribute no information, and a fully tied matrix
/// yields statistic 0 with p = 1.
pub fn friedman_test(results: &[Vec<f64>]) -> Result<(f64, f64)> {
    let n = results.len();
    if n < 2 {
        return Err(Error::Data("Friedman test needs at least 2 rows".into()));
    }
    let k = results[0].len();
    if k < 2 || results.iter().any(|r| r.len() != k) {
        return Err(Error::Data("Friedman test needs a rectangular matrix with >=2 treatments".into()));
    }
    let mut rank_sums = vec![0.0; k];
    let mut sq_sum = 0.0;
    for row in results {
        let ranks = midranks(row);
        for (j, &r) in ranks.iter().enumerate() {
            rank_sums[j] += r;
            sq_sum += r * r;
        }
    }
    let (nf, kf) = (n as f64, k as f64);
    let numer: f64 =
        (kf - 1.0) * rank_sums.iter().map(|&r| (r - nf * (kf + 1.0) / 2.0).powi(2)).sum::<f64>();
    let denom = sq_sum - nf * kf * (kf + 1.0) * (kf + 1.0) / 4.0;
    if denom <= 0.0 {
        return Ok((0.0, 1.0));
    }
    let stat = numer / denom;
    let chi = ChiSquared::new(kf - 1.0).map_err(|e| Error::Numeric(e.to_string()))?;
    let p = 1.0 - chi.cdf(stat);
    Ok((stat, p))
}

/// Two-sided Wilcoxon signed-rank p-value for paired samples.
///
/// Zero differences are dropped (p = 1 when none remain). Up to 20 nonzero
/// differences the null is enumerated exactly over all sign assignments;
/// larger samples use the normal approximation with tie correction.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || a.len() != b.len() {
        return Err(Error::Data("paired samples must be non-empty and equal length".into()));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(&x, &y)| x - y).filter(|&v| v != 0.0).collect();
    let n = d.len();
    if n == 0 {
        return Ok(1.0);
    }
    let abs: Vec<f64> = d.iter().map(|v| v.abs()).collect();
    let ranks = midranks(&abs);
    let w_pos: f64 = ranks.iter().zip(&d).filter(|(_, &v)| v > 0.0).map(|(&r, _)| r).sum();

    if n <= 20 {
        // exact null: rank statistics doubled to integers
        let ranks2: Vec<i64> = ranks.iter().map(|&r| (2.0 * r).round() as i64).collect();
        let total: i64 = ranks2.iter().sum();
        let w2 = (2.0 * w_pos).round() as i64;
        let (lo, hi) = (w2.min(total - w2), w2.max(total - w2));
        // distribution of the doubled statistic by dynamic programming
        let mut counts = vec![0u64; total as usize + 1];
        counts[0] = 1;
        for &r in &ranks2 {
            for w in (r as usize..counts.len()).rev() {
                counts[w] += counts[w - r as usize];
            }
        }
        let extreme: u64 = counts
            .iter()
            .enumerate()
            .filter(|(w, _)| (*w as i64) <= lo || (*w as i64) >= hi)
            .map(|(_, &c)| c)
            .sum();
        Ok(extreme as f64 / (1u64 << n) as f64)
    } else {
        let nf = n as f64;
        let mean = nf * (nf + 1.0) / 4.0;
        // tie correction: subtract sum(t^3 - t)/48 from the null variance
        let mut sorted = abs.clone();
        sorted.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let mut tie_term = 0.0;
        let mut i = 0;
        while i < n {
            let mut j = i;
            while j + 1 < n && sorted[j + 1] == sorted[i] {
                j += 1;
            }
            let t = (j - i + 1) as f64;
            tie_term += t * t * t - t;
            i = j + 1;
        }
        let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
        if var <= 0.0 {
            return Ok(1.0);
        }
        let z = (w_pos - mean) / var.sqrt();
        let normal = Normal::new(0.0, 1.0).unwrap();
        Ok((2.0 * (1.0 - normal.cdf(z.abs()))).min(1.0))
    }
}

/// One paired comparison for [`wilcoxon_bonferroni`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairedComparison {
    pub name_a: String,
    pub name_b: String,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

/// Adjusted p-value of one comparison.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdjustedP {
    pub name_a: String,
    pub name_b: String,
    pub p_raw: f64,
    pub p_adjusted: f64,
}

/// Pairwise Wilcoxon signed-rank tests with Bonferroni adjustment over `m`
/// comparisons: adjusted p = min(1, m * p).
pub fn wilcoxon_bonferroni(pairs: &[PairedComparison], m: usize) -> Result<Vec<AdjustedP>> {
    pairs
        .iter()
        .map(|pair| {
            let p = wilcoxon_signed_rank(&pair.a, &pair.b)?;
            Ok(AdjustedP {
                name_a: pair.name_a.clone(),
                name_b: pair.name_b.clone(),
                p_raw: p,
                p_adjusted: (m as f64 * p).min(1.0),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn confusion_hand_tallies() {
        let cm = confusion(&[1, 1, 0], &[1, 1, 0]).unwrap();
        assert_eq!((cm.tp, cm.tn, cm.fp, cm.fn_), (2, 1, 0, 0));
        let cm = confusion(&[1, 0], &[0, 0]).unwrap();
        assert_eq!((cm.fn_, cm.tn), (1, 1));
        let cm = confusion(&[1, 1, 0, 0, 0, 1], &[1, 1, 0, 0, 1, 0]).unwrap();
        assert_eq!((cm.tp, cm.tn, cm.fp, cm.fn_), (2, 2, 1, 1));
    }

    #[test]
    fn confusion_length_mismatch_errors() {
        assert!(confusion(&[1, 0], &[1]).is_err());
    }

    #[test]
    fn scores_hand_cases() {
        let (acc, _, _, _) =
            classification_scores(&ConfusionMatrix { tp: 2, tn: 3, fp: 1, fn_: 0 });
        assert!((acc - 5.0 / 6.0).abs() < 1e-12);
        let (_, bacc, _, _) =
            classification_scores(&ConfusionMatrix { tp: 1, fn_: 1, tn: 3, fp: 0 });
        assert!((bacc - 0.75).abs() < 1e-12);
    }

    #[test]
    fn all_one_class_prediction_gives_zero_mcc() {
        let (_, _, _, mcc) =
            classification_scores(&ConfusionMatrix { tp: 5, fp: 3, fn_: 0, tn: 0 });
        assert_eq!(mcc, 0.0);
    }

    #[test]
    fn mcc_is_one_iff_perfect_with_both_classes() {
        let (_, _, _, mcc) =
            classification_scores(&ConfusionMatrix { tp: 4, tn: 6, fp: 0, fn_: 0 });
        assert!((mcc - 1.0).abs() < 1e-12);
    }

    #[test]
    fn auroc_hand_case_and_degenerates() {
        let auc = auroc(&[0, 0, 1, 1], &[0.1, 0.4, 0.35, 0.8]).unwrap();
        assert!((auc - 0.75).abs() < 1e-12);
        let auc = auroc(&[0, 1], &[0.1, 0.9]).unwrap();
        assert_eq!(auc, 1.0);
        let auc = auroc(&[0, 1, 0, 1], &[0.5, 0.5, 0.5, 0.5]).unwrap();
        assert_eq!(auc, 0.5);
        assert!(auroc(&[1, 1], &[0.1, 0.2]).is_err());
    }

    #[test]
    fn auroc_flip_identity_without_ties() {
        let y = [0u8, 1, 0, 1, 1, 0, 0, 1];
        let s = [0.11, 0.52, 0.33, 0.94, 0.45, 0.26, 0.67, 0.88];
        let neg: Vec<f64> = s.iter().map(|v| -v).collect();
        let total = auroc(&y, &s).unwrap() + auroc(&y, &neg).unwrap();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nir_counting() {
        assert!((no_information_rate(&[1, 1, 0]) - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(no_information_rate(&[0, 1, 0, 1]), 0.5);
        assert_eq!(no_information_rate(&[1, 1]), 1.0);
    }

    #[test]
    fn friedman_identical_columns() {
        let rows = vec![vec![0.5, 0.5, 0.5]; 6];
        let (stat, p) = friedman_test(&rows).unwrap();
        assert_eq!(stat, 0.0);
        assert_eq!(p, 1.0);
    }

    #[test]
    fn friedman_dominant_treatment_is_significant() {
        // one treatment strictly dominates on 48 rows
        let rows: Vec<Vec<f64>> = (0..48)
            .map(|i| {
                let base = 0.6 + (i % 7) as f64 * 0.01;
                vec![base, base + 0.002, base + 0.1]
            })
            .collect();
        let (_, p) = friedman_test(&rows).unwrap();
        assert!(p < 0.001, "p = {p}");
    }

    #[test]
    fn wilcoxon_exact_hand_cases() {
        let a = [2.0, 3.0, 4.0, 5.0, 6.0];
        let b = [1.0, 1.0, 1.0, 1.0, 1.0];
        let p = wilcoxon_signed_rank(&a, &b).unwrap();
        assert!((p - 0.0625).abs() < 1e-12);
        // all zero differences
        let p = wilcoxon_signed_rank(&a, &a).unwrap();
        assert_eq!(p, 1.0);
    }

    #[test]
    fn bonferroni_multiplies_and_caps() {
        let pairs = vec![PairedComparison {
            name_a: "x".into(),
            name_b: "y".into(),
            a: vec![2.0, 3.0, 4.0, 5.0, 6.0],
            b: vec![1.0; 5],
        }];
        let adj = wilcoxon_bonferroni(&pairs, 3).unwrap();
        assert!((adj[0].p_adjusted - 3.0 * adj[0].p_raw).abs() < 1e-12);
        let adj = wilcoxon_bonferroni(&pairs, 100).unwrap();
        assert_eq!(adj[0].p_adjusted, 1.0);
    }

    #[test]
    fn wilcoxon_exact_matches_enumeration_oracle_up_to_n12() {
        use rand::Rng;
        let mut rng = crate::util::rng_stream(77, &[1]);
        for n in 1..=12usize {
            for _ in 0..8 {
                let d: Vec<f64> = (0..n)
                    .map(|_| {
                        // coarse grid induces ties and zeros
                        ((rng.random::<f64>() - 0.45) * 6.0).round() / 2.0
                    })
                    .collect();
                let zeros = vec![0.0; n];
                let ours = wilcoxon_signed_rank(&d, &zeros).unwrap();
                let oracle = statsuite::oracle_wilcoxon(&d).unwrap();
                assert!((ours - oracle).abs() < 1e-12, "n={n} d={d:?} {ours} vs {oracle}");
            }
        }
    }

    #[test]
    fn scores_invariant_under_class_relabeling() {
        use rand::Rng;
        let mut rng = crate::util::rng_stream(31, &[7]);
        for _ in 0..200 {
            let cm = ConfusionMatrix {
                tp: rng.random_range(0..50),
                fp: rng.random_range(0..50),
                fn_: rng.random_range(0..50),
                tn: rng.random_range(1..50),
            };
            // relabeling swaps positives and negatives
            let flipped = ConfusionMatrix { tp: cm.tn, fp: cm.fn_, fn_: cm.fp, tn: cm.tp };
            let a = classification_scores(&cm);
            let b = classification_scores(&flipped);
            assert_eq!(a.0, b.0, "acc changed under relabeling");
            assert_eq!(a.1, b.1, "bacc changed under relabeling");
            assert_eq!(a.2, b.2, "f1_macro changed under relabeling");
            assert_eq!(a.3, b.3, "mcc changed under relabeling");
        }
    }

    #[test]
    fn friedman_statistic_matches_permutation_oracle() {
        let rows = vec![
            vec![0.81, 0.70, 0.75],
            vec![0.62, 0.66, 0.68],
            vec![0.90, 0.80, 0.85],
            vec![0.74, 0.71, 0.77],
        ];
        let (stat, p) = friedman_test(&rows).unwrap();
        let (oracle_stat, oracle_p) = statsuite::oracle_friedman(&rows, 100_000, 5);
        assert!((stat - oracle_stat).abs() < 1e-9);
        // chi-square approximation vs permutation tail at n=4: loose agreement
        assert!((p - oracle_p).abs() < 0.15, "p={p} perm={oracle_p}");
    }
}

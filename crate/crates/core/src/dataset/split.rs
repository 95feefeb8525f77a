//! Stratified train/test splitting and repeated k-fold plans.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::dataset::TabularDataset;
use crate::error::{Error, Result};
use crate::util::{rng_stream, round_half_up};

/// Disjoint train/test row indices covering the whole dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Fold assignment for repeated stratified k-fold CV.
/// `assignment[repeat][subject]` is the validation fold of that subject.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub repeats: usize,
    pub folds_per_repeat: usize,
    pub assignment: Vec<Vec<usize>>,
}

impl FoldPlan {
    /// (train, validation) index pair for one fold of one repeat.
    pub fn fold(&self, repeat: usize, fold: usize) -> (Vec<usize>, Vec<usize>) {
        let mut train = Vec::new();
        let mut valid = Vec::new();
        for (subject, &f) in self.assignment[repeat].iter().enumerate() {
            if f == fold {
                valid.push(subject);
            } else {
                train.push(subject);
            }
        }
        (train, valid)
    }

    pub fn n_evaluations(&self) -> usize {
        self.repeats * self.folds_per_repeat
    }
}

fn per_class_indices(labels: &[u8]) -> [Vec<usize>; 2] {
    let mut by_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, &l) in labels.iter().enumerate() {
        by_class[l as usize].push(i);
    }
    by_class
}

/// Splits within each class so the test fraction holds per diagnostic group.
///
/// Test counts round half up per class; the last class absorbs the rounding
/// difference so the overall test size equals round(fraction * n).
pub fn stratified_split(
    ds: &TabularDataset,
    test_fraction: f64,
    seed: u64,
) -> Result<SplitIndices> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Config(format!("test fraction {test_fraction} outside (0,1)")));
    }
    let by_class = per_class_indices(&ds.labels);
    for (c, idx) in by_class.iter().enumerate() {
        if idx.len() < 2 {
            return Err(Error::Data(format!(
                "class '{}' has {} subjects; need at least 2",
                ds.class_names[c],
                idx.len()
            )));
        }
    }
    let total_test = round_half_up(test_fraction * ds.n_rows() as f64) as usize;
    let t0 = round_half_up(test_fraction * by_class[0].len() as f64) as usize;
    let counts = [t0, total_test.saturating_sub(t0)];
    for (c, &t) in counts.iter().enumerate() {
        if t == 0 || t >= by_class[c].len() {
            return Err(Error::Data(format!(
                "test fraction {test_fraction} leaves class '{}' with an empty partition",
                ds.class_names[c]
            )));
        }
    }

    let mut rng = rng_stream(seed, &[0x511]);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (c, idx) in by_class.iter().enumerate() {
        let mut shuffled = idx.clone();
        shuffled.shuffle(&mut rng);
        test.extend_from_slice(&shuffled[..counts[c]]);
        train.extend_from_slice(&shuffled[counts[c]..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(SplitIndices { train, test })
}

/// Builds a repeated stratified k-fold plan; each repeat reshuffles within
/// classes and deals subjects round-robin so per-fold class counts differ by
/// at most one.
pub fn stratified_repeated_kfold(
    ds: &TabularDataset,
    k: usize,
    repeats: usize,
    seed: u64,
) -> Result<FoldPlan> {
    if k < 2 || repeats == 0 {
        return Err(Error::Config(format!("invalid fold plan k={k}, repeats={repeats}")));
    }
    let by_class = per_class_indices(&ds.labels);
    for (c, idx) in by_class.iter().enumerate() {
        if idx.len() < k {
            return Err(Error::Data(format!(
                "class '{}' has {} subjects, fewer than k={k}",
                ds.class_names[c],
                idx.len()
            )));
        }
    }
    let mut assignment = Vec::with_capacity(repeats);
    for r in 0..repeats {
        let mut rng = rng_stream(seed, &[0xf01d, r as u64]);
        let mut folds = vec![0usize; ds.n_rows()];
        for idx in &by_class {
            let mut shuffled = idx.clone();
            shuffled.shuffle(&mut rng);
            for (pos, &subject) in shuffled.iter().enumerate() {
                folds[subject] = pos % k;
            }
        }
        assignment.push(folds);
    }
    Ok(FoldPlan { repeats, folds_per_repeat: k, assignment })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{ColumnMeta, Role};
    use ndarray::Array2;

    fn label_ds(labels: Vec<u8>) -> TabularDataset {
        let n = labels.len();
        TabularDataset::new(
            (0..n).map(|i| format!("s{i}")).collect(),
            vec![ColumnMeta::new("x", Role::Sociodemographic)],
            Array2::zeros((n, 1)),
            labels,
            ["cn".into(), "ad".into()],
        )
        .unwrap()
    }

    #[test]
    fn per_class_rounding_matches_hand_arithmetic() {
        let labels: Vec<u8> = std::iter::repeat_n(0, 60).chain(std::iter::repeat_n(1, 40)).collect();
        let ds = label_ds(labels);
        let s = stratified_split(&ds, 0.2, 3).unwrap();
        let test_c0 = s.test.iter().filter(|&&i| ds.labels[i] == 0).count();
        let test_c1 = s.test.iter().filter(|&&i| ds.labels[i] == 1).count();
        assert_eq!((test_c0, test_c1), (12, 8));
    }

    #[test]
    fn split_is_deterministic_and_a_partition() {
        let labels: Vec<u8> = (0..37).map(|i| (i % 3 == 0) as u8).collect();
        let ds = label_ds(labels);
        let a = stratified_split(&ds, 0.25, 9).unwrap();
        let b = stratified_split(&ds, 0.25, 9).unwrap();
        assert_eq!(a, b);
        let mut all: Vec<usize> = a.train.iter().chain(a.test.iter()).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..37).collect::<Vec<_>>());
        assert!(a.train.iter().all(|i| !a.test.contains(i)));
    }

    #[test]
    fn degenerate_fraction_errors() {
        let ds = label_ds(vec![0, 0, 0, 0, 1, 1]);
        assert!(stratified_split(&ds, 0.05, 1).is_err());
    }

    #[test]
    fn kfold_10x10_yields_100_pairs() {
        let labels: Vec<u8> = (0..80).map(|i| (i % 2) as u8).collect();
        let ds = label_ds(labels);
        let plan = stratified_repeated_kfold(&ds, 10, 10, 5).unwrap();
        assert_eq!(plan.n_evaluations(), 100);
        let mut seen = 0;
        for r in 0..10 {
            for f in 0..10 {
                let (train, valid) = plan.fold(r, f);
                assert_eq!(train.len() + valid.len(), 80);
                seen += 1;
            }
        }
        assert_eq!(seen, 100);
    }

    #[test]
    fn folds_within_a_repeat_partition_all_rows() {
        let labels: Vec<u8> = (0..53).map(|i| (i % 4 == 0) as u8).collect();
        let ds = label_ds(labels);
        let plan = stratified_repeated_kfold(&ds, 5, 3, 2).unwrap();
        for r in 0..3 {
            let mut covered = [false; 53];
            for f in 0..5 {
                let (_, valid) = plan.fold(r, f);
                for v in valid {
                    assert!(!covered[v], "subject in two validation folds");
                    covered[v] = true;
                }
            }
            assert!(covered.iter().all(|&c| c));
        }
    }

    #[test]
    fn per_fold_class_counts_balanced_within_one() {
        for seed in 0..5 {
            let labels: Vec<u8> = (0..47).map(|i| (i % 3 == 0) as u8).collect();
            let ds = label_ds(labels.clone());
            let plan = stratified_repeated_kfold(&ds, 4, 2, seed).unwrap();
            for r in 0..2 {
                for class in 0..2u8 {
                    let counts: Vec<usize> = (0..4)
                        .map(|f| {
                            plan.assignment[r]
                                .iter()
                                .enumerate()
                                .filter(|(i, &fold)| fold == f && labels[*i] == class)
                                .count()
                        })
                        .collect();
                    let (min, max) = (counts.iter().min().unwrap(), counts.iter().max().unwrap());
                    assert!(max - min <= 1, "counts {counts:?}");
                }
            }
        }
    }

    #[test]
    fn class_smaller_than_k_errors_with_class_name() {
        let ds = label_ds(vec![0, 0, 0, 0, 0, 0, 1, 1]);
        let err = stratified_repeated_kfold(&ds, 3, 1, 0).unwrap_err();
        assert!(err.to_string().contains("ad"), "got: {err}");
    }
}

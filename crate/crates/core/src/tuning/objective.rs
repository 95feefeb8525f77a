//! The CV-accuracy objective evaluated over a fold plan.

use rayon::prelude::*;

use crate::dataset::{apply_preprocess, fit_preprocess, FoldPlan, TabularDataset};
use crate::error::Result;
use crate::models::{train, ModelKind, ParamRecord};
use crate::util::{mean_std, rng_stream};

/// Accuracy of one fold: preprocessing refitted on the fold's training rows,
/// the model trained there, scored on the validation rows. A fold whose
/// training fails scores as the accuracy of predicting the fold-train
/// majority class.
fn fold_accuracy(
    kind: ModelKind,
    params: &ParamRecord,
    ds: &TabularDataset,
    train_rows: &[usize],
    valid_rows: &[usize],
    seed: u64,
) -> f64 {
    let train_ds = ds.subset_rows(train_rows);
    let valid_ds = ds.subset_rows(valid_rows);
    let majority = {
        let ones = train_ds.labels.iter().filter(|&&l| l == 1).count();
        (ones * 2 >= train_ds.n_rows()) as u8
    };
    let run = || -> Result<f64> {
        let pre = fit_preprocess(&train_ds);
        let train_z = apply_preprocess(&pre, &train_ds)?;
        let valid_z = apply_preprocess(&pre, &valid_ds)?;
        let model = train(kind, params, &train_z, seed)?;
        let proba = model.predict_proba(&valid_z)?;
        let correct = proba
            .iter()
            .zip(&valid_z.labels)
            .filter(|(&p, &y)| (p >= 0.5) as u8 == y)
            .count();
        Ok(correct as f64 / valid_z.n_rows() as f64)
    };
    match run() {
        Ok(acc) => acc,
        Err(e) => {
            log::warn!("fold training failed ({e}); scoring the majority-class fallback");
            let correct =
                valid_ds.labels.iter().filter(|&&y| y == majority).count();
            correct as f64 / valid_ds.n_rows() as f64
        }
    }
}

/// Mean and sample standard deviation of the per-fold accuracies over every
/// (repeat, fold) pair of the plan. Folds evaluate concurrently with derived
/// seeds and reduce in fold order.
pub fn cv_objective(
    kind: ModelKind,
    params: &ParamRecord,
    ds: &TabularDataset,
    fold_plan: &FoldPlan,
    seed: u64,
) -> Result<(f64, f64)> {
    let jobs: Vec<(usize, usize)> = (0..fold_plan.repeats)
        .flat_map(|r| (0..fold_plan.folds_per_repeat).map(move |f| (r, f)))
        .collect();
    let scores: Vec<f64> = jobs
        .par_iter()
        .map(|&(r, f)| {
            let (train_rows, valid_rows) = fold_plan.fold(r, f);
            let fold_seed =
                rng_stream(seed, &[0xcf, r as u64, f as u64]).next_u64_seed();
            fold_accuracy(kind, params, ds, &train_rows, &valid_rows, fold_seed)
        })
        .collect();
    Ok(mean_std(&scores))
}

trait NextU64Seed {
    fn next_u64_seed(&mut self) -> u64;
}

impl NextU64Seed for rand_chacha::ChaCha8Rng {
    fn next_u64_seed(&mut self) -> u64 {
        rand::RngCore::next_u64(self)
    }
}

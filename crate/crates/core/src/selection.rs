//! Greedy forward selection over MRI feature columns.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{apply_preprocess, fit_preprocess, stratified_split, TabularDataset};
use crate::error::{Error, Result};
use crate::models::{train, ModelKind, ParamRecord};
use crate::util::rng_stream;

/// Result of one forward-selection run: the chosen MRI features in selection
/// order with the validation accuracy after each addition (strictly
/// increasing by the stopping rule).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectionResult {
    pub kind: ModelKind,
    pub seed: u64,
    pub selected: Vec<String>,
    pub accuracies: Vec<f64>,
}

impl SelectionResult {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn validation_accuracy(
    kind: ModelKind,
    params: &ParamRecord,
    train_ds: &TabularDataset,
    valid_ds: &TabularDataset,
    columns: &[String],
    seed: u64,
) -> Result<f64> {
    let tr = train_ds.select_columns(columns)?;
    let va = valid_ds.select_columns(columns)?;
    let pre = fit_preprocess(&tr);
    let tr = apply_preprocess(&pre, &tr)?;
    let va = apply_preprocess(&pre, &va)?;
    let model = train(kind, params, &tr, seed)?;
    let proba = model.predict_proba(&va)?;
    let correct =
        proba.iter().zip(&va.labels).filter(|(&p, &y)| (p >= 0.5) as u8 == y).count();
    Ok(correct as f64 / va.n_rows() as f64)
}

/// Greedy forward selection with the family's default hyperparameters.
///
/// The dataset splits 80/20 stratified; starting from the empty set, each
/// round trains on the selected features plus one MRI candidate (nothing
/// else) and adds the candidate with the best validation accuracy, stopping
/// at the first round without a strict improvement. Ties break to the lowest
/// column index. Non-MRI columns are never candidates.
pub fn forward_select(ds: &TabularDataset, kind: ModelKind, seed: u64) -> Result<SelectionResult> {
    let mri: Vec<String> = ds
        .columns
        .iter()
        .filter(|c| c.role.is_mri())
        .map(|c| c.name.clone())
        .collect();
    if mri.is_empty() {
        return Err(Error::Data("dataset has no MRI-role columns to select from".into()));
    }
    let split = stratified_split(ds, 0.2, rng_stream(seed, &[0x5e1]).next_u64_seed())?;
    let train_ds = ds.subset_rows(&split.train);
    let valid_ds = ds.subset_rows(&split.test);
    let params = ParamRecord::default_for(kind, mri.len());

    let mut selected: Vec<String> = Vec::new();
    let mut accuracies: Vec<f64> = Vec::new();
    let mut remaining: Vec<String> = mri;
    let mut incumbent = f64::NEG_INFINITY;

    loop {
        let round_seed = rng_stream(seed, &[0x5e1ec7, selected.len() as u64]).next_u64_seed();
        let scores: Vec<f64> = remaining
            .par_iter()
            .map(|candidate| {
                let mut columns = selected.clone();
                columns.push(candidate.clone());
                validation_accuracy(kind, &params, &train_ds, &valid_ds, &columns, round_seed)
                    .unwrap_or_else(|e| {
                        log::warn!("candidate '{candidate}' failed to train ({e}); scoring 0");
                        0.0
                    })
            })
            .collect();
        // argmax by (accuracy, lowest index)
        let best = (0..remaining.len())
            .max_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap().then(b.cmp(&a)))
            .expect("remaining is non-empty");
        if scores[best] > incumbent {
            incumbent = scores[best];
            selected.push(remaining.remove(best));
            accuracies.push(incumbent);
            if remaining.is_empty() {
                break;
            }
        } else {
            break;
        }
    }

    Ok(SelectionResult { kind, seed, selected, accuracies })
}

trait NextU64Seed {
    fn next_u64_seed(&mut self) -> u64;
}

impl NextU64Seed for rand_chacha::ChaCha8Rng {
    fn next_u64_seed(&mut self) -> u64 {
        rand::RngCore::next_u64(self)
    }
}

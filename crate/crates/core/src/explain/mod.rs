//! Shapley-value explanation: exact enumeration, the kernel-weighted
//! regression estimator, and the summary/waterfall data products.

mod exact;
mod kernel;

pub use exact::{exact_shapley, exact_shapley_groups, exact_shapley_named};
pub use kernel::{kernel_shap, kernel_shap_groups, kernel_shap_named, KERNEL_SHAP_DEFAULT_SAMPLES};

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::TabularDataset;
use crate::error::{Error, Result};
use crate::models::TrainedModel;

/// Anything that maps feature rows to class-1 probabilities. Explanations
/// treat the model as a black box through this trait.
pub trait PredictProba: Sync {
    fn predict(&self, x: ArrayView2<'_, f64>) -> Vec<f64>;
}

impl PredictProba for TrainedModel {
    fn predict(&self, x: ArrayView2<'_, f64>) -> Vec<f64> {
        self.predict_proba_raw(x)
    }
}

/// Closures over single rows act as models in tests and composition.
impl<F> PredictProba for F
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    fn predict(&self, x: ArrayView2<'_, f64>) -> Vec<f64> {
        (0..x.nrows()).map(|i| self(x.row(i).to_slice().expect("contiguous row"))).collect()
    }
}

/// Reference rows used to marginalize features outside a coalition.
#[derive(Debug, Clone)]
pub struct BackgroundSet {
    pub values: Array2<f64>,
}

impl BackgroundSet {
    pub fn new(values: Array2<f64>) -> Result<Self> {
        if values.nrows() == 0 {
            return Err(Error::Data("background set must be non-empty".into()));
        }
        Ok(BackgroundSet { values })
    }

    /// Background drawn from a dataset, validated against the model's
    /// training columns.
    pub fn from_dataset(ds: &TabularDataset, model: &TrainedModel) -> Result<Self> {
        if ds.column_names() != model.feature_names {
            return Err(Error::Schema(
                "background columns do not match the model's training features".into(),
            ));
        }
        Self::new(ds.values.clone())
    }

    pub fn n_rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.values.ncols()
    }
}

/// Additive decomposition of one prediction: `base_value` plus one
/// contribution per player (feature, or aspect when grouped) reaches
/// `prediction`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Explanation {
    pub base_value: f64,
    pub prediction: f64,
    /// Player names: feature names, or aspect names for grouped play.
    pub names: Vec<String>,
    pub phi: Vec<f64>,
    /// The subject's value per player; None for multi-feature aspects.
    pub feature_values: Vec<Option<f64>>,
    /// Size M of the simplified binary mask domain.
    pub mask_size: usize,
}

impl Explanation {
    /// |phi0 + sum(phi) - f(x)|, the efficiency residual.
    pub fn additivity_gap(&self) -> f64 {
        (self.base_value + self.phi.iter().sum::<f64>() - self.prediction).abs()
    }

    /// The documented JSON form: {base_value, prediction, entries:[...]}.
    pub fn to_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Entry<'a> {
            feature: &'a str,
            #[serde(skip_serializing_if = "Option::is_none")]
            value: Option<f64>,
            phi: f64,
        }
        #[derive(Serialize)]
        struct Doc<'a> {
            base_value: f64,
            prediction: f64,
            entries: Vec<Entry<'a>>,
        }
        let doc = Doc {
            base_value: self.base_value,
            prediction: self.prediction,
            entries: self
                .names
                .iter()
                .zip(&self.phi)
                .zip(&self.feature_values)
                .map(|((name, &phi), &value)| Entry { feature: name, value, phi })
                .collect(),
        };
        Ok(serde_json::to_string(&doc)?)
    }
}

/// Builds the masked evaluation matrix for one coalition: coalition players
/// keep the subject's values, everything else comes from the background row.
pub(crate) fn coalition_matrix(
    background: &BackgroundSet,
    x: &[f64],
    groups: &[Vec<usize>],
    mask: &[bool],
) -> Array2<f64> {
    let mut m = background.values.clone();
    for (g, cols) in groups.iter().enumerate() {
        if mask[g] {
            for &c in cols {
                for r in 0..m.nrows() {
                    m[[r, c]] = x[c];
                }
            }
        }
    }
    m
}

/// Mean prediction over the background with the coalition's columns pinned.
pub(crate) fn coalition_value(
    predict: &dyn PredictProba,
    background: &BackgroundSet,
    x: &[f64],
    groups: &[Vec<usize>],
    mask: &[bool],
) -> f64 {
    let m = coalition_matrix(background, x, groups, mask);
    let preds = predict.predict(m.view());
    preds.iter().sum::<f64>() / preds.len() as f64
}

pub(crate) fn singleton_groups(d: usize) -> Vec<Vec<usize>> {
    (0..d).map(|j| vec![j]).collect()
}

/// Per-row explanations; rows are independent and evaluated in parallel.
///
/// Each row's sampling stream derives from (seed, row contents), so results
/// are order-independent and duplicated rows get identical phi vectors.
pub fn explain_dataset(
    model: &TrainedModel,
    background: &BackgroundSet,
    ds: &TabularDataset,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<Explanation>> {
    if ds.column_names() != model.feature_names {
        return Err(Error::Schema("dataset columns do not match the model".into()));
    }
    (0..ds.n_rows())
        .into_par_iter()
        .map(|i| {
            let row: Vec<f64> = ds.values.row(i).to_vec();
            let row_seed = row
                .iter()
                .fold(seed ^ 0xe8, |h, v| {
                    (h ^ v.to_bits()).wrapping_mul(0x100000001b3)
                });
            kernel_shap(model, background, &row, n_samples, row_seed)
                .map_err(|e| Error::Data(format!("row {i} ({}): {e}", ds.subject_ids[i])))
        })
        .collect()
}

/// One feature of the summary ranking with its per-subject scatter points.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummaryEntry {
    pub feature: String,
    pub mean_abs_phi: f64,
    /// (phi, feature value) per explained subject.
    pub points: Vec<(f64, Option<f64>)>,
}

/// Features ordered by descending mean |phi| (ties by column index).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummaryRanking {
    pub entries: Vec<SummaryEntry>,
}

impl SummaryRanking {
    pub fn top(&self, k: usize) -> &[SummaryEntry] {
        &self.entries[..k.min(self.entries.len())]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("feature,mean_abs_phi,rank\n");
        for (rank, e) in self.entries.iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", e.feature, e.mean_abs_phi, rank + 1));
        }
        out
    }
}

pub fn summary_ranking(explanations: &[Explanation]) -> Result<SummaryRanking> {
    let first = explanations
        .first()
        .ok_or_else(|| Error::Data("summary needs at least one explanation".into()))?;
    let d = first.names.len();
    let mut order: Vec<usize> = (0..d).collect();
    let mean_abs: Vec<f64> = (0..d)
        .map(|j| {
            explanations.iter().map(|e| e.phi[j].abs()).sum::<f64>() / explanations.len() as f64
        })
        .collect();
    order.sort_by(|&a, &b| {
        mean_abs[b].partial_cmp(&mean_abs[a]).unwrap().then(a.cmp(&b))
    });
    let entries = order
        .into_iter()
        .map(|j| SummaryEntry {
            feature: first.names[j].clone(),
            mean_abs_phi: mean_abs[j],
            points: explanations.iter().map(|e| (e.phi[j], e.feature_values[j])).collect(),
        })
        .collect();
    Ok(SummaryRanking { entries })
}

/// One bar of a waterfall plot: the running sum moves from `start` to `end`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WaterfallStep {
    pub feature: String,
    pub value: Option<f64>,
    pub phi: f64,
    pub start: f64,
    pub end: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WaterfallData {
    pub base_value: f64,
    pub prediction: f64,
    /// Steps ordered by descending |phi|.
    pub steps: Vec<WaterfallStep>,
}

/// Orders contributions by magnitude and accumulates the running sum from
/// the base value to the prediction.
pub fn waterfall_data(explanation: &Explanation) -> WaterfallData {
    let mut order: Vec<usize> = (0..explanation.phi.len()).collect();
    order.sort_by(|&a, &b| {
        explanation.phi[b]
            .abs()
            .partial_cmp(&explanation.phi[a].abs())
            .unwrap()
            .then(a.cmp(&b))
    });
    let mut running = explanation.base_value;
    let steps = order
        .into_iter()
        .map(|j| {
            let start = running;
            running += explanation.phi[j];
            WaterfallStep {
                feature: explanation.names[j].clone(),
                value: explanation.feature_values[j],
                phi: explanation.phi[j],
                start,
                end: running,
            }
        })
        .collect();
    WaterfallData {
        base_value: explanation.base_value,
        prediction: explanation.prediction,
        steps,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_explanation(phi: Vec<f64>, base: f64) -> Explanation {
        let d = phi.len();
        let prediction = base + phi.iter().sum::<f64>();
        Explanation {
            base_value: base,
            prediction,
            names: (0..d).map(|j| format!("f{j}")).collect(),
            phi,
            feature_values: (0..d).map(|j| Some(j as f64)).collect(),
            mask_size: d,
        }
    }

    #[test]
    fn waterfall_runs_from_base_to_prediction() {
        let e = toy_explanation(vec![0.2, -0.05, 0.14], 0.445);
        let w = waterfall_data(&e);
        assert!((w.steps[0].start - 0.445).abs() < 1e-15);
        assert!((w.steps.last().unwrap().end - e.prediction).abs() < 1e-9);
        // ordered by |phi| descending
        assert_eq!(w.steps[0].feature, "f0");
        assert_eq!(w.steps[1].feature, "f2");
    }

    #[test]
    fn waterfall_base_plus_positive_sum_reaches_stated_prediction() {
        let e = toy_explanation(vec![0.12, 0.09, 0.05, 0.03], 0.445);
        assert!((e.prediction - 0.735).abs() < 1e-12);
        let w = waterfall_data(&e);
        assert!((w.steps.last().unwrap().end - 0.735).abs() < 1e-9);
    }

    #[test]
    fn all_zero_phi_yields_flat_waterfall() {
        let e = toy_explanation(vec![0.0, 0.0], 0.3);
        let w = waterfall_data(&e);
        for s in &w.steps {
            assert_eq!(s.start, 0.3);
            assert_eq!(s.end, 0.3);
        }
    }

    #[test]
    fn summary_ranks_by_mean_abs_phi_with_index_ties() {
        let a = toy_explanation(vec![0.1, 0.5, -0.5], 0.0);
        let b = toy_explanation(vec![-0.3, 0.5, -0.5], 0.0);
        let r = summary_ranking(&[a, b]).unwrap();
        assert_eq!(r.entries[0].feature, "f1"); // tie with f2 broken by index
        assert_eq!(r.entries[1].feature, "f2");
        assert_eq!(r.entries[2].feature, "f0");
        assert_eq!(r.top(2).len(), 2);
    }

    #[test]
    fn appending_zero_explanation_keeps_order() {
        let a = toy_explanation(vec![0.4, 0.1], 0.0);
        let base = summary_ranking(std::slice::from_ref(&a)).unwrap();
        let z = toy_explanation(vec![0.0, 0.0], 0.0);
        let more = summary_ranking(&[a, z]).unwrap();
        let names =
            |r: &SummaryRanking| r.entries.iter().map(|e| e.feature.clone()).collect::<Vec<_>>();
        assert_eq!(names(&base), names(&more));
    }

    fn small_model_and_data() -> (TrainedModel, BackgroundSet, TabularDataset) {
        use crate::models::{train, ModelKind, ParamRecord};
        let mut rng = crate::util::rng_stream(42, &[0xda]);
        use rand::Rng;
        let x = ndarray::Array2::from_shape_fn((40, 4), |_| rng.random::<f64>() * 2.0 - 1.0);
        let y: Vec<u8> = (0..40).map(|i| (x[[i, 0]] + x[[i, 2]] > 0.0) as u8).collect();
        let ds = TabularDataset::from_matrix(x, y).unwrap();
        let model = train(
            ModelKind::Logreg,
            &ParamRecord::default_for(ModelKind::Logreg, 4),
            &ds,
            0,
        )
        .unwrap();
        let bg = BackgroundSet::from_dataset(&ds.subset_rows(&[0, 1, 2, 3, 4]), &model).unwrap();
        (model, bg, ds)
    }

    #[test]
    fn explain_dataset_preserves_order_and_duplicates_match() {
        let (model, bg, ds) = small_model_and_data();
        // duplicate row 0 at the end (fresh subject id keeps the table valid)
        let mut rows: Vec<usize> = vec![0, 5, 9];
        rows.push(0);
        let mut target = ds.subset_rows(&rows);
        target.subject_ids[3] = "dup_of_first".into();
        let explanations = explain_dataset(&model, &bg, &target, 64, 3).unwrap();
        assert_eq!(explanations.len(), 4);
        assert_eq!(explanations[0].phi, explanations[3].phi);
        assert_ne!(explanations[0].phi, explanations[1].phi);
    }

    #[test]
    fn mean_reconstructed_prediction_matches_predict_proba() {
        let (model, bg, ds) = small_model_and_data();
        let target = ds.subset_rows(&[1, 3, 6, 8]);
        let explanations = explain_dataset(&model, &bg, &target, 64, 3).unwrap();
        let reconstructed: f64 = explanations
            .iter()
            .map(|e| e.base_value + e.phi.iter().sum::<f64>())
            .sum::<f64>()
            / explanations.len() as f64;
        let direct: f64 = model.predict_proba(&target).unwrap().iter().sum::<f64>() / 4.0;
        assert!((reconstructed - direct).abs() < 1e-6);
    }

    #[test]
    fn trained_model_is_sync_for_concurrent_prediction() {
        fn assert_sync<T: Sync + Send>() {}
        assert_sync::<TrainedModel>();
        assert_sync::<BackgroundSet>();
    }
}

//! The five classifier families behind one fit/predict-probability contract,
//! with intrinsic importance extractors and versioned serialization.

pub mod forest;
pub mod gboost;
pub mod logreg;
pub mod svm;
pub mod tree;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::dataset::TabularDataset;
use crate::error::{Error, Result};
use crate::models::gboost::{GboostModel, GboostSettings};
use crate::models::logreg::LogregModel;
use crate::models::svm::{GammaMode, Kernel, SvmModel};
use crate::models::tree::{Criterion, Splitter, TreeModel, TreeSettings};
use crate::util::rng_stream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Logreg,
    Dtree,
    Rforest,
    Gboost,
    SvmPoly,
    SvmRadial,
}

impl ModelKind {
    pub const ALL: [ModelKind; 6] = [
        ModelKind::Logreg,
        ModelKind::Dtree,
        ModelKind::Rforest,
        ModelKind::Gboost,
        ModelKind::SvmPoly,
        ModelKind::SvmRadial,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Logreg => "logreg",
            ModelKind::Dtree => "dtree",
            ModelKind::Rforest => "rforest",
            ModelKind::Gboost => "gboost",
            ModelKind::SvmPoly => "svm_poly",
            ModelKind::SvmRadial => "svm_radial",
        }
    }

    pub fn is_tree_based(self) -> bool {
        matches!(self, ModelKind::Dtree | ModelKind::Rforest | ModelKind::Gboost)
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "logreg" => Ok(ModelKind::Logreg),
            "dtree" => Ok(ModelKind::Dtree),
            "rforest" => Ok(ModelKind::Rforest),
            "gboost" => Ok(ModelKind::Gboost),
            "svm_poly" => Ok(ModelKind::SvmPoly),
            "svm_radial" => Ok(ModelKind::SvmRadial),
            other => Err(Error::Config(format!("unknown model kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Penalty {
    L2,
    None,
}

/// Hyperparameter values for one model family, mirroring the tuned search
/// space field for field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ParamRecord {
    Logreg {
        c: f64,
        penalty: Penalty,
    },
    Dtree {
        criterion: Criterion,
        splitter: Splitter,
        max_depth: usize,
        /// Fraction of training rows; clamped to 2 absolute samples.
        min_samples_split: f64,
    },
    Rforest {
        n_estimators: usize,
        max_features: usize,
        min_samples_leaf: usize,
    },
    Gboost {
        n_estimators: usize,
        max_depth: usize,
        learning_rate: f64,
        gamma: f64,
        min_child_weight: f64,
        subsample: f64,
        colsample_bytree: f64,
    },
    SvmPoly {
        c: f64,
        degree: usize,
        gamma: GammaMode,
    },
    SvmRadial {
        c: f64,
        gamma: GammaMode,
    },
}

impl ParamRecord {
    pub fn kind(&self) -> ModelKind {
        match self {
            ParamRecord::Logreg { .. } => ModelKind::Logreg,
            ParamRecord::Dtree { .. } => ModelKind::Dtree,
            ParamRecord::Rforest { .. } => ModelKind::Rforest,
            ParamRecord::Gboost { .. } => ModelKind::Gboost,
            ParamRecord::SvmPoly { .. } => ModelKind::SvmPoly,
            ParamRecord::SvmRadial { .. } => ModelKind::SvmRadial,
        }
    }

    /// Community-default parameters, used by forward selection.
    pub fn default_for(kind: ModelKind, n_features: usize) -> ParamRecord {
        match kind {
            ModelKind::Logreg => ParamRecord::Logreg { c: 1.0, penalty: Penalty::L2 },
            ModelKind::Dtree => ParamRecord::Dtree {
                criterion: Criterion::Gini,
                splitter: Splitter::Best,
                max_depth: 100,
                min_samples_split: 0.0,
            },
            ModelKind::Rforest => ParamRecord::Rforest {
                n_estimators: 500,
                max_features: (n_features as f64).sqrt().round().max(1.0) as usize,
                min_samples_leaf: 1,
            },
            ModelKind::Gboost => ParamRecord::Gboost {
                n_estimators: 100,
                max_depth: 6,
                learning_rate: 0.3,
                gamma: 0.0,
                min_child_weight: 1.0,
                subsample: 1.0,
                colsample_bytree: 1.0,
            },
            ModelKind::SvmPoly => {
                ParamRecord::SvmPoly { c: 1.0, degree: 3, gamma: GammaMode::Scale }
            }
            ModelKind::SvmRadial => ParamRecord::SvmRadial { c: 1.0, gamma: GammaMode::Scale },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModelImpl {
    Logreg(LogregModel),
    Tree(TreeModel),
    Forest(forest::ForestModel),
    Gboost(GboostModel),
    Svm(SvmModel),
}

/// A fitted classifier. Immutable; probability prediction is safe to call
/// concurrently from many threads.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainedModel {
    pub kind: ModelKind,
    pub params: ParamRecord,
    pub feature_names: Vec<String>,
    /// Fraction of class-1 subjects in the training data.
    pub class_prior: f64,
    /// Maximum KKT violation at SMO convergence (SVM kinds only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kkt_violation: Option<f64>,
    pub inner: ModelImpl,
}

fn check_finite(x: ArrayView2<'_, f64>) -> Result<()> {
    if let Some(((i, j), v)) = x.indexed_iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::Numeric(format!(
            "non-finite feature value {v} at row {i}, column {j}; preprocess the data first"
        )));
    }
    Ok(())
}

/// Fits one model family on a fully numeric feature table.
pub fn train(
    kind: ModelKind,
    params: &ParamRecord,
    ds: &TabularDataset,
    seed: u64,
) -> Result<TrainedModel> {
    if params.kind() != kind {
        return Err(Error::Config(format!(
            "parameter record is for {}, not {}",
            params.kind().as_str(),
            kind.as_str()
        )));
    }
    let x = ds.values.view();
    let y = &ds.labels;
    check_finite(x)?;
    let n = x.nrows();
    let n_pos = y.iter().filter(|&&l| l == 1).count();
    if n_pos == 0 || n_pos == n {
        return Err(Error::Data("training labels contain a single class".into()));
    }

    let inner = match params.clone() {
        ParamRecord::Logreg { c, penalty } => {
            let ridge = match penalty {
                Penalty::L2 => 1.0 / c,
                Penalty::None => 1e-10,
            };
            ModelImpl::Logreg(logreg::fit(x, y, ridge)?)
        }
        ParamRecord::Dtree { criterion, splitter, max_depth, min_samples_split } => {
            let min_split = ((min_samples_split * n as f64).ceil() as usize).max(2);
            let settings = TreeSettings {
                criterion,
                splitter,
                max_depth,
                min_samples_split: min_split,
                min_samples_leaf: 1,
                max_features: None,
            };
            let mut rng = rng_stream(seed, &[0xd7]);
            ModelImpl::Tree(tree::build_tree(x, y, (0..n).collect(), &settings, &mut rng))
        }
        ParamRecord::Rforest { n_estimators, max_features, min_samples_leaf } => {
            ModelImpl::Forest(forest::fit(
                x,
                y,
                n_estimators,
                max_features,
                min_samples_leaf,
                true,
                seed,
            ))
        }
        ParamRecord::Gboost {
            n_estimators,
            max_depth,
            learning_rate,
            gamma,
            min_child_weight,
            subsample,
            colsample_bytree,
        } => {
            let settings = GboostSettings {
                n_estimators,
                max_depth,
                learning_rate,
                gamma,
                min_child_weight,
                subsample,
                colsample_bytree,
            };
            ModelImpl::Gboost(gboost::fit(x, y, &settings, seed))
        }
        ParamRecord::SvmPoly { c, degree, gamma } => {
            let kernel = Kernel::Poly { degree: degree as u32, gamma: gamma.resolve(x) };
            let (m, _kkt) = svm::fit(x, y, c, kernel, seed)?;
            ModelImpl::Svm(m)
        }
        ParamRecord::SvmRadial { c, gamma } => {
            let kernel = Kernel::Radial { gamma: gamma.resolve(x) };
            let (m, _kkt) = svm::fit(x, y, c, kernel, seed)?;
            ModelImpl::Svm(m)
        }
    };
    let kkt_violation = match (&inner, kind) {
        (ModelImpl::Svm(_), _) => {
            // recompute on demand is costly; svm::fit reported it already
            None
        }
        _ => None,
    };
    let mut model = TrainedModel {
        kind,
        params: params.clone(),
        feature_names: ds.column_names(),
        class_prior: n_pos as f64 / n as f64,
        kkt_violation,
        inner,
    };
    // store the SVM convergence diagnostic
    if let ParamRecord::SvmPoly { .. } | ParamRecord::SvmRadial { .. } = params {
        if let ModelImpl::Svm(_) = &model.inner {
            model.kkt_violation = svm_kkt(&model, ds);
        }
    }
    Ok(model)
}

/// Recomputes the maximal KKT violation of a fitted SVM on its training set.
fn svm_kkt(model: &TrainedModel, ds: &TabularDataset) -> Option<f64> {
    let ModelImpl::Svm(m) = &model.inner else { return None };
    // E_i = f(x_i) - y_i with y in {-1, +1}; same criterion as the solver
    let c = match model.params {
        ParamRecord::SvmPoly { c, .. } | ParamRecord::SvmRadial { c, .. } => c,
        _ => return None,
    };
    let mut worst = 0.0f64;
    for i in 0..ds.n_rows() {
        let row: Vec<f64> = ds.values.row(i).to_vec();
        let yi = if ds.labels[i] == 1 { 1.0 } else { -1.0 };
        let f = m.decision_value(&row);
        let r = (f - yi) * yi;
        // alpha for this row, 0 when it is not a support vector
        let alpha = m
            .support_vectors
            .iter()
            .zip(&m.dual_coef)
            .find(|(sv, _)| sv.iter().zip(&row).all(|(a, b)| a == b))
            .map(|(_, &coef)| coef.abs())
            .unwrap_or(0.0);
        let v = if alpha < 1e-12 {
            (-r).max(0.0)
        } else if alpha > c - 1e-12 {
            r.max(0.0)
        } else {
            r.abs()
        };
        worst = worst.max(v);
    }
    Some(worst)
}

impl TrainedModel {
    /// Class-1 probability per row, after validating the column contract.
    pub fn predict_proba(&self, ds: &TabularDataset) -> Result<Vec<f64>> {
        let names = ds.column_names();
        if names != self.feature_names {
            let missing: Vec<&String> =
                self.feature_names.iter().filter(|n| !names.contains(n)).collect();
            return Err(Error::Schema(format!(
                "feature columns do not match training; missing: {missing:?}"
            )));
        }
        Ok(self.predict_proba_raw(ds.values.view()))
    }

    /// Probability prediction on a bare matrix in training column order.
    pub fn predict_proba_raw(&self, x: ArrayView2<'_, f64>) -> Vec<f64> {
        (0..x.nrows())
            .map(|i| {
                let row = x.row(i);
                let row = row.to_slice().expect("contiguous row");
                self.predict_row(row)
            })
            .collect()
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        match &self.inner {
            ModelImpl::Logreg(m) => m.predict_row(row),
            ModelImpl::Tree(m) => m.predict_row(row),
            ModelImpl::Forest(m) => m.predict_row(row),
            ModelImpl::Gboost(m) => m.predict_row(row),
            ModelImpl::Svm(m) => m.predict_row(row),
        }
    }

    /// Impurity- or gain-based importance for tree-based kinds, normalized
    /// to sum 1 when any split exists.
    pub fn natural_importance(&self) -> Result<Vec<f64>> {
        let d = self.feature_names.len();
        let raw = match &self.inner {
            ModelImpl::Tree(m) => m.gain.clone(),
            ModelImpl::Forest(m) => m.total_gain(d),
            ModelImpl::Gboost(m) => m.gain.clone(),
            _ => {
                return Err(Error::Unsupported(format!(
                    "natural importance requires a tree-based model, got {}",
                    self.kind.as_str()
                )))
            }
        };
        let total: f64 = raw.iter().sum();
        if total > 0.0 {
            Ok(raw.iter().map(|g| g / total).collect())
        } else {
            Ok(raw)
        }
    }

    /// Signed coefficients with feature names plus the ranking of feature
    /// indices by absolute coefficient, for the logistic model.
    pub fn log_odds(&self) -> Result<(Vec<(String, f64)>, Vec<usize>)> {
        let ModelImpl::Logreg(m) = &self.inner else {
            return Err(Error::Unsupported(format!(
                "log odds require a logreg model, got {}",
                self.kind.as_str()
            )));
        };
        let coefs: Vec<(String, f64)> = self
            .feature_names
            .iter()
            .cloned()
            .zip(m.theta.iter().copied())
            .collect();
        let mut ranking: Vec<usize> = (0..coefs.len()).collect();
        ranking.sort_by(|&a, &b| {
            m.theta[b]
                .abs()
                .partial_cmp(&m.theta[a].abs())
                .unwrap()
                .then(a.cmp(&b))
        });
        Ok((coefs, ranking))
    }

    /// Per-iteration training loss (gboost only).
    pub fn training_loss_trace(&self) -> Option<&[f64]> {
        match &self.inner {
            ModelImpl::Gboost(m) => Some(&m.train_loss),
            _ => None,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = VersionedModel { format_version: MODEL_FORMAT_VERSION, model: self.clone() };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<TrainedModel> {
        #[derive(Deserialize)]
        struct Header {
            format_version: u32,
        }
        let header: Header = serde_json::from_str(text)?;
        if header.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Config(format!(
                "model format version {} unsupported (expected {})",
                header.format_version, MODEL_FORMAT_VERSION
            )));
        }
        let doc: VersionedModel = serde_json::from_str(text)?;
        Ok(doc.model)
    }
}

const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct VersionedModel {
    format_version: u32,
    model: TrainedModel,
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{arr2, Array2};

    fn xor_ds() -> TabularDataset {
        TabularDataset::from_matrix(
            arr2(&[[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]]),
            vec![0, 1, 1, 0],
        )
        .unwrap()
    }

    fn train_acc(m: &TrainedModel, ds: &TabularDataset) -> f64 {
        let proba = m.predict_proba(ds).unwrap();
        let correct = proba
            .iter()
            .zip(&ds.labels)
            .filter(|(&p, &y)| (p >= 0.5) as u8 == y)
            .count();
        correct as f64 / ds.n_rows() as f64
    }

    #[test]
    fn dtree_depth_one_cannot_solve_xor_but_depth_two_can() {
        let ds = xor_ds();
        let stump_params = ParamRecord::Dtree {
            criterion: Criterion::Gini,
            splitter: Splitter::Best,
            max_depth: 1,
            min_samples_split: 0.0,
        };
        let stump = train(ModelKind::Dtree, &stump_params, &ds, 1).unwrap();
        assert_eq!(train_acc(&stump, &ds), 0.5);

        let deep_params = ParamRecord::Dtree {
            criterion: Criterion::Gini,
            splitter: Splitter::Best,
            max_depth: 2,
            min_samples_split: 0.0,
        };
        let deep = train(ModelKind::Dtree, &deep_params, &ds, 1).unwrap();
        assert_eq!(train_acc(&deep, &ds), 1.0);
    }

    #[test]
    fn logreg_unpenalized_separates_margin_one_data() {
        let ds = TabularDataset::from_matrix(
            arr2(&[[-2.0], [-1.0], [1.0], [2.0]]),
            vec![0, 0, 1, 1],
        )
        .unwrap();
        let params = ParamRecord::Logreg { c: 1.0, penalty: Penalty::None };
        let m = train(ModelKind::Logreg, &params, &ds, 0).unwrap();
        assert_eq!(train_acc(&m, &ds), 1.0);
    }

    #[test]
    fn single_class_labels_rejected() {
        let ds = TabularDataset::from_matrix(arr2(&[[0.0], [1.0]]), vec![1, 1]).unwrap();
        let params = ParamRecord::default_for(ModelKind::Logreg, 1);
        assert!(train(ModelKind::Logreg, &params, &ds, 0).is_err());
    }

    #[test]
    fn non_finite_feature_rejected() {
        let ds =
            TabularDataset::from_matrix(arr2(&[[f64::NAN], [1.0]]), vec![0, 1]).unwrap();
        let params = ParamRecord::default_for(ModelKind::Logreg, 1);
        assert!(matches!(
            train(ModelKind::Logreg, &params, &ds, 0).unwrap_err(),
            Error::Numeric(_)
        ));
    }

    #[test]
    fn kind_param_mismatch_rejected() {
        let ds = TabularDataset::from_matrix(arr2(&[[0.0], [1.0]]), vec![0, 1]).unwrap();
        let params = ParamRecord::default_for(ModelKind::Logreg, 1);
        assert!(train(ModelKind::Dtree, &params, &ds, 0).is_err());
    }

    #[test]
    fn probabilities_stay_in_unit_interval() {
        let mut rng = crate::util::rng_stream(3, &[7]);
        use rand::Rng;
        let x = Array2::from_shape_fn((30, 4), |_| rng.random::<f64>() * 4.0 - 2.0);
        let y: Vec<u8> = (0..30).map(|i| (i % 2) as u8).collect();
        let ds = TabularDataset::from_matrix(x, y).unwrap();
        for kind in ModelKind::ALL {
            let params = ParamRecord::default_for(kind, 4);
            let params = match params {
                ParamRecord::Rforest { max_features, min_samples_leaf, .. } => {
                    ParamRecord::Rforest { n_estimators: 20, max_features, min_samples_leaf }
                }
                ParamRecord::Gboost { .. } => ParamRecord::Gboost {
                    n_estimators: 10,
                    max_depth: 3,
                    learning_rate: 0.3,
                    gamma: 0.0,
                    min_child_weight: 1.0,
                    subsample: 1.0,
                    colsample_bytree: 1.0,
                },
                p => p,
            };
            let m = train(kind, &params, &ds, 5).unwrap();
            for p in m.predict_proba(&ds).unwrap() {
                assert!((0.0..=1.0).contains(&p), "{kind:?} produced {p}");
            }
        }
    }

    #[test]
    fn gboost_zero_estimators_returns_prior() {
        let ds = TabularDataset::from_matrix(
            arr2(&[[0.0], [1.0], [2.0], [3.0]]),
            vec![0, 1, 1, 1],
        )
        .unwrap();
        let params = ParamRecord::Gboost {
            n_estimators: 0,
            max_depth: 3,
            learning_rate: 0.3,
            gamma: 0.0,
            min_child_weight: 1.0,
            subsample: 1.0,
            colsample_bytree: 1.0,
        };
        let m = train(ModelKind::Gboost, &params, &ds, 0).unwrap();
        for p in m.predict_proba(&ds).unwrap() {
            assert!((p - 0.75).abs() < 1e-12);
        }
    }

    #[test]
    fn determinism_on_a_probe_set() {
        let mut rng = crate::util::rng_stream(11, &[2]);
        use rand::Rng;
        let x = Array2::from_shape_fn((40, 3), |_| rng.random::<f64>() * 2.0 - 1.0);
        let y: Vec<u8> = (0..40).map(|i| (i % 2) as u8).collect();
        let ds = TabularDataset::from_matrix(x, y).unwrap();
        let probe = ds.subset_rows(&[0, 5, 7, 13]);
        for kind in ModelKind::ALL {
            let mut params = ParamRecord::default_for(kind, 3);
            if let ParamRecord::Rforest { ref mut n_estimators, .. } = params {
                *n_estimators = 15;
            }
            let a = train(kind, &params, &ds, 42).unwrap();
            let b = train(kind, &params, &ds, 42).unwrap();
            assert_eq!(
                a.predict_proba(&probe).unwrap(),
                b.predict_proba(&probe).unwrap(),
                "{kind:?} not deterministic"
            );
        }
    }

    #[test]
    fn natural_importance_stump_and_unused_features() {
        let x = arr2(&[
            [0.0, 3.0, 1.0], [1.0, 3.0, 1.0], [2.0, 3.0, 1.0], [3.0, 3.0, 1.0],
        ]);
        let ds = TabularDataset::from_matrix(x, vec![0, 0, 1, 1]).unwrap();
        let params = ParamRecord::Dtree {
            criterion: Criterion::Gini,
            splitter: Splitter::Best,
            max_depth: 1,
            min_samples_split: 0.0,
        };
        let m = train(ModelKind::Dtree, &params, &ds, 0).unwrap();
        let imp = m.natural_importance().unwrap();
        assert_eq!(imp, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn natural_importance_normalizes_and_rejects_non_tree() {
        let mut rng = crate::util::rng_stream(5, &[4]);
        use rand::Rng;
        let x = Array2::from_shape_fn((50, 4), |_| rng.random::<f64>());
        let y: Vec<u8> = (0..50).map(|i| (i < 25) as u8).collect();
        let ds = TabularDataset::from_matrix(x, y).unwrap();
        let params = ParamRecord::Rforest { n_estimators: 10, max_features: 2, min_samples_leaf: 1 };
        let m = train(ModelKind::Rforest, &params, &ds, 1).unwrap();
        let imp = m.natural_importance().unwrap();
        assert!((imp.iter().sum::<f64>() - 1.0).abs() < 1e-9);

        let lr = train(ModelKind::Logreg, &ParamRecord::default_for(ModelKind::Logreg, 4), &ds, 0)
            .unwrap();
        assert!(matches!(lr.natural_importance().unwrap_err(), Error::Unsupported(_)));
    }

    #[test]
    fn log_odds_ranking_and_zero_coefficient() {
        let x = arr2(&[
            [-2.0, 0.5], [-1.0, 0.5], [1.0, 0.5], [2.0, 0.5],
            [-1.5, 0.5], [1.5, 0.5],
        ]);
        let ds = TabularDataset::from_matrix(x, vec![0, 0, 1, 1, 0, 1]).unwrap();
        let m = train(
            ModelKind::Logreg,
            &ParamRecord::Logreg { c: 1.0, penalty: Penalty::L2 },
            &ds,
            0,
        )
        .unwrap();
        let (coefs, ranking) = m.log_odds().unwrap();
        // constant feature gets (near) zero weight; odds ratio exp(0)=1
        assert!(coefs[1].1.abs() < 1e-6);
        assert!((coefs[1].1.exp() - 1.0).abs() < 1e-5);
        assert_eq!(ranking[0], 0);
        let mut sorted = ranking.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, vec![0, 1]);

        let dt = train(ModelKind::Dtree, &ParamRecord::default_for(ModelKind::Dtree, 2), &ds, 0)
            .unwrap();
        assert!(dt.log_odds().is_err());
    }

    #[test]
    fn column_mismatch_error_lists_missing_names() {
        let ds = TabularDataset::from_matrix(arr2(&[[0.0], [1.0]]), vec![0, 1]).unwrap();
        let m = train(ModelKind::Logreg, &ParamRecord::default_for(ModelKind::Logreg, 1), &ds, 0)
            .unwrap();
        let mut other = ds.clone();
        other.columns[0].name = "renamed".into();
        let err = m.predict_proba(&other).unwrap_err();
        assert!(err.to_string().contains("f0"), "got: {err}");
    }

    #[test]
    fn model_serialization_roundtrip_and_version_check() {
        let ds = TabularDataset::from_matrix(
            arr2(&[[-1.0], [-0.5], [0.5], [1.0]]),
            vec![0, 0, 1, 1],
        )
        .unwrap();
        for kind in ModelKind::ALL {
            let mut params = ParamRecord::default_for(kind, 1);
            if let ParamRecord::Rforest { ref mut n_estimators, .. } = params {
                *n_estimators = 5;
            }
            let m = train(kind, &params, &ds, 3).unwrap();
            let text = m.to_json().unwrap();
            let back = TrainedModel::from_json(&text).unwrap();
            assert_eq!(m.predict_proba(&ds).unwrap(), back.predict_proba(&ds).unwrap());
        }
        let m = train(ModelKind::Logreg, &ParamRecord::default_for(ModelKind::Logreg, 1), &ds, 0)
            .unwrap();
        let bumped = m.to_json().unwrap().replace("\"format_version\": 1", "\"format_version\": 9");
        assert!(TrainedModel::from_json(&bumped).is_err());
    }
}

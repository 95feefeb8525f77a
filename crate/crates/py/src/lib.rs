//! Python bindings exposing the main tabsight types and operations.

use std::path::Path;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use tabsight::dataset::{
    apply_preprocess, engineer_roi_features, fit_preprocess, generate_synthetic, load_csv,
    save_csv, save_schema, select_feature_set, stratified_split, FeatureSet, PreprocessParams,
    Schema, SyntheticConfig, TabularDataset,
};
use tabsight::explain::{kernel_shap, BackgroundSet};
use tabsight::importance::{kendall_tau_values, permutation_importance, Metric};
use tabsight::metrics::score_probabilities;
use tabsight::models::{train, ModelKind, ParamRecord, TrainedModel};
use tabsight::Error;

fn err(e: Error) -> PyErr {
    match e {
        Error::Config(_) | Error::Schema(_) => PyValueError::new_err(e.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

/// A column-labeled cohort table with binary labels.
#[pyclass(name = "Dataset", skip_from_py_object)]
#[derive(Clone)]
struct PyDataset {
    inner: TabularDataset,
}

#[pymethods]
impl PyDataset {
    /// Load a cohort CSV with its sidecar schema JSON.
    #[staticmethod]
    fn from_csv(path: &str, schema_path: &str) -> PyResult<Self> {
        let schema = Schema::from_file(Path::new(schema_path)).map_err(err)?;
        let inner = load_csv(Path::new(path), &schema).map_err(err)?;
        Ok(PyDataset { inner })
    }

    /// Generate a synthetic cohort; `config_json` overrides the defaults.
    #[staticmethod]
    #[pyo3(signature = (seed, config_json=None))]
    fn synthetic(seed: u64, config_json: Option<&str>) -> PyResult<(Self, String)> {
        let cfg: SyntheticConfig = match config_json {
            Some(text) => serde_json::from_str(text)
                .map_err(|e| PyValueError::new_err(format!("invalid config: {e}")))?,
            None => SyntheticConfig::default(),
        };
        let (ds, truth) = generate_synthetic(&cfg, seed).map_err(err)?;
        let truth_json = serde_json::to_string(&truth)
            .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
        Ok((PyDataset { inner: ds }, truth_json))
    }

    fn engineer(&self) -> PyResult<Self> {
        Ok(PyDataset { inner: engineer_roi_features(&self.inner).map_err(err)? })
    }

    fn feature_set(&self, fs: &str) -> PyResult<Self> {
        let fs: FeatureSet = fs.parse().map_err(err)?;
        Ok(PyDataset { inner: select_feature_set(&self.inner, fs).map_err(err)? })
    }

    fn split(&self, test_fraction: f64, seed: u64) -> PyResult<(Vec<usize>, Vec<usize>)> {
        let s = stratified_split(&self.inner, test_fraction, seed).map_err(err)?;
        Ok((s.train, s.test))
    }

    fn subset(&self, rows: Vec<usize>) -> PyResult<Self> {
        if rows.iter().any(|&r| r >= self.inner.n_rows()) {
            return Err(PyValueError::new_err("row index out of range"));
        }
        Ok(PyDataset { inner: self.inner.subset_rows(&rows) })
    }

    fn save(&self, path: &str, schema_path: &str) -> PyResult<()> {
        save_csv(&self.inner, Path::new(path), "label").map_err(err)?;
        let schema = Schema::describe(&self.inner, "label");
        save_schema(&schema, Path::new(schema_path)).map_err(err)
    }

    #[getter]
    fn n_rows(&self) -> usize {
        self.inner.n_rows()
    }

    #[getter]
    fn n_cols(&self) -> usize {
        self.inner.n_cols()
    }

    #[getter]
    fn columns(&self) -> Vec<String> {
        self.inner.column_names()
    }

    #[getter]
    fn labels(&self) -> Vec<u8> {
        self.inner.labels.clone()
    }

    #[getter]
    fn subject_ids(&self) -> Vec<String> {
        self.inner.subject_ids.clone()
    }

    /// Row-major nested list; missing cells come back as NaN.
    fn values(&self) -> Vec<Vec<f64>> {
        (0..self.inner.n_rows()).map(|i| self.inner.values.row(i).to_vec()).collect()
    }

    fn __repr__(&self) -> String {
        format!("Dataset({} subjects x {} columns)", self.inner.n_rows(), self.inner.n_cols())
    }
}

/// Median-impute + standardize transform fitted on a training partition.
#[pyclass(name = "Preprocess", skip_from_py_object)]
#[derive(Clone)]
struct PyPreprocess {
    inner: PreprocessParams,
}

#[pymethods]
impl PyPreprocess {
    #[staticmethod]
    fn fit(ds: &PyDataset) -> Self {
        PyPreprocess { inner: fit_preprocess(&ds.inner) }
    }

    fn apply(&self, ds: &PyDataset) -> PyResult<PyDataset> {
        Ok(PyDataset { inner: apply_preprocess(&self.inner, &ds.inner).map_err(err)? })
    }
}

/// A fitted classifier with probability prediction.
#[pyclass(name = "Model")]
struct PyModel {
    inner: TrainedModel,
}

#[pymethods]
impl PyModel {
    /// Train one family on fully numeric (preprocessed) data.
    /// `params_json` is a ParamRecord document; omit for defaults.
    #[staticmethod]
    #[pyo3(signature = (kind, ds, seed, params_json=None))]
    fn train(kind: &str, ds: &PyDataset, seed: u64, params_json: Option<&str>) -> PyResult<Self> {
        let kind: ModelKind = kind.parse().map_err(err)?;
        let params: ParamRecord = match params_json {
            Some(text) => serde_json::from_str(text)
                .map_err(|e| PyValueError::new_err(format!("invalid params: {e}")))?,
            None => ParamRecord::default_for(kind, ds.inner.n_cols()),
        };
        Ok(PyModel { inner: train(kind, &params, &ds.inner, seed).map_err(err)? })
    }

    fn predict_proba(&self, ds: &PyDataset) -> PyResult<Vec<f64>> {
        self.inner.predict_proba(&ds.inner).map_err(err)
    }

    fn natural_importance(&self) -> PyResult<Vec<f64>> {
        self.inner.natural_importance().map_err(err)
    }

    fn log_odds(&self) -> PyResult<Vec<(String, f64)>> {
        Ok(self.inner.log_odds().map_err(err)?.0)
    }

    fn permutation_importance(
        &self,
        ds: &PyDataset,
        metric: &str,
        n_repeats: usize,
        seed: u64,
    ) -> PyResult<Vec<(String, f64)>> {
        let metric: Metric = metric.parse().map_err(err)?;
        let report =
            permutation_importance(&self.inner, &ds.inner, metric, n_repeats, seed).map_err(err)?;
        Ok(report.names.into_iter().zip(report.mean_drop).collect())
    }

    fn save(&self, path: &str) -> PyResult<()> {
        let text = self.inner.to_json().map_err(err)?;
        std::fs::write(path, text).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
        Ok(PyModel { inner: TrainedModel::from_json(&text).map_err(err)? })
    }

    #[getter]
    fn kind(&self) -> String {
        self.inner.kind.as_str().to_string()
    }

    #[getter]
    fn feature_names(&self) -> Vec<String> {
        self.inner.feature_names.clone()
    }
}

/// Kernel SHAP explanation of one row of `ds`, marginalized over
/// `background`. Returns {base_value, prediction, phi: {feature: value}}.
#[pyfunction]
#[pyo3(signature = (model, background, ds, row, n_samples=2048, seed=0))]
fn shap_explain<'py>(
    py: Python<'py>,
    model: &PyModel,
    background: &PyDataset,
    ds: &PyDataset,
    row: usize,
    n_samples: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    if row >= ds.inner.n_rows() {
        return Err(PyValueError::new_err("row index out of range"));
    }
    let bg = BackgroundSet::from_dataset(&background.inner, &model.inner).map_err(err)?;
    let x: Vec<f64> = ds.inner.values.row(row).to_vec();
    let n_samples = n_samples.max(2 * x.len() + 2);
    let e = kernel_shap(&model.inner, &bg, &x, n_samples, seed).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("base_value", e.base_value)?;
    out.set_item("prediction", e.prediction)?;
    let phi = PyDict::new(py);
    for (name, value) in e.names.iter().zip(&e.phi) {
        phi.set_item(name, *value)?;
    }
    out.set_item("phi", phi)?;
    Ok(out)
}

/// Classification scores of probability predictions at threshold 0.5.
#[pyfunction]
fn score<'py>(py: Python<'py>, y_true: Vec<u8>, proba: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
    let report = score_probabilities(&y_true, &proba).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("acc", report.acc)?;
    out.set_item("bacc", report.bacc)?;
    out.set_item("auroc", report.auroc)?;
    out.set_item("f1_macro", report.f1_macro)?;
    out.set_item("mcc", report.mcc)?;
    out.set_item("no_information_rate", report.no_information_rate)?;
    Ok(out)
}

/// Tie-corrected Kendall tau-b between paired score vectors.
#[pyfunction]
fn kendall_tau(a: Vec<f64>, b: Vec<f64>) -> PyResult<f64> {
    kendall_tau_values(&a, &b).map_err(err)
}

#[pymodule]
fn tabsight_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDataset>()?;
    m.add_class::<PyPreprocess>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(shap_explain, m)?)?;
    m.add_function(wrap_pyfunction!(score, m)?)?;
    m.add_function(wrap_pyfunction!(kendall_tau, m)?)?;
    Ok(())
}

//! Train-statistics preprocessing: median imputation, centering, scaling.
//!
//! Parameters are fitted from a training partition only and reapplied to
//! validation, test, and external data, so every CV fold refits them.

use serde::{Deserialize, Serialize};

use crate::dataset::TabularDataset;
use crate::error::{Error, Result};

/// Per-column statistics from a training partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessParams {
    pub columns: Vec<String>,
    pub mean: Vec<f64>,
    /// Population standard deviation; 1 for degenerate columns.
    pub std: Vec<f64>,
    pub median: Vec<f64>,
}

fn column_stats(values: &[f64], name: &str) -> (f64, f64, f64) {
    let present: Vec<f64> = values.iter().copied().filter(|v| !v.is_nan()).collect();
    if present.is_empty() {
        log::warn!("column '{name}' is entirely missing in the training partition; median set to 0");
        return (0.0, 1.0, 0.0);
    }
    let n = present.len() as f64;
    let mean = present.iter().sum::<f64>() / n;
    let var = present.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let std = if var > 0.0 { var.sqrt() } else { 1.0 };
    let mut sorted = present;
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mid = sorted.len() / 2;
    let median = if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        (sorted[mid - 1] + sorted[mid]) / 2.0
    };
    (mean, std, median)
}

/// Fits imputation and standardization statistics on a training view.
pub fn fit_preprocess(train: &TabularDataset) -> PreprocessParams {
    let mut params = PreprocessParams {
        columns: train.column_names(),
        mean: Vec::with_capacity(train.n_cols()),
        std: Vec::with_capacity(train.n_cols()),
        median: Vec::with_capacity(train.n_cols()),
    };
    for (j, col) in train.columns.iter().enumerate() {
        let column: Vec<f64> = train.values.column(j).to_vec();
        // impute-then-standardize: the imputed median participates in the
        // centering statistics, matching a fit on the imputed matrix
        let imputed: Vec<f64> = {
            let (_, _, median) = column_stats(&column, &col.name);
            column.iter().map(|&v| if v.is_nan() { median } else { v }).collect()
        };
        let (mean, std, median) = column_stats(&imputed, &col.name);
        params.mean.push(mean);
        params.std.push(std);
        params.median.push(median);
    }
    params
}

/// Applies imputation and standardization with previously fitted statistics.
/// Labels and subject ids pass through untouched.
pub fn apply_preprocess(params: &PreprocessParams, ds: &TabularDataset) -> Result<TabularDataset> {
    if params.columns != ds.column_names() {
        let missing: Vec<&String> =
            params.columns.iter().filter(|c| ds.column_index(c).is_none()).collect();
        return Err(Error::Schema(format!(
            "preprocess params fitted on different columns; missing from data: {missing:?}"
        )));
    }
    let mut out = ds.clone();
    for j in 0..ds.n_cols() {
        for i in 0..ds.n_rows() {
            let raw = ds.values[[i, j]];
            let v = if raw.is_nan() { params.median[j] } else { raw };
            out.values[[i, j]] = (v - params.mean[j]) / params.std[j];
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{ColumnMeta, Role};
    use ndarray::Array2;

    fn ds_from(cols: Vec<(&str, Vec<f64>)>, labels: Vec<u8>) -> TabularDataset {
        let n = labels.len();
        let ncol = cols.len();
        let mut values = Array2::zeros((n, ncol));
        for (j, (_, data)) in cols.iter().enumerate() {
            for (i, &v) in data.iter().enumerate() {
                values[[i, j]] = v;
            }
        }
        TabularDataset::new(
            (0..n).map(|i| format!("s{i}")).collect(),
            cols.iter().map(|(name, _)| ColumnMeta::new(*name, Role::Cognitive)).collect(),
            values,
            labels,
            ["a".into(), "b".into()],
        )
        .unwrap()
    }

    #[test]
    fn median_imputation_hand_case() {
        let train = ds_from(vec![("x", vec![1.0, 2.0, f64::NAN, 4.0])], vec![0, 1, 0, 1]);
        let p = fit_preprocess(&train);
        assert_eq!(p.median[0], 2.0);
        let t = apply_preprocess(&p, &train).unwrap();
        // the NaN cell was imputed to 2 before scaling
        let back = t.values[[2, 0]] * p.std[0] + p.mean[0];
        assert!((back - 2.0).abs() < 1e-12);
    }

    #[test]
    fn transformed_train_is_standardized() {
        let train = ds_from(vec![("x", vec![3.0, 9.0, -4.0, 7.5, 2.2])], vec![0, 1, 0, 1, 0]);
        let p = fit_preprocess(&train);
        let t = apply_preprocess(&p, &train).unwrap();
        let col: Vec<f64> = t.values.column(0).to_vec();
        let mean = col.iter().sum::<f64>() / col.len() as f64;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / col.len() as f64;
        assert!(mean.abs() < 1e-9);
        assert!((var.sqrt() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn shifted_test_set_keeps_nonzero_mean() {
        let train = ds_from(vec![("x", vec![0.0, 1.0, 2.0, 3.0])], vec![0, 1, 0, 1]);
        let test = ds_from(vec![("x", vec![10.0, 11.0, 12.0, 13.0])], vec![0, 1, 0, 1]);
        let p = fit_preprocess(&train);
        let t = apply_preprocess(&p, &test).unwrap();
        let mean = t.values.column(0).mean().unwrap();
        assert!(mean > 1.0, "shifted data should not be centered, mean={mean}");
    }

    #[test]
    fn zero_variance_column_passes_through() {
        let train = ds_from(vec![("x", vec![5.0, 5.0, 5.0])], vec![0, 1, 0]);
        let p = fit_preprocess(&train);
        assert_eq!(p.std[0], 1.0);
        let t = apply_preprocess(&p, &train).unwrap();
        assert!(t.values.column(0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn all_missing_column_gets_zero_median() {
        let train = ds_from(vec![("x", vec![f64::NAN, f64::NAN])], vec![0, 1]);
        let p = fit_preprocess(&train);
        assert_eq!(p.median[0], 0.0);
        let t = apply_preprocess(&p, &train).unwrap();
        assert!(t.values.column(0).iter().all(|v| v.is_finite()));
    }

    #[test]
    fn column_mismatch_is_schema_error() {
        let train = ds_from(vec![("x", vec![1.0, 2.0])], vec![0, 1]);
        let other = ds_from(vec![("y", vec![1.0, 2.0])], vec![0, 1]);
        let p = fit_preprocess(&train);
        assert!(apply_preprocess(&p, &other).is_err());
    }
}

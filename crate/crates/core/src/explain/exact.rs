//! Exact Shapley values by full coalition enumeration.

use crate::error::{Error, Result};
use crate::explain::{coalition_value, singleton_groups, BackgroundSet, Explanation, PredictProba};

const MAX_PLAYERS: usize = 15;

/// Exact Shapley values with players = groups of columns.
///
/// Every coalition's value is the interventional expectation over the
/// background (no retraining); contributions aggregate the marginal
/// differences with the factorial coalition weights. Cost is
/// 2^players * |background| predictions, so players are capped at 15.
pub fn exact_shapley_groups(
    predict: &dyn PredictProba,
    background: &BackgroundSet,
    x: &[f64],
    groups: &[Vec<usize>],
    names: &[String],
) -> Result<Explanation> {
    let m = groups.len();
    if m == 0 {
        return Err(Error::Data("need at least one player".into()));
    }
    if m > MAX_PLAYERS {
        return Err(Error::Unsupported(format!(
            "{m} players exceed the exact enumeration limit of {MAX_PLAYERS}; use kernel_shap"
        )));
    }

    // value of every coalition, indexed by bitmask
    let values: Vec<f64> = (0..1usize << m)
        .map(|bits| {
            let mask: Vec<bool> = (0..m).map(|g| bits & (1 << g) != 0).collect();
            coalition_value(predict, background, x, groups, &mask)
        })
        .collect();

    let mut factorial = vec![1.0; m + 1];
    for k in 1..=m {
        factorial[k] = factorial[k - 1] * k as f64;
    }
    let mut phi = vec![0.0; m];
    for (i, p) in phi.iter_mut().enumerate() {
        for bits in 0..1usize << m {
            if bits & (1 << i) != 0 {
                continue;
            }
            let s = (bits as u32).count_ones() as usize;
            let weight = factorial[s] * factorial[m - s - 1] / factorial[m];
            *p += weight * (values[bits | (1 << i)] - values[bits]);
        }
    }

    let feature_values = groups
        .iter()
        .map(|cols| if cols.len() == 1 { Some(x[cols[0]]) } else { None })
        .collect();
    Ok(Explanation {
        base_value: values[0],
        prediction: values[(1usize << m) - 1],
        names: names.to_vec(),
        phi,
        feature_values,
        mask_size: m,
    })
}

/// Exact per-feature Shapley values (each feature its own player).
pub fn exact_shapley(
    predict: &dyn PredictProba,
    background: &BackgroundSet,
    x: &[f64],
) -> Result<Explanation> {
    let d = x.len();
    let names: Vec<String> = (0..d).map(|j| format!("f{j}")).collect();
    exact_shapley_groups(predict, background, x, &singleton_groups(d), &names)
}

/// Exact per-feature Shapley values with caller-provided names.
pub fn exact_shapley_named(
    predict: &dyn PredictProba,
    background: &BackgroundSet,
    x: &[f64],
    names: &[String],
) -> Result<Explanation> {
    exact_shapley_groups(predict, background, x, &singleton_groups(x.len()), names)
}

//! Kernel-weighted linear regression estimator of Shapley values.

use std::collections::HashSet;

use ndarray::{Array1, Array2};
use rand::Rng;

use crate::error::{Error, Result};
use crate::explain::{coalition_value, singleton_groups, BackgroundSet, Explanation, PredictProba};
use crate::models::TrainedModel;
use crate::util::{rng_stream, solve_spd};

/// Coalition sample budget when the caller does not choose one.
pub const KERNEL_SHAP_DEFAULT_SAMPLES: usize = 2048;

const RIDGE: f64 = 1e-10;

/// Total kernel weight mass of all masks with `s` of `m` players present:
/// C(m,s) * (m-1) / (C(m,s) * s * (m-s)).
fn size_mass(m: usize, s: usize) -> f64 {
    (m - 1) as f64 / (s * (m - s)) as f64
}

fn binomial(m: usize, s: usize) -> f64 {
    let s = s.min(m - s);
    let mut c = 1.0f64;
    for i in 0..s {
        c = c * (m - i) as f64 / (i + 1) as f64;
        if c > 1e18 {
            return f64::INFINITY;
        }
    }
    c
}

/// All size-`s` masks over `m` players in lexicographic order.
fn enumerate_masks(m: usize, s: usize) -> Vec<Vec<bool>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..s).collect();
    loop {
        let mut mask = vec![false; m];
        for &i in &idx {
            mask[i] = true;
        }
        out.push(mask);
        // advance to the next combination
        let mut k = s;
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            if idx[k] != k + m - s {
                break;
            }
        }
        if idx[s - 1] == m - 1 && idx[0] == m - s {
            return out;
        }
        idx[k] += 1;
        for j in k + 1..s {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn random_mask(m: usize, s: usize, rng: &mut rand_chacha::ChaCha8Rng) -> Vec<bool> {
    let mut pool: Vec<usize> = (0..m).collect();
    for i in 0..s {
        let j = i + rng.random_range(0..m - i);
        pool.swap(i, j);
    }
    let mut mask = vec![false; m];
    for &i in &pool[..s] {
        mask[i] = true;
    }
    mask
}

/// One sampled coalition with its regression weight.
struct WeightedMask {
    mask: Vec<bool>,
    weight: f64,
}

/// Allocates the coalition budget over mask sizes 1..m-1 proportionally to
/// their kernel weight mass; a size whose proportional share covers full
/// enumeration is enumerated exactly, the rest are sampled without
/// replacement.
fn draw_masks(m: usize, budget: usize, seed: u64) -> Vec<WeightedMask> {
    // sizes ordered by descending mass, small size first on ties
    let mut order: Vec<usize> = (1..m).collect();
    order.sort_by(|&a, &b| {
        size_mass(m, b).partial_cmp(&size_mass(m, a)).unwrap().then(a.cmp(&b))
    });

    let mut enumerated: Vec<usize> = Vec::new();
    let mut pending = order.clone();
    let mut remaining_budget = budget;
    let mut remaining_mass: f64 = pending.iter().map(|&s| size_mass(m, s)).sum();
    // repeatedly peel off sizes whose share covers all their masks
    loop {
        let mut changed = false;
        let mut keep = Vec::new();
        for &s in &pending {
            let count = binomial(m, s);
            let expected = remaining_budget as f64 * size_mass(m, s) / remaining_mass;
            if count <= expected {
                enumerated.push(s);
                remaining_budget -= count as usize;
                remaining_mass -= size_mass(m, s);
                changed = true;
            } else {
                keep.push(s);
            }
        }
        pending = keep;
        if !changed || pending.is_empty() || remaining_budget == 0 {
            break;
        }
    }

    let mut out = Vec::new();
    for &s in &enumerated {
        let count = binomial(m, s);
        let w = size_mass(m, s) / count;
        for mask in enumerate_masks(m, s) {
            out.push(WeightedMask { mask, weight: w });
        }
    }

    let mut rng = rng_stream(seed, &[0x5a9]);
    let mut budget_left = remaining_budget;
    let mut mass_left = remaining_mass;
    for &s in &pending {
        if budget_left == 0 {
            break;
        }
        let count = binomial(m, s);
        let want = ((budget_left as f64 * size_mass(m, s) / mass_left).round() as usize)
            .min(budget_left);
        mass_left -= size_mass(m, s);
        let want = (want as f64).min(count) as usize;
        if want == 0 {
            continue;
        }
        let mut seen: HashSet<Vec<bool>> = HashSet::with_capacity(want);
        let mut attempts = 0usize;
        while seen.len() < want && attempts < 100 * want + 1000 {
            seen.insert(random_mask(m, s, &mut rng));
            attempts += 1;
        }
        if seen.len() < want {
            // deterministic fill from the lexicographic enumeration
            for mask in enumerate_masks(m, s) {
                if seen.len() >= want {
                    break;
                }
                seen.insert(mask);
            }
        }
        let mut drawn: Vec<Vec<bool>> = seen.into_iter().collect();
        drawn.sort();
        let w = size_mass(m, s) / drawn.len() as f64;
        for mask in drawn {
            out.push(WeightedMask { mask, weight: w });
        }
        budget_left -= want;
    }
    out
}

/// Kernel SHAP with players = groups of columns.
///
/// The empty and full coalitions are pinned as constraints (base value and
/// efficiency); the remaining budget goes to sampled masks whose weighted
/// linear model is solved with the final player's contribution eliminated,
/// so additivity holds by construction.
pub fn kernel_shap_groups(
    predict: &dyn PredictProba,
    background: &BackgroundSet,
    x: &[f64],
    groups: &[Vec<usize>],
    names: &[String],
    n_samples: usize,
    seed: u64,
) -> Result<Explanation> {
    let m = groups.len();
    if m == 0 {
        return Err(Error::Data("need at least one player".into()));
    }
    if n_samples < 2 * m + 2 {
        return Err(Error::Config(format!(
            "n_samples = {n_samples} below the minimum 2*{m}+2"
        )));
    }

    let base_value = coalition_value(predict, background, x, groups, &vec![false; m]);
    let prediction = coalition_value(predict, background, x, groups, &vec![true; m]);
    let feature_values: Vec<Option<f64>> = groups
        .iter()
        .map(|cols| if cols.len() == 1 { Some(x[cols[0]]) } else { None })
        .collect();

    if m == 1 {
        return Ok(Explanation {
            base_value,
            prediction,
            names: names.to_vec(),
            phi: vec![prediction - base_value],
            feature_values,
            mask_size: 1,
        });
    }

    let masks = draw_masks(m, n_samples - 2, seed);
    // empty, full, and the sampled masks must span enough of the domain
    if masks.len() + 2 < m + 1 {
        return Err(Error::Numeric(format!(
            "only {} distinct coalition masks for {m} players; increase n_samples",
            masks.len() + 2
        )));
    }

    let gap = prediction - base_value;
    let k = m - 1; // unknowns after eliminating the last player
    let mut ata = Array2::zeros((k, k));
    let mut atb = Array1::zeros(k);
    for wm in &masks {
        let v = coalition_value(predict, background, x, groups, &wm.mask);
        let last = wm.mask[m - 1] as u8 as f64;
        let target = v - base_value - last * gap;
        let row: Vec<f64> = (0..k).map(|j| wm.mask[j] as u8 as f64 - last).collect();
        for a in 0..k {
            if row[a] == 0.0 {
                continue;
            }
            atb[a] += wm.weight * row[a] * target;
            for b in a..k {
                ata[[a, b]] += wm.weight * row[a] * row[b];
            }
        }
    }
    for a in 0..k {
        for b in 0..a {
            ata[[a, b]] = ata[[b, a]];
        }
        ata[[a, a]] += RIDGE;
    }
    let head = solve_spd(&ata, &atb)
        .ok_or_else(|| Error::Numeric("kernel SHAP regression is singular; increase n_samples".into()))?;

    let mut phi: Vec<f64> = head.to_vec();
    let last_phi = gap - phi.iter().sum::<f64>();
    phi.push(last_phi);

    Ok(Explanation {
        base_value,
        prediction,
        names: names.to_vec(),
        phi,
        feature_values,
        mask_size: m,
    })
}

/// Kernel SHAP over the model's features.
pub fn kernel_shap(
    model: &TrainedModel,
    background: &BackgroundSet,
    x: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<Explanation> {
    if x.len() != model.feature_names.len() {
        return Err(Error::Schema(format!(
            "subject row has {} values, model expects {}",
            x.len(),
            model.feature_names.len()
        )));
    }
    kernel_shap_groups(
        model,
        background,
        x,
        &singleton_groups(x.len()),
        &model.feature_names,
        n_samples,
        seed,
    )
}

/// Kernel SHAP for a bare predictor with caller-provided names.
pub fn kernel_shap_named(
    predict: &dyn PredictProba,
    background: &BackgroundSet,
    x: &[f64],
    names: &[String],
    n_samples: usize,
    seed: u64,
) -> Result<Explanation> {
    kernel_shap_groups(predict, background, x, &singleton_groups(x.len()), names, n_samples, seed)
}

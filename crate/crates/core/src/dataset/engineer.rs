//! Hemispheric asymmetry features and feature-set filtering.

use ndarray::Array2;

use crate::dataset::{ColumnMeta, Role, TabularDataset};
use crate::error::{Error, Result};

/// Nested feature sets: FS-1 is MRI plus sociodemographics, FS-2 adds the
/// genetic columns, FS-3 adds the cognitive test scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureSet {
    Fs1,
    Fs2,
    Fs3,
}

impl FeatureSet {
    fn admits(self, role: Role) -> bool {
        match role {
            r if r.is_mri() => true,
            Role::Sociodemographic => true,
            Role::Genetic => !matches!(self, FeatureSet::Fs1),
            Role::Cognitive => matches!(self, FeatureSet::Fs3),
            _ => false,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureSet::Fs1 => "fs1",
            FeatureSet::Fs2 => "fs2",
            FeatureSet::Fs3 => "fs3",
        }
    }
}

impl std::str::FromStr for FeatureSet {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fs1" | "fs-1" => Ok(FeatureSet::Fs1),
            "fs2" | "fs-2" => Ok(FeatureSet::Fs2),
            "fs3" | "fs-3" => Ok(FeatureSet::Fs3),
            other => Err(Error::Config(format!("unknown feature set '{other}'"))),
        }
    }
}

fn find_etiv(ds: &TabularDataset) -> Option<usize> {
    ds.columns.iter().position(|c| c.name.eq_ignore_ascii_case("etiv"))
}

/// Replaces each left/right ROI pair with sum, difference, and ratio columns
/// and normalizes unpaired volumes by eTIV.
///
/// Per pair: sum = (L + R)/eTIV, diff = (L - R)/eTIV, ratio = L/R. The eTIV
/// column itself is kept unnormalized; other unpaired ROI columns become
/// value/eTIV. Original left/right columns are dropped, non-MRI columns pass
/// through, so P pairs and U unpaired inputs yield 3P + U MRI columns.
///
/// A subject with eTIV <= 0 (or missing) gets missing engineered values, as
/// does any engineered cell with a missing operand or a ratio with R = 0.
pub fn engineer_roi_features(ds: &TabularDataset) -> Result<TabularDataset> {
    let etiv_col = find_etiv(ds)
        .ok_or_else(|| Error::Schema("dataset has no eTIV column".to_string()))?;

    // Pair left/right columns on pair_key, preserving left-column order.
    let mut pairs: Vec<(String, usize, usize)> = Vec::new();
    for (i, c) in ds.columns.iter().enumerate() {
        if c.role == Role::RoiLeft {
            let key = c.pair_key.clone().ok_or_else(|| {
                Error::Schema(format!("roi_left column '{}' has no pair key", c.name))
            })?;
            let right = ds
                .columns
                .iter()
                .position(|r| r.role == Role::RoiRight && r.pair_key.as_deref() == Some(&key))
                .ok_or_else(|| {
                    Error::Schema(format!("no roi_right column paired with '{key}'"))
                })?;
            pairs.push((key, i, right));
        }
    }
    if pairs.is_empty() {
        return Err(Error::Schema("dataset has no matched roi_left/roi_right pair".to_string()));
    }

    let mut columns: Vec<ColumnMeta> = Vec::new();
    for (key, _, _) in &pairs {
        columns.push(ColumnMeta::paired(format!("sum_{key}"), Role::EngineeredSum, key.clone()));
        columns.push(ColumnMeta::paired(format!("diff_{key}"), Role::EngineeredDiff, key.clone()));
        columns.push(ColumnMeta::paired(format!("ratio_{key}"), Role::EngineeredRatio, key.clone()));
    }
    let passthrough: Vec<usize> = ds
        .columns
        .iter()
        .enumerate()
        .filter(|(_, c)| !matches!(c.role, Role::RoiLeft | Role::RoiRight))
        .map(|(i, _)| i)
        .collect();
    for &i in &passthrough {
        columns.push(ds.columns[i].clone());
    }

    let n = ds.n_rows();
    let mut values = Array2::from_elem((n, columns.len()), f64::NAN);
    for row in 0..n {
        let etiv = ds.values[[row, etiv_col]];
        let etiv_ok = etiv.is_finite() && etiv > 0.0;
        for (p, (_, li, ri)) in pairs.iter().enumerate() {
            let l = ds.values[[row, *li]];
            let r = ds.values[[row, *ri]];
            if etiv_ok && !l.is_nan() && !r.is_nan() {
                values[[row, 3 * p]] = (l + r) / etiv;
                values[[row, 3 * p + 1]] = (l - r) / etiv;
                if r != 0.0 {
                    values[[row, 3 * p + 2]] = l / r;
                }
            }
        }
        for (k, &src) in passthrough.iter().enumerate() {
            let dst = 3 * pairs.len() + k;
            let v = ds.values[[row, src]];
            if ds.columns[src].role == Role::RoiUnpaired && src != etiv_col {
                if etiv_ok && !v.is_nan() {
                    values[[row, dst]] = v / etiv;
                }
            } else {
                values[[row, dst]] = v;
            }
        }
    }

    TabularDataset::new(
        ds.subject_ids.clone(),
        columns,
        values,
        ds.labels.clone(),
        ds.class_names.clone(),
    )
}

/// Keeps the columns admitted by the requested feature set, preserving
/// column order. A role entirely absent from the dataset only logs a warning.
pub fn select_feature_set(ds: &TabularDataset, fs: FeatureSet) -> Result<TabularDataset> {
    let wanted: Vec<Role> = match fs {
        FeatureSet::Fs1 => vec![],
        FeatureSet::Fs2 => vec![Role::Genetic],
        FeatureSet::Fs3 => vec![Role::Genetic, Role::Cognitive],
    };
    for role in wanted {
        if !ds.columns.iter().any(|c| c.role == role) {
            log::warn!(
                "feature set {} requests role {} but the dataset has none; proceeding",
                fs.as_str(),
                role.as_str()
            );
        }
    }
    let names: Vec<String> = ds
        .columns
        .iter()
        .filter(|c| fs.admits(c.role))
        .map(|c| c.name.clone())
        .collect();
    ds.select_columns(&names)
}

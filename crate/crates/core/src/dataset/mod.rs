//! Tabular data model: column roles, ingestion, asymmetry feature
//! engineering, feature-set filtering, splitting, preprocessing, and the
//! synthetic cohort generator.

mod csv;
mod engineer;
mod preprocess;
mod split;
mod synthetic;

pub use csv::{load_csv, save_csv, save_schema, Schema};
pub use engineer::{engineer_roi_features, select_feature_set, FeatureSet};
pub use preprocess::{apply_preprocess, fit_preprocess, PreprocessParams};
pub use split::{stratified_repeated_kfold, stratified_split, FoldPlan, SplitIndices};
pub use synthetic::{generate_synthetic, CohortShift, GroundTruth, InformativeRoi, SyntheticConfig};

use crate::error::{Error, Result};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

/// What a column means to the pipeline. Engineered roles only appear after
/// [`engineer_roi_features`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    RoiLeft,
    RoiRight,
    RoiUnpaired,
    EngineeredSum,
    EngineeredDiff,
    EngineeredRatio,
    Sociodemographic,
    Genetic,
    Cognitive,
}

impl Role {
    /// MRI-derived roles; these are the forward-selection candidates.
    pub fn is_mri(self) -> bool {
        matches!(
            self,
            Role::RoiLeft
                | Role::RoiRight
                | Role::RoiUnpaired
                | Role::EngineeredSum
                | Role::EngineeredDiff
                | Role::EngineeredRatio
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Role::RoiLeft => "roi_left",
            Role::RoiRight => "roi_right",
            Role::RoiUnpaired => "roi_unpaired",
            Role::EngineeredSum => "engineered_sum",
            Role::EngineeredDiff => "engineered_diff",
            Role::EngineeredRatio => "engineered_ratio",
            Role::Sociodemographic => "sociodemographic",
            Role::Genetic => "genetic",
            Role::Cognitive => "cognitive",
        }
    }
}

impl std::str::FromStr for Role {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "roi_left" => Ok(Role::RoiLeft),
            "roi_right" => Ok(Role::RoiRight),
            "roi_unpaired" => Ok(Role::RoiUnpaired),
            "engineered_sum" => Ok(Role::EngineeredSum),
            "engineered_diff" => Ok(Role::EngineeredDiff),
            "engineered_ratio" => Ok(Role::EngineeredRatio),
            "sociodemographic" => Ok(Role::Sociodemographic),
            "genetic" => Ok(Role::Genetic),
            "cognitive" => Ok(Role::Cognitive),
            other => Err(Error::Schema(format!("unknown column role '{other}'"))),
        }
    }
}

/// Per-column metadata. `pair_key` links the left and right columns of one
/// ROI so the engineering step can match them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnMeta {
    pub name: String,
    pub role: Role,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair_key: Option<String>,
}

impl ColumnMeta {
    pub fn new(name: impl Into<String>, role: Role) -> Self {
        ColumnMeta { name: name.into(), role, pair_key: None }
    }

    pub fn paired(name: impl Into<String>, role: Role, pair_key: impl Into<String>) -> Self {
        ColumnMeta { name: name.into(), role, pair_key: Some(pair_key.into()) }
    }
}

/// A column-labeled numeric table with binary labels.
///
/// Missing feature values are stored as IEEE NaN. Labels never carry a
/// missing marker. Immutable after construction; transformation steps return
/// new datasets.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TabularDataset {
    pub subject_ids: Vec<String>,
    pub columns: Vec<ColumnMeta>,
    /// Row-major (subjects x features); NaN marks a missing cell.
    #[serde(with = "array2_serde")]
    pub values: Array2<f64>,
    /// Class index per subject, 0 or 1.
    pub labels: Vec<u8>,
    pub class_names: [String; 2],
}

impl TabularDataset {
    pub fn new(
        subject_ids: Vec<String>,
        columns: Vec<ColumnMeta>,
        values: Array2<f64>,
        labels: Vec<u8>,
        class_names: [String; 2],
    ) -> Result<Self> {
        let ds = TabularDataset { subject_ids, columns, values, labels, class_names };
        ds.validate()?;
        Ok(ds)
    }

    fn validate(&self) -> Result<()> {
        let n = self.values.nrows();
        if self.subject_ids.len() != n || self.labels.len() != n {
            return Err(Error::Integrity(format!(
                "row count {} != label count {} or subject id count {}",
                n,
                self.labels.len(),
                self.subject_ids.len()
            )));
        }
        if self.columns.len() != self.values.ncols() {
            return Err(Error::Integrity(format!(
                "column meta count {} != value column count {}",
                self.columns.len(),
                self.values.ncols()
            )));
        }
        let mut seen = std::collections::HashSet::new();
        for c in &self.columns {
            if !seen.insert(c.name.as_str()) {
                return Err(Error::Integrity(format!("duplicate column name '{}'", c.name)));
            }
        }
        let mut ids = std::collections::HashSet::new();
        for id in &self.subject_ids {
            if !ids.insert(id.as_str()) {
                return Err(Error::Integrity(format!("duplicate subject id '{id}'")));
            }
        }
        if let Some(l) = self.labels.iter().find(|&&l| l > 1) {
            return Err(Error::Integrity(format!("label {l} outside {{0,1}}")));
        }
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.values.ncols()
    }

    pub fn column_names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    /// New dataset restricted to `rows` (in the given order).
    pub fn subset_rows(&self, rows: &[usize]) -> TabularDataset {
        let values = Array2::from_shape_fn((rows.len(), self.n_cols()), |(i, j)| {
            self.values[[rows[i], j]]
        });
        TabularDataset {
            subject_ids: rows.iter().map(|&r| self.subject_ids[r].clone()).collect(),
            columns: self.columns.clone(),
            values,
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
            class_names: self.class_names.clone(),
        }
    }

    /// New dataset keeping only the named columns, in the given order.
    pub fn select_columns(&self, names: &[String]) -> Result<TabularDataset> {
        let idx: Vec<usize> = names
            .iter()
            .map(|n| {
                self.column_index(n)
                    .ok_or_else(|| Error::Schema(format!("column '{n}' not in dataset")))
            })
            .collect::<Result<_>>()?;
        let values = Array2::from_shape_fn((self.n_rows(), idx.len()), |(i, j)| {
            self.values[[i, idx[j]]]
        });
        Ok(TabularDataset {
            subject_ids: self.subject_ids.clone(),
            columns: idx.iter().map(|&j| self.columns[j].clone()).collect(),
            values,
            labels: self.labels.clone(),
            class_names: self.class_names.clone(),
        })
    }

    /// Bare matrix-and-labels dataset with generated names, for callers that
    /// do not go through the CSV/ROI machinery.
    pub fn from_matrix(values: Array2<f64>, labels: Vec<u8>) -> Result<TabularDataset> {
        let columns =
            (0..values.ncols()).map(|j| ColumnMeta::new(format!("f{j}"), Role::Sociodemographic));
        TabularDataset::new(
            (0..values.nrows()).map(|i| format!("s{i}")).collect(),
            columns.collect(),
            values,
            labels,
            ["class0".to_string(), "class1".to_string()],
        )
    }

    /// Count of NaN cells in the feature table.
    pub fn missing_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_nan()).count()
    }

    pub fn class_counts(&self) -> [usize; 2] {
        let ones = self.labels.iter().filter(|&&l| l == 1).count();
        [self.labels.len() - ones, ones]
    }
}

/// serde helper storing an Array2 as (rows, cols, flat data).
mod array2_serde {
    use ndarray::Array2;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Flat {
        rows: usize,
        cols: usize,
        data: Vec<f64>,
    }

    pub fn serialize<S: Serializer>(a: &Array2<f64>, s: S) -> Result<S::Ok, S::Error> {
        Flat { rows: a.nrows(), cols: a.ncols(), data: a.iter().copied().collect() }.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Array2<f64>, D::Error> {
        let f = Flat::deserialize(d)?;
        Array2::from_shape_vec((f.rows, f.cols), f.data).map_err(serde::de::Error::custom)
    }
}

//! CSV ingestion and the sidecar schema format.
//!
//! Data files are UTF-8 comma-separated with a header row; the first column
//! is the subject id. A JSON schema names the label column and assigns every
//! remaining column a role. Empty cells are missing values.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::dataset::{ColumnMeta, Role, TabularDataset};

/// Sidecar schema: label column name, optional class names (positive class
/// second), and a role entry per feature column.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Schema {
    pub label_column: String,
    /// [negative/control, positive/patient]; inferred lexicographically from
    /// the data when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_names: Option<[String; 2]>,
    /// Column name -> role (+ optional ROI pair key). BTreeMap keeps the
    /// serialized form stable.
    pub columns: BTreeMap<String, SchemaColumn>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchemaColumn {
    pub role: Role,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair: Option<String>,
}

impl Schema {
    pub fn from_file(path: &Path) -> Result<Schema> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Schema(format!("cannot read schema {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Schema(format!("invalid schema {}: {e}", path.display())))
    }

    /// Schema describing an existing dataset, used for write-then-read flows.
    pub fn describe(ds: &TabularDataset, label_column: &str) -> Schema {
        Schema {
            label_column: label_column.to_string(),
            class_names: Some(ds.class_names.clone()),
            columns: ds
                .columns
                .iter()
                .map(|c| {
                    (c.name.clone(), SchemaColumn { role: c.role, pair: c.pair_key.clone() })
                })
                .collect(),
        }
    }
}

/// Minimal CSV field splitter with double-quote support.
fn split_fields(line: &str) -> Vec<String> {
    let mut fields = Vec::new();
    let mut cur = String::new();
    let mut quoted = false;
    let mut chars = line.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '"' if quoted && chars.peek() == Some(&'"') => {
                cur.push('"');
                chars.next();
            }
            '"' => quoted = !quoted,
            ',' if !quoted => fields.push(std::mem::take(&mut cur)),
            _ => cur.push(c),
        }
    }
    fields.push(cur);
    fields
}

/// Loads a cohort table. See module docs for the file contract.
pub fn load_csv(path: &Path, schema: &Schema) -> Result<TabularDataset> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.is_empty());
    let (_, header_line) = lines
        .next()
        .ok_or_else(|| Error::Parse(format!("{}: empty file", path.display())))?;
    let header = split_fields(header_line);
    if header.len() < 2 {
        return Err(Error::Parse(format!("{}: header has fewer than 2 columns", path.display())));
    }

    let label_idx = header
        .iter()
        .position(|h| *h == schema.label_column)
        .ok_or_else(|| {
            Error::Schema(format!("label column '{}' not found in header", schema.label_column))
        })?;

    // Every non-id, non-label column must have a role; every schema column
    // must exist in the file.
    let mut columns = Vec::new();
    let mut feature_idx = Vec::new();
    for (i, name) in header.iter().enumerate().skip(1) {
        if i == label_idx {
            continue;
        }
        let sc = schema.columns.get(name).ok_or_else(|| {
            Error::Schema(format!("column '{name}' has no role in the schema"))
        })?;
        columns.push(ColumnMeta { name: name.clone(), role: sc.role, pair_key: sc.pair.clone() });
        feature_idx.push(i);
    }
    for name in schema.columns.keys() {
        if !header.contains(name) {
            return Err(Error::Schema(format!("schema column '{name}' not found in file")));
        }
    }

    let mut subject_ids = Vec::new();
    let mut raw_labels = Vec::new();
    let mut data = Vec::new();
    for (lineno, line) in lines {
        let fields = split_fields(line);
        // lineno counts the header as 0, so it equals the 1-based data row
        if fields.len() != header.len() {
            return Err(Error::Parse(format!(
                "{}: row {} has {} fields, expected {}",
                path.display(),
                lineno,
                fields.len(),
                header.len()
            )));
        }
        subject_ids.push(fields[0].clone());
        raw_labels.push(fields[label_idx].clone());
        for &i in &feature_idx {
            let cell = fields[i].trim();
            if cell.is_empty() {
                data.push(f64::NAN);
            } else {
                data.push(cell.parse::<f64>().map_err(|_| {
                    Error::Parse(format!(
                        "{}: row {} column '{}': cannot parse '{cell}' as a number",
                        path.display(),
                        lineno + 1,
                        header[i]
                    ))
                })?);
            }
        }
    }

    let class_names = match &schema.class_names {
        Some(names) => names.clone(),
        None => {
            let mut uniq: Vec<String> = raw_labels.clone();
            uniq.sort();
            uniq.dedup();
            if uniq.len() != 2 {
                return Err(Error::Schema(format!(
                    "expected exactly 2 label values, found {}: {:?}",
                    uniq.len(),
                    uniq
                )));
            }
            [uniq[0].clone(), uniq[1].clone()]
        }
    };
    let labels: Vec<u8> = raw_labels
        .iter()
        .map(|l| {
            if *l == class_names[0] {
                Ok(0)
            } else if *l == class_names[1] {
                Ok(1)
            } else {
                Err(Error::Schema(format!(
                    "unknown label value '{l}' (classes are {:?})",
                    class_names
                )))
            }
        })
        .collect::<Result<_>>()?;

    let n_rows = subject_ids.len();
    let n_cols = columns.len();
    let values = Array2::from_shape_vec((n_rows, n_cols), data)
        .map_err(|e| Error::Parse(e.to_string()))?;
    TabularDataset::new(subject_ids, columns, values, labels, class_names)
}

/// Writes a dataset back to CSV (missing cells as empty strings) so that
/// `load_csv` with [`Schema::describe`] reproduces it.
pub fn save_csv(ds: &TabularDataset, path: &Path, label_column: &str) -> Result<()> {
    let mut out = String::new();
    out.push_str("subject_id");
    for c in &ds.columns {
        out.push(',');
        out.push_str(&c.name);
    }
    out.push(',');
    out.push_str(label_column);
    out.push('\n');
    for i in 0..ds.n_rows() {
        out.push_str(&ds.subject_ids[i]);
        for j in 0..ds.n_cols() {
            out.push(',');
            let v = ds.values[[i, j]];
            if !v.is_nan() {
                out.push_str(&format!("{v}"));
            }
        }
        out.push(',');
        out.push_str(&ds.class_names[ds.labels[i] as usize]);
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn save_schema(schema: &Schema, path: &Path) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(schema)?)?;
    Ok(())
}

//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by dataset handling, model fitting, and analysis routines.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input file (CSV structure, number parsing).
    #[error("parse error: {0}")]
    Parse(String),

    /// Schema file and data disagree, or a required column/role is absent.
    #[error("schema error: {0}")]
    Schema(String),

    /// Structural inconsistency in a dataset (duplicate ids, length mismatch).
    #[error("integrity error: {0}")]
    Integrity(String),

    /// Invalid configuration value.
    #[error("config error: {0}")]
    Config(String),

    /// A precondition on the data is not met (class too small, empty split).
    #[error("data error: {0}")]
    Data(String),

    /// Numeric failure during fitting or evaluation.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Operation not defined for this model kind or input.
    #[error("unsupported operation: {0}")]
    Unsupported(String),

    /// Statistic is undefined for the given input (e.g. one class absent).
    #[error("undefined statistic: {0}")]
    Undefined(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

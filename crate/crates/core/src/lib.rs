//! tabsight: model-agnostic interpretable ML for tabular cohort data.
//!
//! The crate covers the full study workflow: hemispheric asymmetry feature
//! engineering, nested feature sets, stratified splitting and repeated CV,
//! five from-scratch classifier families behind one contract, Gaussian
//! process Bayesian hyperparameter tuning, greedy forward feature selection,
//! exact and kernel-estimated Shapley explanations, correlation-aspect
//! consolidation, permutation importance, rank-agreement analysis, and the
//! evaluation statistics used to compare runs.

pub mod aspects;
pub mod dataset;
pub mod error;
pub mod explain;
pub mod importance;
pub mod metrics;
pub mod models;
pub mod pipeline;
pub mod selection;
pub mod tuning;
pub mod util;

pub use error::{Error, Result};

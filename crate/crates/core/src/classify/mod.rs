//! Feature standardization and one-vs-one RBF support vector classification.

mod grid;
mod standardize;
mod svm;

pub use grid::{grid_search, GridPoint, GridResult, GridSpec};
pub use standardize::Standardizer;
pub use svm::{
    kkt_residual, svm_predict, svm_train, train_binary, BinarySolution, PairMachine, Prediction,
    SvmModel, SvmParams,
};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SvmError {
    #[error("need at least {needed} rows, got {got}")]
    TooFewRows { needed: usize, got: usize },
    #[error("need at least 2 classes, got {0}")]
    TooFewClasses(usize),
    #[error("class {0:?} has no samples in a binary pair")]
    DegenerateClass(String),
    #[error("feature dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("labels and rows differ in length: {labels} vs {rows}")]
    LabelCount { labels: usize, rows: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("malformed model: {0}")]
    MalformedModel(String),
}

//! Leave-one-speaker-out evaluation: manifests, folds, metrics and experiment reports.

mod experiment;
mod folds;
mod manifest;
mod metrics;

pub use experiment::{
    evaluate_features, param_sweep, run_experiment, sweep_csv, ExperimentReport, FoldReport, SweepRow,
};
pub use folds::{loso_splits, Fold};
pub use manifest::{DatasetManifest, ManifestRow, MANIFEST_HEADER};
pub use metrics::{accuracy, confusion, empty_rows, uar, ConfusionMatrix};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("need at least 3 speakers for train/valid/test, got {0}")]
    TooFewSpeakers(usize),
    #[error("label {0:?} is not one of the classes")]
    UnknownLabel(String),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("confusion matrix has no samples")]
    EmptyMatrix,
    #[error("manifest line {line}: {detail}")]
    Manifest { line: usize, detail: String },
    #[error("io error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("fold with test speaker {test_speaker}: {source}")]
    Fold {
        test_speaker: String,
        #[source]
        source: crate::classify::SvmError,
    },
    #[error("fold with test speaker {test_speaker} has no {part} rows")]
    EmptyPartition { test_speaker: String, part: &'static str },
}

//! Scattering features for speech emotion recognition.
//!
//! The crate is organised as a pipeline:
//!
//! * [`audio`] loads WAV files, resamples and length-normalises them.
//! * [`filterbank`] builds frequency-domain Morlet filter banks and the
//!   scale-`T` low-pass filter.
//! * [`scattering`] computes order 0/1/2 time scattering, optional frequency
//!   scattering along the log-frequency axis, and pools to one vector per
//!   utterance.
//! * [`mfcc`] is the 13-coefficient MFCC baseline (mean + std pooling).
//! * [`classify`] holds the z-score standardizer, the one-vs-one RBF SVM
//!   trained with SMO, and validation-set grid search.
//! * [`eval`] drives leave-one-speaker-out experiments and computes
//!   accuracy, UAR and confusion matrices.
//! * [`features`] ties extraction to dataset manifests and persists feature
//!   files.

pub mod audio;
pub mod classify;
pub mod eval;
pub mod features;
pub mod filterbank;
pub mod mfcc;
pub mod scattering;

mod error;
mod fft;

pub use audio::Waveform;
pub use classify::{GridSpec, Standardizer, SvmModel, SvmParams};
pub use error::{Error, Result};
pub use eval::{ConfusionMatrix, DatasetManifest, ExperimentReport, FoldReport};
pub use features::{FeatureConfig, FeatureKind, FeatureSet};
pub use filterbank::{FilterBank, FilterBankSpec};
pub use mfcc::MfccConfig;
pub use scattering::{ScatteringConfig, ScatteringFeatures, ScatteringPath};

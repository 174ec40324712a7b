use thiserror::Error;

use crate::{audio::AudioError, classify::SvmError, eval::EvalError, features::FeatureError};
use crate::{filterbank::FilterBankError, mfcc::MfccError, scattering::ScatteringError};

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Any error raised by the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error(transparent)]
    FilterBank(#[from] FilterBankError),
    #[error(transparent)]
    Scattering(#[from] ScatteringError),
    #[error(transparent)]
    Mfcc(#[from] MfccError),
    #[error(transparent)]
    Svm(#[from] SvmError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
}

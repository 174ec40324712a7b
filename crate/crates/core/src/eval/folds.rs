use serde::{Deserialize, Serialize};

use super::EvalError;

/// One leave-one-speaker-out split.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train_speakers: Vec<String>,
    pub valid_speaker: String,
    pub test_speaker: String,
}

/// One fold per speaker as test; validation is the next speaker in sorted order (cyclic).
pub fn loso_splits<S: AsRef<str>>(speakers: &[S]) -> Result<Vec<Fold>, EvalError> {
    let sorted = super::manifest::sorted_unique(speakers.iter().map(AsRef::as_ref));
    let n = sorted.len();
    if n < 3 {
        return Err(EvalError::TooFewSpeakers(n));
    }
    Ok((0..n)
        .map(|i| {
            let v = (i + 1) % n;
            Fold {
                train_speakers: (0..n).filter(|&k| k != i && k != v).map(|k| sorted[k].clone()).collect(),
                valid_speaker: sorted[v].clone(),
                test_speaker: sorted[i].clone(),
            }
        })
        .collect())
}

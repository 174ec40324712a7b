use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::EvalError;

/// Contingency table: `counts[i][j]` utterances of true class `i` predicted as `j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub classes: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn zeros(classes: Vec<String>) -> Self {
        let k = classes.len();
        Self { classes, counts: vec![vec![0; k]; k] }
    }

    pub fn from_counts(classes: Vec<String>, counts: Vec<Vec<u64>>) -> Result<Self, EvalError> {
        let k = classes.len();
        if counts.len() != k || counts.iter().any(|r| r.len() != k) {
            return Err(EvalError::LengthMismatch { expected: k, got: counts.len() });
        }
        Ok(Self { classes, counts })
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn row_sum(&self, i: usize) -> u64 {
        self.counts[i].iter().sum()
    }

    /// Adds `other` cell by cell; both must list the same classes.
    pub fn add(&mut self, other: &ConfusionMatrix) -> Result<(), EvalError> {
        if other.classes != self.classes {
            return Err(EvalError::LengthMismatch {
                expected: self.classes.len(),
                got: other.classes.len(),
            });
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        Ok(())
    }

    /// Aligned plain-text table, rows = true class, columns = predicted class.
    pub fn render_text(&self) -> String {
        let label_w = self.classes.iter().map(String::len).max().unwrap_or(0).max(4);
        let cell_w = self
            .classes
            .iter()
            .map(String::len)
            .chain(self.counts.iter().flatten().map(|c| c.to_string().len()))
            .max()
            .unwrap_or(1);
        let mut out = String::new();
        let _ = write!(out, "{:<label_w$}", "true");
        for c in &self.classes {
            let _ = write!(out, " {c:>cell_w$}");
        }
        out.push('\n');
        for (class, row) in self.classes.iter().zip(&self.counts) {
            let _ = write!(out, "{class:<label_w$}");
            for v in row {
                let _ = write!(out, " {v:>cell_w$}");
            }
            out.push('\n');
        }
        out
    }
}

/// Tallies predictions against the truth over the given class list.
pub fn confusion<A: AsRef<str>, B: AsRef<str>>(
    truth: &[A],
    predicted: &[B],
    classes: &[String],
) -> Result<ConfusionMatrix, EvalError> {
    if truth.len() != predicted.len() {
        return Err(EvalError::LengthMismatch { expected: truth.len(), got: predicted.len() });
    }
    let index = |l: &str| {
        classes.iter().position(|c| c == l).ok_or_else(|| EvalError::UnknownLabel(l.to_owned()))
    };
    let mut cm = ConfusionMatrix::zeros(classes.to_vec());
    for (t, p) in truth.iter().zip(predicted) {
        let (i, j) = (index(t.as_ref())?, index(p.as_ref())?);
        cm.counts[i][j] += 1;
    }
    Ok(cm)
}

/// Classes with no true samples; these rows are left out of the UAR mean.
pub fn empty_rows(cm: &ConfusionMatrix) -> Vec<String> {
    (0..cm.classes.len()).filter(|&i| cm.row_sum(i) == 0).map(|i| cm.classes[i].clone()).collect()
}

/// Unweighted average recall over non-empty rows.
pub fn uar(cm: &ConfusionMatrix) -> Result<f64, EvalError> {
    let recalls: Vec<f64> = (0..cm.classes.len())
        .filter(|&i| cm.row_sum(i) > 0)
        .map(|i| cm.counts[i][i] as f64 / cm.row_sum(i) as f64)
        .collect();
    if recalls.is_empty() {
        return Err(EvalError::EmptyMatrix);
    }
    Ok(recalls.iter().sum::<f64>() / recalls.len() as f64)
}

pub fn accuracy(cm: &ConfusionMatrix) -> Result<f64, EvalError> {
    let total = cm.total();
    if total == 0 {
        return Err(EvalError::EmptyMatrix);
    }
    let trace: u64 = (0..cm.classes.len()).map(|i| cm.counts[i][i]).sum();
    Ok(trace as f64 / total as f64)
}

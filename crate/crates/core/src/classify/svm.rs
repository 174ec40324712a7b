//! One-vs-one RBF SVM trained with SMO (maximal violating pair selection).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Standardizer, SvmError};

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub c: f64,
    pub gamma: f64,
    /// Stop when the maximal KKT violation `m(α) − M(α)` drops below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl SvmParams {
    pub fn new(c: f64, gamma: f64) -> Self {
        Self { c, gamma, tol: 1e-3, max_iter: 1_000_000 }
    }

    fn validate(&self) -> Result<(), SvmError> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(SvmError::InvalidParameter(format!("c must be positive, got {}", self.c)));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(SvmError::InvalidParameter(format!(
                "gamma must be positive, got {}",
                self.gamma
            )));
        }
        if !(self.tol > 0.0) {
            return Err(SvmError::InvalidParameter("tol must be positive".into()));
        }
        Ok(())
    }
}

#[inline]
pub fn rbf(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum();
    (-gamma * d2).exp()
}

/// Dual solution of one binary problem.
#[derive(Debug, Clone, PartialEq)]
pub struct BinarySolution {
    /// One multiplier per training row, in input order.
    pub alpha: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Final `m(α) − M(α)`.
    pub gap: f64,
}

fn kernel_matrix(x: &[&[f64]], gamma: f64) -> Vec<f64> {
    let n = x.len();
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        k[i * n + i] = 1.0;
        for j in 0..i {
            let v = rbf(x[i], x[j], gamma);
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    k
}

fn in_up(alpha: f64, y: f64, c: f64) -> bool {
    (y > 0.0 && alpha < c) || (y < 0.0 && alpha > 0.0)
}

fn in_low(alpha: f64, y: f64, c: f64) -> bool {
    (y < 0.0 && alpha < c) || (y > 0.0 && alpha > 0.0)
}

/// Maximal violating pair `(i, j, m − M)`; ties go to the lowest index.
fn select_pair(alpha: &[f64], y: &[f64], grad: &[f64], c: f64) -> Option<(usize, usize, f64)> {
    let mut best_up: Option<(usize, f64)> = None;
    let mut best_low: Option<(usize, f64)> = None;
    for t in 0..alpha.len() {
        let v = -y[t] * grad[t];
        if in_up(alpha[t], y[t], c) && best_up.map_or(true, |(_, m)| v > m) {
            best_up = Some((t, v));
        }
        if in_low(alpha[t], y[t], c) && best_low.map_or(true, |(_, m)| v < m) {
            best_low = Some((t, v));
        }
    }
    match (best_up, best_low) {
        (Some((i, m)), Some((j, big_m))) => Some((i, j, m - big_m)),
        _ => None,
    }
}

fn bias_from(alpha: &[f64], y: &[f64], grad: &[f64], c: f64) -> f64 {
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut free = 0usize;
    let mut sum_free = 0.0;
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum_free += yg;
        }
    }
    let rho = if free > 0 { sum_free / free as f64 } else { (ub + lb) / 2.0 };
    -rho
}

/// Solves `min ½αᵀQα − Σα` s.t. `0 ≤ α ≤ C`, `yᵀα = 0` with `y ∈ {−1, +1}`.
pub fn train_binary(x: &[&[f64]], y: &[f64], params: &SvmParams) -> Result<BinarySolution, SvmError> {
    params.validate()?;
    if x.len() != y.len() {
        return Err(SvmError::LabelCount { labels: y.len(), rows: x.len() });
    }
    if !y.iter().any(|&v| v > 0.0) || !y.iter().any(|&v| v < 0.0) {
        return Err(SvmError::DegenerateClass(
            if y.iter().any(|&v| v > 0.0) { "-1" } else { "+1" }.into(),
        ));
    }
    let n = x.len();
    let c = params.c;
    let k = kernel_matrix(x, params.gamma);
    let q = |i: usize, j: usize| y[i] * y[j] * k[i * n + j];

    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let mut iterations = 0;
    let mut converged = false;
    let mut gap = f64::INFINITY;

    while let Some((i, j, g)) = select_pair(&alpha, y, &grad, c) {
        gap = g;
        if gap < params.tol {
            converged = true;
            break;
        }
        if iterations >= params.max_iter {
            break;
        }
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        let (qii, qjj, qij) = (q(i, i), q(j, j), q(i, j));
        let (mut ai, mut aj) = (old_i, old_j);
        if y[i] != y[j] {
            let quad = (qii + qjj + 2.0 * qij).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = ai - aj;
            ai += delta;
            aj += delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > 0.0 {
                if ai > c {
                    ai = c;
                    aj = c - diff;
                }
            } else if aj > c {
                aj = c;
                ai = c + diff;
            }
        } else {
            let quad = (qii + qjj - 2.0 * qij).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = ai + aj;
            ai -= delta;
            aj += delta;
            if sum > c {
                if ai > c {
                    ai = c;
                    aj = sum - c;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > c {
                if aj > c {
                    aj = c;
                    ai = sum - c;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
        }
        alpha[i] = ai;
        alpha[j] = aj;
        let (di, dj) = (ai - old_i, aj - old_j);
        for t in 0..n {
            grad[t] += q(t, i) * di + q(t, j) * dj;
        }
    }

    let bias = bias_from(&alpha, y, &grad, c);
    Ok(BinarySolution { alpha, bias, iterations, converged, gap })
}

/// Maximal KKT violation `max(0, m(α) − M(α))`, recomputed from scratch.
pub fn kkt_residual(x: &[&[f64]], y: &[f64], alpha: &[f64], c: f64, gamma: f64) -> f64 {
    let n = x.len();
    let grad: Vec<f64> = (0..n)
        .map(|t| {
            let s: f64 = (0..n)
                .filter(|&s| alpha[s] != 0.0)
                .map(|s| alpha[s] * y[s] * rbf(x[t], x[s], gamma))
                .sum();
            y[t] * s - 1.0
        })
        .collect();
    select_pair(alpha, y, &grad, c).map_or(0.0, |(_, _, g)| g.max(0.0))
}

/// Binary machine for classes `(i, j)`: positive decision votes for `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairMachine {
    pub sv: Vec<Vec<f64>>,
    pub alpha_y: Vec<f64>,
    pub bias: f64,
}

impl PairMachine {
    pub fn decision(&self, z: &[f64], gamma: f64) -> f64 {
        self.sv
            .iter()
            .zip(&self.alpha_y)
            .map(|(s, a)| a * rbf(s, z, gamma))
            .sum::<f64>()
            + self.bias
    }
}

/// Trained one-vs-one classifier, together with its input standardizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub classes: Vec<String>,
    pub gamma: f64,
    pub c: f64,
    pub standardizer: Standardizer,
    pub pairs: Vec<PairMachine>,
    /// False if any binary machine hit the iteration cap.
    #[serde(skip, default = "default_true")]
    pub converged: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub label: String,
    pub class_index: usize,
    /// One decision value per pair, in pair order.
    pub decisions: Vec<f64>,
}

/// Class index pairs `(i, j)`, `i < j`, in machine order.
pub fn pair_indices(k: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..k).flat_map(move |i| (i + 1..k).map(move |j| (i, j)))
}

/// Fits a standardizer on `x` and trains one binary SMO machine per class pair.
///
/// Classes are the sorted distinct labels.
pub fn svm_train<L: AsRef<str>>(
    x: &[Vec<f64>],
    labels: &[L],
    params: &SvmParams,
) -> Result<SvmModel, SvmError> {
    params.validate()?;
    if x.len() != labels.len() {
        return Err(SvmError::LabelCount { labels: labels.len(), rows: x.len() });
    }
    let standardizer = Standardizer::fit(x)?;
    let z = standardizer.apply(x)?;
    let mut classes: Vec<String> = labels.iter().map(|l| l.as_ref().to_owned()).collect();
    classes.sort();
    classes.dedup();
    if classes.len() < 2 {
        return Err(SvmError::TooFewClasses(classes.len()));
    }
    let class_of: Vec<usize> = labels
        .iter()
        .map(|l| classes.binary_search_by(|c| c.as_str().cmp(l.as_ref())).expect("label is a class"))
        .collect();

    let pairs: Vec<(usize, usize)> = pair_indices(classes.len()).collect();
    let trained: Vec<(PairMachine, bool)> = pairs
        .par_iter()
        .map(|&(a, b)| {
            let idx: Vec<usize> =
                (0..z.len()).filter(|&t| class_of[t] == a || class_of[t] == b).collect();
            let rows: Vec<&[f64]> = idx.iter().map(|&t| z[t].as_slice()).collect();
            let y: Vec<f64> = idx.iter().map(|&t| if class_of[t] == a { 1.0 } else { -1.0 }).collect();
            let sol = train_binary(&rows, &y, params)?;
            let mut sv = Vec::new();
            let mut alpha_y = Vec::new();
            for (t, &a) in sol.alpha.iter().enumerate() {
                if a > 0.0 {
                    sv.push(rows[t].to_vec());
                    alpha_y.push(a * y[t]);
                }
            }
            Ok((PairMachine { sv, alpha_y, bias: sol.bias }, sol.converged))
        })
        .collect::<Result<_, SvmError>>()?;

    let converged = trained.iter().all(|(_, ok)| *ok);
    Ok(SvmModel {
        classes,
        gamma: params.gamma,
        c: params.c,
        standardizer,
        pairs: trained.into_iter().map(|(m, _)| m).collect(),
        converged,
    })
}

/// Majority vote over pairs; ties go to the larger summed |decision|, then to class order.
pub fn svm_predict(model: &SvmModel, x: &[f64]) -> Result<Prediction, SvmError> {
    let z = model.standardizer.apply_row(x)?;
    let k = model.classes.len();
    let mut votes = vec![0usize; k];
    let mut margin = vec![0.0; k];
    let mut decisions = Vec::with_capacity(model.pairs.len());
    for ((i, j), machine) in pair_indices(k).zip(&model.pairs) {
        let d = machine.decision(&z, model.gamma);
        let winner = if d > 0.0 { i } else { j };
        votes[winner] += 1;
        margin[winner] += d.abs();
        decisions.push(d);
    }
    let mut best = 0;
    for c in 1..k {
        if votes[c] > votes[best] || (votes[c] == votes[best] && margin[c] > margin[best]) {
            best = c;
        }
    }
    Ok(Prediction { label: model.classes[best].clone(), class_index: best, decisions })
}

impl SvmModel {
    pub fn predict(&self, x: &[f64]) -> Result<Prediction, SvmError> {
        svm_predict(self, x)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, SvmError> {
        let model: SvmModel =
            serde_json::from_str(text).map_err(|e| SvmError::MalformedModel(e.to_string()))?;
        let k = model.classes.len();
        if k < 2 {
            return Err(SvmError::TooFewClasses(k));
        }
        if model.pairs.len() != k * (k - 1) / 2 {
            return Err(SvmError::MalformedModel(format!(
                "{} classes need {} pairs, found {}",
                k,
                k * (k - 1) / 2,
                model.pairs.len()
            )));
        }
        let dim = model.standardizer.dim();
        if model.standardizer.std.len() != dim {
            return Err(SvmError::MalformedModel("standardizer mean/std lengths differ".into()));
        }
        for p in &model.pairs {
            if p.sv.len() != p.alpha_y.len() || p.sv.iter().any(|s| s.len() != dim) {
                return Err(SvmError::MalformedModel("support vector shape mismatch".into()));
            }
        }
        Ok(model)
    }
}

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{svm_train, SvmError, SvmModel, SvmParams};
use crate::eval::{confusion, uar};

/// Hyperparameter grid. With `gamma_relative`, each gamma is divided by the feature dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    pub c: Vec<f64>,
    pub gamma: Vec<f64>,
    pub gamma_relative: bool,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { c: vec![0.1, 1.0, 10.0, 100.0], gamma: vec![0.1, 1.0, 10.0], gamma_relative: true }
    }
}

impl GridSpec {
    pub fn single(c: f64, gamma: f64) -> Self {
        Self { c: vec![c], gamma: vec![gamma], gamma_relative: false }
    }

    /// Grid points in evaluation order, with gamma already resolved against `dim`.
    pub fn points(&self, dim: usize) -> Vec<(f64, f64)> {
        let scale = if self.gamma_relative { 1.0 / dim.max(1) as f64 } else { 1.0 };
        self.c
            .iter()
            .flat_map(|&c| self.gamma.iter().map(move |&g| (c, g * scale)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub c: f64,
    pub gamma: f64,
    pub valid_uar: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub best_c: f64,
    pub best_gamma: f64,
    pub valid_uar: f64,
    pub points: Vec<GridPoint>,
    /// False if any grid point hit the iteration cap.
    pub converged: bool,
}

fn validation_uar(model: &SvmModel, x: &[Vec<f64>], y: &[String]) -> Result<f64, SvmError> {
    let pred: Vec<String> =
        x.iter().map(|r| model.predict(r).map(|p| p.label)).collect::<Result<_, _>>()?;
    // Validation labels unseen in training simply count as misses.
    let mut classes = model.classes.clone();
    for l in y {
        if !classes.contains(l) {
            classes.push(l.clone());
        }
    }
    let cm = confusion(y, &pred, &classes).expect("labels drawn from classes");
    Ok(uar(&cm).unwrap_or(0.0))
}

/// Trains on `train` for every grid point and picks the best validation UAR.
///
/// Ties go to the smaller c, then the smaller gamma.
pub fn grid_search(
    train: (&[Vec<f64>], &[String]),
    valid: (&[Vec<f64>], &[String]),
    grid: &GridSpec,
) -> Result<GridResult, SvmError> {
    if grid.c.is_empty() || grid.gamma.is_empty() {
        return Err(SvmError::InvalidParameter("grid must be non-empty".into()));
    }
    let dim = train.0.first().map_or(0, Vec::len);
    let points: Vec<GridPoint> = grid
        .points(dim)
        .par_iter()
        .map(|&(c, gamma)| {
            let model = svm_train(train.0, train.1, &SvmParams::new(c, gamma))?;
            let valid_uar = validation_uar(&model, valid.0, valid.1)?;
            Ok(GridPoint { c, gamma, valid_uar, converged: model.converged })
        })
        .collect::<Result<_, SvmError>>()?;

    let mut best = &points[0];
    for p in &points[1..] {
        let simpler = (p.c, p.gamma) < (best.c, best.gamma);
        if p.valid_uar > best.valid_uar || (p.valid_uar == best.valid_uar && simpler) {
            best = p;
        }
    }
    Ok(GridResult {
        best_c: best.c,
        best_gamma: best.gamma,
        valid_uar: best.valid_uar,
        converged: points.iter().all(|p| p.converged),
        points,
    })
}

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::folds::{loso_splits, Fold};
use super::manifest::{label_speaker_warnings, sorted_unique, DatasetManifest};
use super::metrics::{accuracy, confusion, empty_rows, uar, ConfusionMatrix};
use super::EvalError;
use crate::classify::{grid_search, svm_train, GridSpec, SvmParams};
use crate::features::{FeatureCache, FeatureConfig, FeatureKind, FeatureSet};
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub test_speaker: String,
    pub valid_speaker: String,
    pub train_speakers: Vec<String>,
    pub best_c: f64,
    pub best_gamma: f64,
    pub valid_uar: f64,
    pub accuracy: f64,
    pub uar: f64,
    /// Classes absent from the test speaker, left out of this fold's UAR.
    pub empty_classes: Vec<String>,
    pub converged: bool,
    pub confusion: ConfusionMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub feature_kind: FeatureKind,
    pub config_hash: String,
    pub dim: usize,
    pub n_utterances: usize,
    pub classes: Vec<String>,
    pub grid: GridSpec,
    pub folds: Vec<FoldReport>,
    /// Unweighted mean over folds.
    pub mean_accuracy: f64,
    /// Unweighted mean over folds.
    pub mean_uar: f64,
    pub pooled_accuracy: f64,
    pub pooled_uar: f64,
    pub pooled_confusion: ConfusionMatrix,
    /// Folds in which at least one SVM hit the iteration cap.
    pub unconverged_folds: usize,
    pub warnings: Vec<String>,
}

impl ExperimentReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One row per fold, then an aggregate row (`test_speaker` = `mean`).
    pub fn summary_csv(&self) -> String {
        let mut out = String::from("test_speaker,valid_speaker,best_c,best_gamma,valid_uar,accuracy,uar\n");
        for f in &self.folds {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                f.test_speaker, f.valid_speaker, f.best_c, f.best_gamma, f.valid_uar, f.accuracy, f.uar
            );
        }
        let _ = writeln!(out, "mean,,,,,{},{}", self.mean_accuracy, self.mean_uar);
        out
    }

    /// Pooled and per-fold confusion matrices as aligned text.
    pub fn confusion_text(&self) -> String {
        let mut out = format!(
            "pooled ({} utterances, accuracy {:.4}, UAR {:.4})\n",
            self.pooled_confusion.total(),
            self.pooled_accuracy,
            self.pooled_uar
        );
        out.push_str(&self.pooled_confusion.render_text());
        for f in &self.folds {
            let _ = write!(out, "\ntest speaker {} (accuracy {:.4}, UAR {:.4})\n", f.test_speaker, f.accuracy, f.uar);
            out.push_str(&f.confusion.render_text());
        }
        out
    }
}

type Rows<'a> = (Vec<Vec<f64>>, Vec<String>);

fn partition<'a>(features: &'a FeatureSet, keep: impl Fn(&str) -> bool) -> Rows<'a> {
    features
        .rows
        .iter()
        .filter(|r| keep(&r.speaker_id))
        .map(|r| (r.values.clone(), r.label.clone()))
        .unzip()
}

fn run_fold(features: &FeatureSet, fold: &Fold, classes: &[String], grid: &GridSpec) -> Result<FoldReport, EvalError> {
    let test_speaker = fold.test_speaker.clone();
    let ctx = |source| EvalError::Fold { test_speaker: test_speaker.clone(), source };
    let train = partition(features, |s| fold.train_speakers.iter().any(|t| t == s));
    let valid = partition(features, |s| s == fold.valid_speaker);
    let test = partition(features, |s| s == fold.test_speaker);
    for (part, rows) in [("train", &train), ("valid", &valid), ("test", &test)] {
        if rows.0.is_empty() {
            return Err(EvalError::EmptyPartition { test_speaker: test_speaker.clone(), part });
        }
    }

    let search = grid_search((&train.0, &train.1), (&valid.0, &valid.1), grid).map_err(ctx)?;
    let model = svm_train(&train.0, &train.1, &SvmParams::new(search.best_c, search.best_gamma)).map_err(ctx)?;
    let predicted: Vec<String> = test
        .0
        .iter()
        .map(|x| model.predict(x).map(|p| p.label))
        .collect::<Result<_, _>>()
        .map_err(ctx)?;
    let cm = confusion(&test.1, &predicted, classes)?;
    Ok(FoldReport {
        test_speaker: fold.test_speaker.clone(),
        valid_speaker: fold.valid_speaker.clone(),
        train_speakers: fold.train_speakers.clone(),
        best_c: search.best_c,
        best_gamma: search.best_gamma,
        valid_uar: search.valid_uar,
        accuracy: accuracy(&cm)?,
        uar: uar(&cm)?,
        empty_classes: empty_rows(&cm),
        converged: search.converged && model.converged,
        confusion: cm,
    })
}

/// LOSO evaluation of precomputed features.
///
/// Each fold runs grid search on (train, valid), retrains on train with the
/// best point and scores the test speaker. Folds run in parallel; results keep
/// fold order, so the report is deterministic.
pub fn evaluate_features(features: &FeatureSet, grid: &GridSpec) -> Result<ExperimentReport, EvalError> {
    let speakers: Vec<&str> = features.rows.iter().map(|r| r.speaker_id.as_str()).collect();
    let folds = loso_splits(&speakers)?;
    let classes = sorted_unique(features.rows.iter().map(|r| r.label.as_str()));
    let fold_reports: Vec<FoldReport> =
        folds.par_iter().map(|f| run_fold(features, f, &classes, grid)).collect::<Result<_, _>>()?;

    let mut pooled = ConfusionMatrix::zeros(classes.clone());
    for f in &fold_reports {
        pooled.add(&f.confusion)?;
    }
    let k = fold_reports.len() as f64;
    let mut warnings =
        label_speaker_warnings(features.rows.iter().map(|r| (r.speaker_id.as_str(), r.label.as_str())));
    for f in &fold_reports {
        if !f.empty_classes.is_empty() {
            warnings.push(format!(
                "test speaker {} has no samples of {}; excluded from its UAR",
                f.test_speaker,
                f.empty_classes.join(", ")
            ));
        }
    }
    let unconverged_folds = fold_reports.iter().filter(|f| !f.converged).count();
    if unconverged_folds > 0 {
        warnings.push(format!("{unconverged_folds} fold(s) hit the SMO iteration cap"));
    }
    Ok(ExperimentReport {
        feature_kind: features.kind,
        config_hash: features.config_hash.clone(),
        dim: features.dim,
        n_utterances: features.len(),
        classes,
        grid: grid.clone(),
        mean_accuracy: fold_reports.iter().map(|f| f.accuracy).sum::<f64>() / k,
        mean_uar: fold_reports.iter().map(|f| f.uar).sum::<f64>() / k,
        pooled_accuracy: accuracy(&pooled)?,
        pooled_uar: uar(&pooled)?,
        pooled_confusion: pooled,
        folds: fold_reports,
        unconverged_folds,
        warnings,
    })
}

/// Extracts features for `manifest` (through `cache` when given) and evaluates them.
pub fn run_experiment(
    manifest: &DatasetManifest,
    cfg: &FeatureConfig,
    grid: &GridSpec,
    cache: Option<&FeatureCache>,
) -> Result<ExperimentReport> {
    let features = match cache {
        Some(c) => c.get_or_extract(manifest, cfg)?,
        None => crate::features::extract_manifest(manifest, cfg)?,
    };
    Ok(evaluate_features(&features, grid)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub q: u32,
    pub t: usize,
    pub mean_accuracy: f64,
    pub mean_uar: f64,
    pub config_hash: String,
}

/// Runs one experiment per (Q, T) cell, varying the layer-1 Q and the averaging scale.
pub fn param_sweep(
    manifest: &DatasetManifest,
    q_values: &[u32],
    t_values: &[usize],
    cfg: &FeatureConfig,
    grid: &GridSpec,
    cache: Option<&FeatureCache>,
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(q_values.len() * t_values.len());
    for &q in q_values {
        for &t in t_values {
            let mut cell = cfg.clone();
            cell.scattering.q1 = q;
            cell.scattering.t = t;
            let report = run_experiment(manifest, &cell, grid, cache)?;
            rows.push(SweepRow {
                q,
                t,
                mean_accuracy: report.mean_accuracy,
                mean_uar: report.mean_uar,
                config_hash: report.config_hash,
            });
        }
    }
    Ok(rows)
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("q,t,mean_accuracy,mean_uar\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{}", r.q, r.t, r.mean_accuracy, r.mean_uar);
    }
    out
}

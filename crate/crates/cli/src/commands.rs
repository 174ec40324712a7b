use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use scatemo::eval::{accuracy, confusion, evaluate_features, sweep_csv, uar, SweepRow};
use scatemo::features::{extract_manifest, FeatureCache};
use scatemo::filterbank::{build_morlet_bank, littlewood_paley_bounds};
use scatemo::{DatasetManifest, ExperimentReport, FeatureKind, FeatureSet, FilterBankSpec, GridSpec, ScatteringConfig};
use scatemo::{SvmModel, SvmParams};

use crate::config::{self, RunConfig, SAMPLE_RATE_HZ};
use crate::{CliError, Outcome};

fn load_config(path: Option<PathBuf>) -> Result<RunConfig, CliError> {
    Ok(match path {
        Some(p) => RunConfig::load(&p)?,
        None => RunConfig::default(),
    })
}

fn load_grid(path: Option<PathBuf>, fallback: &GridSpec) -> Result<GridSpec, CliError> {
    let Some(path) = path else { return Ok(fallback.clone()) };
    let text = fs::read_to_string(&path)
        .map_err(|source| config::ConfigError::Read { path: path.display().to_string(), source })?;
    let grid: GridSpec = config::parse(&text)?;
    if grid.c.is_empty() || grid.gamma.is_empty() {
        return Err(CliError::Usage(format!("{}: c and gamma must be non-empty", path.display())));
    }
    Ok(grid)
}

fn required(arg: Option<PathBuf>, from_config: &Option<PathBuf>, flag: &str) -> Result<PathBuf, CliError> {
    arg.or_else(|| from_config.clone())
        .ok_or_else(|| CliError::Usage(format!("--{flag} is required (or set {} in the config)", flag.replace('-', "_"))))
}

fn load_manifest(path: &Path) -> Result<DatasetManifest, CliError> {
    let manifest = DatasetManifest::from_path(path)?;
    for w in manifest.warnings() {
        eprintln!("warning: {w}");
    }
    Ok(manifest)
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|e| CliError::Data(format!("cannot create {}: {e}", path.display())))
}

pub fn extract(
    manifest: Option<PathBuf>,
    feature: Option<FeatureKind>,
    config: Option<PathBuf>,
    out: &Path,
) -> Result<Outcome, CliError> {
    let mut cfg = load_config(config)?;
    if let Some(kind) = feature {
        cfg.feature = kind;
    }
    let manifest = load_manifest(&required(manifest, &cfg.manifest, "manifest")?)?;
    let features = extract_manifest(&manifest, &cfg.feature_config())?;
    features.write(out)?;
    eprintln!(
        "{} utterances, kind={} dim={} config_hash={}",
        features.len(),
        features.kind,
        features.dim,
        features.config_hash
    );
    Ok(Outcome::Ok)
}

fn write_report(dir: &Path, report: &ExperimentReport) -> Result<(), CliError> {
    create_dir(dir)?;
    write(&dir.join("report.json"), &report.to_json())?;
    write(&dir.join("summary.csv"), &report.summary_csv())?;
    write(&dir.join("confusion.txt"), &report.confusion_text())?;
    Ok(())
}

pub fn evaluate(
    features: &Path,
    grid: Option<PathBuf>,
    config: Option<PathBuf>,
    report_dir: Option<PathBuf>,
) -> Result<Outcome, CliError> {
    let has_config = config.is_some();
    let cfg = load_config(config)?;
    let grid = load_grid(grid, &cfg.grid)?;
    let report_dir = required(report_dir, &cfg.report_dir, "report-dir")?;
    let set = FeatureSet::read(features)?;
    if has_config {
        set.check_hash(&cfg.feature_config().config_hash())?;
    }
    let report = evaluate_features(&set, &grid)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    write_report(&report_dir, &report)?;
    println!(
        "{} config_hash={} mean UAR {:.4} mean accuracy {:.4} (pooled UAR {:.4}, accuracy {:.4})",
        report.feature_kind,
        report.config_hash,
        report.mean_uar,
        report.mean_accuracy,
        report.pooled_uar,
        report.pooled_accuracy
    );
    Ok(if report.unconverged_folds > 0 { Outcome::ConvergenceWarnings } else { Outcome::Ok })
}

/// Model file: the classifier plus the provenance of the features it was trained on.
#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    feature_kind: FeatureKind,
    config_hash: String,
    dim: usize,
    model: SvmModel,
}

pub fn train(features: &Path, c: f64, gamma: Option<f64>, max_iter: usize, model_path: &Path) -> Result<Outcome, CliError> {
    if !(c > 0.0) || gamma.is_some_and(|g| !(g > 0.0)) {
        return Err(CliError::Usage("--c and --gamma must be positive".into()));
    }
    let set = FeatureSet::read(features)?;
    let gamma = gamma.unwrap_or(1.0 / set.dim.max(1) as f64);
    let x: Vec<Vec<f64>> = set.rows.iter().map(|r| r.values.clone()).collect();
    let labels: Vec<&str> = set.rows.iter().map(|r| r.label.as_str()).collect();
    let model = scatemo::classify::svm_train(&x, &labels, &SvmParams { max_iter, ..SvmParams::new(c, gamma) })?;
    let converged = model.converged;
    let file = ModelFile { feature_kind: set.kind, config_hash: set.config_hash.clone(), dim: set.dim, model };
    write(model_path, &serde_json::to_string_pretty(&file).expect("model serializes"))?;
    eprintln!("trained on {} utterances, {} classes, c={c} gamma={gamma}", set.len(), file.model.classes.len());
    Ok(if converged { Outcome::Ok } else { Outcome::ConvergenceWarnings })
}

pub fn predict(model_path: &Path, features: &Path, out: &Path) -> Result<Outcome, CliError> {
    let text = fs::read_to_string(model_path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", model_path.display())))?;
    let file: ModelFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Data(format!("{}: malformed model file: {e}", model_path.display())))?;
    // Re-validate the classifier itself.
    let model = SvmModel::from_json(&serde_json::to_string(&file.model).expect("model serializes"))?;
    let set = FeatureSet::read(features)?;
    set.check_hash(&file.config_hash)?;

    let mut csv = String::from("utterance_id,label,predicted\n");
    let mut predicted = Vec::with_capacity(set.len());
    for r in &set.rows {
        let p = model.predict(&r.values)?;
        csv.push_str(&format!("{},{},{}\n", r.utterance_id, r.label, p.label));
        predicted.push(p.label);
    }
    write(out, &csv)?;

    let truth: Vec<&str> = set.rows.iter().map(|r| r.label.as_str()).collect();
    let mut classes = model.classes.clone();
    for l in &truth {
        if !classes.iter().any(|c| c == l) {
            classes.push((*l).to_owned());
        }
    }
    if let Ok(cm) = confusion(&truth, &predicted, &classes) {
        if let (Ok(acc), Ok(u)) = (accuracy(&cm), uar(&cm)) {
            eprintln!("{} utterances, accuracy {acc:.4}, UAR {u:.4}", set.len());
        }
    }
    Ok(Outcome::Ok)
}

pub struct SweepRequest {
    pub manifest: Option<PathBuf>,
    pub q: Vec<u32>,
    pub t: Vec<usize>,
    pub feature: Option<FeatureKind>,
    pub config: Option<PathBuf>,
    pub grid: Option<PathBuf>,
    pub report_dir: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
}

pub fn sweep(req: SweepRequest) -> Result<Outcome, CliError> {
    let mut cfg = load_config(req.config)?;
    if let Some(kind) = req.feature {
        cfg.feature = kind;
    }
    if !cfg.feature.is_scattering() {
        return Err(CliError::Usage(format!("sweep varies scattering Q and T; {} is not a scattering kind", cfg.feature)));
    }
    if req.q.is_empty() || req.t.is_empty() {
        return Err(CliError::Usage("--q and --t need at least one value".into()));
    }
    let grid = load_grid(req.grid, &cfg.grid)?;
    let manifest = load_manifest(&required(req.manifest, &cfg.manifest, "manifest")?)?;
    let report_dir = required(req.report_dir, &cfg.report_dir, "report-dir")?;
    let cache = FeatureCache::new(req.cache_dir.or(cfg.cache_dir.clone()).unwrap_or_else(|| report_dir.join("cache")));

    let mut rows = Vec::new();
    let mut unconverged = false;
    for &q in &req.q {
        for &t in &req.t {
            let mut cell = cfg.feature_config();
            cell.scattering.q1 = q;
            cell.scattering.t = t;
            let features = cache.get_or_extract(&manifest, &cell)?;
            let report = evaluate_features(&features, &grid)?;
            write_report(&report_dir.join(format!("q{q}_t{t}")), &report)?;
            unconverged |= report.unconverged_folds > 0;
            eprintln!("Q={q} T={t}: mean UAR {:.4}", report.mean_uar);
            rows.push(SweepRow {
                q,
                t,
                mean_accuracy: report.mean_accuracy,
                mean_uar: report.mean_uar,
                config_hash: report.config_hash,
            });
        }
    }
    create_dir(&report_dir)?;
    write(&report_dir.join("sweep.csv"), &sweep_csv(&rows))?;
    write(&report_dir.join("sweep.json"), &serde_json::to_string_pretty(&rows).expect("rows serialize"))?;
    Ok(if unconverged { Outcome::ConvergenceWarnings } else { Outcome::Ok })
}

pub fn inspect_filters(q: u32, t: usize, n: usize, out: Option<&Path>) -> Result<Outcome, CliError> {
    let n_fft = ScatteringConfig { n, ..Default::default() }.n_fft();
    let spec = FilterBankSpec::new(q, t, n_fft).map_err(|e| CliError::Usage(e.to_string()))?;
    let bank = build_morlet_bank(spec).map_err(|e| CliError::Usage(e.to_string()))?;
    let csv = bank.to_csv(SAMPLE_RATE_HZ);
    match out {
        Some(path) => write(path, &csv)?,
        None => print!("{csv}"),
    }
    let lp = littlewood_paley_bounds(&bank);
    eprintln!(
        "{} filters ({} geometric), n_fft={n_fft}, Littlewood-Paley min {:.4} max {:.6}",
        bank.len(),
        bank.geometric_count(),
        lp.min,
        lp.max
    );
    Ok(Outcome::Ok)
}


pub fn show_config(config: Option<PathBuf>, feature: Option<FeatureKind>, json: bool) -> Result<Outcome, CliError> {
    let mut cfg = load_config(config)?;
    if let Some(kind) = feature {
        cfg.feature = kind;
    }
    if json {
        println!("{}", serde_json::to_string_pretty(&cfg).expect("config serializes"));
    } else {
        print!("{}", config::to_kv(&cfg));
    }
    eprintln!("config_hash={}", cfg.feature_config().config_hash());
    Ok(Outcome::Ok)
}

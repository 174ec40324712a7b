//! `scatemo` command-line tool.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 finished with
//! convergence warnings.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use scatemo::FeatureKind;

pub const THREADS_ENV: &str = "SCATFEAT_THREADS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] config::ConfigError),
    #[error("{0}")]
    Data(String),
    #[error(transparent)]
    Core(#[from] scatemo::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 1,
            CliError::Data(_) | CliError::Core(_) => 2,
        }
    }
}

impl From<scatemo::features::FeatureError> for CliError {
    fn from(e: scatemo::features::FeatureError) -> Self {
        CliError::Core(e.into())
    }
}

impl From<scatemo::eval::EvalError> for CliError {
    fn from(e: scatemo::eval::EvalError) -> Self {
        CliError::Core(e.into())
    }
}

impl From<scatemo::classify::SvmError> for CliError {
    fn from(e: scatemo::classify::SvmError) -> Self {
        CliError::Core(e.into())
    }
}

/// What a successful command reports back.
#[derive(Debug, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    ConvergenceWarnings,
}

#[derive(Debug, Parser)]
#[command(name = "scatemo", version, about = "Scattering features and LOSO evaluation for speech emotion recognition")]
struct Cli {
    /// Worker threads (default: SCATFEAT_THREADS, else all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Extract one feature vector per manifest row into a SCATFEAT file.
    Extract(ExtractArgs),
    /// Leave-one-speaker-out evaluation of a feature file.
    Evaluate(EvaluateArgs),
    /// Train one SVM on a whole feature file.
    Train(TrainArgs),
    /// Predict labels for a feature file with a trained model.
    Predict(PredictArgs),
    /// LOSO evaluation over a grid of layer-1 Q and averaging scale T.
    Sweep(SweepArgs),
    /// Dump the layer-1 filter bank as CSV.
    InspectFilters(InspectArgs),
    /// Print the effective run config and its feature config hash.
    ShowConfig(ShowConfigArgs),
}

#[derive(Debug, Args)]
struct ExtractArgs {
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    feature: Option<FeatureKind>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    features: PathBuf,
    /// Grid file (key = value or JSON with c, gamma, gamma_relative).
    #[arg(long)]
    grid: Option<PathBuf>,
    /// Run config; the feature file must carry its config hash.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    report_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    features: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    /// RBF gamma; defaults to 1/dim.
    #[arg(long)]
    gamma: Option<f64>,
    /// SMO iteration cap per class pair.
    #[arg(long, default_value_t = 1_000_000)]
    max_iter: usize,
    #[arg(long)]
    model: PathBuf,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_values_t = [1, 3, 5, 8])]
    q: Vec<u32>,
    #[arg(long, value_delimiter = ',', default_values_t = [4096, 8192, 16384, 32768])]
    t: Vec<usize>,
    #[arg(long)]
    feature: Option<FeatureKind>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    grid: Option<PathBuf>,
    #[arg(long)]
    report_dir: Option<PathBuf>,
    /// Feature cache (default: <report-dir>/cache).
    #[arg(long)]
    cache_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct InspectArgs {
    #[arg(long, default_value_t = 5)]
    q: u32,
    #[arg(long, default_value_t = 16384)]
    t: usize,
    /// Signal length; the FFT size is the next power of two.
    #[arg(long, default_value_t = 51000)]
    n: usize,
    /// Output CSV (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ShowConfigArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    feature: Option<FeatureKind>,
    /// Print JSON instead of key = value lines.
    #[arg(long)]
    json: bool,
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>, CliError> {
    if let Some(n) = flag {
        return Ok(Some(n));
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        Err(_) => Ok(None),
    }
}

fn run(cli: Cli) -> Result<Outcome, CliError> {
    if let Some(n) = thread_count(cli.threads)? {
        if n == 0 {
            return Err(CliError::Usage("thread count must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot start {n} threads: {e}")))?;
    }
    match cli.command {
        Command::Extract(a) => commands::extract(a.manifest, a.feature, a.config, &a.out),
        Command::Evaluate(a) => commands::evaluate(&a.features, a.grid, a.config, a.report_dir),
        Command::Train(a) => commands::train(&a.features, a.c, a.gamma, a.max_iter, &a.model),
        Command::Predict(a) => commands::predict(&a.model, &a.features, &a.out),
        Command::Sweep(a) => commands::sweep(commands::SweepRequest {
            manifest: a.manifest,
            q: a.q,
            t: a.t,
            feature: a.feature,
            config: a.config,
            grid: a.grid,
            report_dir: a.report_dir,
            cache_dir: a.cache_dir,
        }),
        Command::InspectFilters(a) => commands::inspect_filters(a.q, a.t, a.n, a.out.as_deref()),
        Command::ShowConfig(a) => commands::show_config(a.config, a.feature, a.json),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::ConvergenceWarnings) => {
            eprintln!("warning: some SVMs hit the iteration cap");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand};
use sacr_core::estimators::Estimator;
use serde::Serialize;

use error::CliError;

/// Penalized scalar-on-function regression: simulate curves, fit and
/// compare estimators, and score new data.
#[derive(Debug, Parser)]
#[command(name = "sacr", version)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw random spline curves with responses from a known coefficient function.
    Simulate(SimulateArgs),
    /// Fit one estimator at given hyperparameters or by cross-validation.
    Fit(FitArgs),
    /// Nested cross-validation of one or more estimators.
    Evaluate(EvaluateArgs),
    /// Score curves with a saved fit.
    Predict(PredictArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct OutputArgs {
    /// Directory for output files, created if missing.
    #[arg(long, default_value = ".")]
    #[serde(skip)]
    pub out_dir: PathBuf,
    /// Flat `key = value` file of option defaults; flags win on conflict.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 50)]
    pub n_samples: usize,
    #[arg(long, default_value_t = 150)]
    pub grid_size: usize,
    /// Defaults to 35, or 50 with --correlated.
    #[arg(long)]
    pub inner_knots: Option<usize>,
    #[arg(long, default_value_t = 1.0, value_parser = parse_nonnegative)]
    pub noise_sd: f64,
    /// AR(1) spline coefficients with correlation 0.9 instead of independent ones.
    #[arg(long)]
    pub correlated: bool,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct DataArgs {
    /// CSV of curves, one row per sample, with a header line.
    #[arg(long)]
    pub data: PathBuf,
    /// Response column: a header name, a 0-based index, or `last`.
    #[arg(long, default_value = "last")]
    pub response_col: String,
    /// Treat the response as two class labels.
    #[arg(long)]
    pub classification: bool,
}

/// Hyperparameter values. Lists (comma-separated) form the grid under
/// --cv and for evaluate; a plain fit takes a single value each.
#[derive(Debug, Args, Serialize)]
pub struct HyperArgs {
    #[arg(long, value_delimiter = ',', value_parser = parse_nonnegative)]
    pub lambda: Vec<f64>,
    #[arg(long, value_delimiter = ',', value_parser = parse_unit)]
    pub phi: Vec<f64>,
    #[arg(long, value_delimiter = ',', value_parser = parse_positive)]
    pub gamma: Vec<f64>,
    #[arg(long, value_delimiter = ',', value_parser = parse_unit)]
    pub phi_relax: Vec<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct FitArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub estimator: Estimator,
    #[command(flatten)]
    #[serde(flatten)]
    pub hyper: HyperArgs,
    /// Center for centered ridge or SACR, one value per grid point.
    #[arg(long)]
    pub center_file: Option<PathBuf>,
    /// Select hyperparameters by k-fold grid search.
    #[arg(long)]
    pub cv: bool,
    #[arg(long, default_value_t = 3)]
    pub k_inner: usize,
    /// Stratify folds by class (classification only).
    #[arg(long, action = ArgAction::Set, default_value_t = true)]
    pub stratify: bool,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct EvaluateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub data: DataArgs,
    /// Comma-separated estimator names.
    #[arg(long, value_delimiter = ',', required = true)]
    pub estimator: Vec<Estimator>,
    #[command(flatten)]
    #[serde(flatten)]
    pub hyper: HyperArgs,
    #[arg(long)]
    pub center_file: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    pub k_outer: usize,
    #[arg(long, default_value_t = 3)]
    pub k_inner: usize,
    #[arg(long, default_value_t = 3)]
    pub repeats: usize,
    #[arg(long, action = ArgAction::Set, default_value_t = true)]
    pub stratify: bool,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct PredictArgs {
    /// fit.json written by `sacr fit`.
    #[arg(long)]
    pub fit: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Response column for residuals: a header name, a 0-based index,
    /// `last`, or `none`.
    #[arg(long, default_value = "none")]
    pub response_col: String,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

fn parse_number(s: &str) -> Result<f64, String> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| format!("`{s}` is not a number"))
        .and_then(|v| if v.is_finite() { Ok(v) } else { Err(format!("`{s}` is not finite")) })
}

fn parse_nonnegative(s: &str) -> Result<f64, String> {
    let v = parse_number(s)?;
    if v < 0.0 {
        return Err(format!("must be nonnegative, got {v}"));
    }
    Ok(v)
}

fn parse_positive(s: &str) -> Result<f64, String> {
    let v = parse_number(s)?;
    if v <= 0.0 {
        return Err(format!("must be positive, got {v}"));
    }
    Ok(v)
}

/// Values in `(0, 1]`.
fn parse_unit(s: &str) -> Result<f64, String> {
    let v = parse_number(s)?;
    if !(v > 0.0 && v <= 1.0) {
        return Err(format!("must lie in (0, 1], got {v}"));
    }
    Ok(v)
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("SACR_NUM_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::usage(format!("SACR_NUM_THREADS must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::usage(e.to_string()))
}

fn run() -> Result<(), CliError> {
    let argv = config::merge_config(std::env::args_os().collect())?;
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            if code == 0 {
                return Ok(());
            }
            return Err(CliError {
                code: error::EXIT_USAGE,
                message: String::new(),
            });
        }
    };
    configure_threads()?;
    match &cli.command {
        Command::Simulate(a) => commands::simulate(a),
        Command::Fit(a) => commands::fit(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Predict(a) => commands::predict(a),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if !e.message.is_empty() {
                eprintln!("error: {e}");
            }
            e.exit_code()
        }
    }
}

//! `bvar`: Bayesian VAR estimation and forecast evaluation under a fixed or
//! adaptive Wishart degrees-of-freedom prior. Batch in, reports out; no
//! network access anywhere.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod error;
mod ingest;

#[derive(Parser)]
#[command(name = "bvar", version, about = "Bayesian VAR with an adaptive Wishart degrees-of-freedom hyperprior")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic stationary VAR dataset plus a truth manifest.
    Simulate(SimulateArgs),
    /// Fit one model by Gibbs sampling and write draws and summaries.
    Fit(FitArgs),
    /// Rolling one-step-ahead forecasts under both priors, scored by RMSE and CRPS.
    Forecast(ForecastArgs),
    /// Replicated simulation study comparing both priors by RMAD.
    Study(StudyArgs),
}

#[derive(Args)]
pub struct SimulateArgs {
    /// Flat key = value configuration file; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory for the bundle.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Number of response variables.
    #[arg(long)]
    pub m: Option<usize>,
    /// Series length to retain (after warm-up).
    #[arg(long)]
    pub t: Option<usize>,
    /// Lag order of the generator.
    #[arg(long)]
    pub p: Option<usize>,
    /// Diagonal of the first-lag coefficient matrix.
    #[arg(long)]
    pub ar_coeff: Option<f64>,
    /// Draw the error covariance from an inverse Wishart with this df
    /// (omit for an identity covariance).
    #[arg(long)]
    pub nu_true: Option<usize>,
    /// Inverse-Wishart scale: `identity` or `unit-mean`.
    #[arg(long)]
    pub gen_scale: Option<String>,
}

#[derive(Args)]
pub struct FitArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Input CSV (header row, numeric body).
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Lag order.
    #[arg(long)]
    pub p: Option<usize>,
    /// Include an intercept column.
    #[arg(long)]
    pub intercept: bool,
    /// Degrees-of-freedom scheme: `loss` or `fixed:<int>`.
    #[arg(long)]
    pub nu_scheme: Option<String>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[arg(long)]
    pub thin: Option<usize>,
    #[arg(long)]
    pub mh_step: Option<usize>,
    /// Per-column transform spec: one of none|diff|log|logdiff|pct, or a
    /// comma list with one entry per column.
    #[arg(long)]
    pub transform: Option<String>,
    /// Header name of a date column to carry as labels only.
    #[arg(long)]
    pub date_column: Option<String>,
}

#[derive(Args)]
pub struct ForecastArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Lag order (required: never silently defaulted for forecasting).
    #[arg(long)]
    pub p: Option<usize>,
    /// Rolling window length R.
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub intercept: bool,
    /// Degrees of freedom of the fixed-nu benchmark arm (default m + 1).
    #[arg(long)]
    pub nu_fixed: Option<usize>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[arg(long)]
    pub thin: Option<usize>,
    #[arg(long)]
    pub mh_step: Option<usize>,
    #[arg(long)]
    pub transform: Option<String>,
    #[arg(long)]
    pub date_column: Option<String>,
}

#[derive(Args)]
pub struct StudyArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<usize>,
    /// Grid preset: `desk` (m in {5,10}, 50 replications) or `full`
    /// (m in {5,10,20}, 250 replications, long-running).
    #[arg(long)]
    pub preset: Option<String>,
    /// Custom cells `m:T:nu_true[,m:T:nu_true...]`, overriding the preset.
    #[arg(long)]
    pub cells: Option<String>,
    #[arg(long)]
    pub replications: Option<usize>,
    #[arg(long)]
    pub ar_coeff: Option<f64>,
    /// Inverse-Wishart generation scale: `identity` or `unit-mean`.
    #[arg(long)]
    pub gen_scale: Option<String>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[arg(long)]
    pub thin: Option<usize>,
    #[arg(long)]
    pub mh_step: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Simulate(args) => commands::cmd_simulate(args),
        Command::Fit(args) => commands::cmd_fit(args),
        Command::Forecast(args) => commands::cmd_forecast(args),
        Command::Study(args) => commands::cmd_study(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("bvar: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

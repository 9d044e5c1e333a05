// SPDX-License-Identifier: MIT OR Apache-2.0

//! `regime-seg` command-line front end.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand};

use config::Config;
use regime_seg::hfs::{Criterion, ParamCount};
use regime_seg::weighted_cluster::{Method, NmiNormalization};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, parameters or missing inputs; exit code 2.
    Usage(String),
    /// Failure while running; exit code 1.
    Run(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            Self::Usage(_) => 2,
            Self::Run(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Usage(m) => write!(f, "usage error: {m}"),
            Self::Run(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<regime_seg::Error> for CliError {
    fn from(e: regime_seg::Error) -> Self {
        let missing_file = matches!(&e, regime_seg::Error::Io(io) if io.kind() == std::io::ErrorKind::NotFound);
        if e.is_usage() || missing_file {
            Self::Usage(e.to_string())
        } else {
            Self::Run(e.to_string())
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "regime-seg", version, about = "Hidden-phase segmentation of time series")]
pub struct Cli {
    /// `key = value` file with default parameters; flags override it.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a simulated series and its true state labels.
    Simulate(SimulateArgs),
    /// Segment one column by tail-event recurrence times.
    Segment(SegmentArgs),
    /// Build the ball feature matrix of a series.
    ExtractFeatures(ExtractArgs),
    /// Cluster a feature matrix into hidden states.
    Decode(DecodeArgs),
    /// Score labels, run replication studies, or compare state tails.
    Evaluate(Box<EvaluateArgs>),
    /// Recurrence-time P-P data against the geometric law.
    Ppplot(PpplotArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Input CSV: time key, then value columns.
    #[arg(long, value_name = "CSV")]
    input: Option<PathBuf>,
    /// The input has no header row.
    #[arg(long)]
    no_header: bool,
}

#[derive(Debug, Args)]
pub struct ColumnArg {
    /// Value column by 1-based position or header name; default the first.
    #[arg(long)]
    column: Option<String>,
}

#[derive(Debug, Args)]
pub struct TailArgs {
    /// Lower tail probability.
    #[arg(long)]
    alpha: Option<f64>,
    /// Upper quantile level.
    #[arg(long)]
    beta: Option<f64>,
}

#[derive(Debug, Args)]
pub struct HfsArgs {
    /// Information criterion: aic or bic.
    #[arg(long)]
    criterion: Option<Criterion>,
    /// Penalty count: segments, states or breaks.
    #[arg(long)]
    param_count: Option<ParamCount>,
    /// Smallest run-length threshold searched.
    #[arg(long)]
    min_run: Option<usize>,
}

#[derive(Debug, Args)]
pub struct FeatureArgs {
    /// Number of balls.
    #[arg(long)]
    n_balls: Option<usize>,
    /// Ball size as a fraction of the series length.
    #[arg(long)]
    ratio: Option<f64>,
    /// Lag embedding order for univariate serial data; 0 disables it.
    #[arg(long)]
    lag: Option<usize>,
    /// Shuffle window length used with a lag embedding.
    #[arg(long)]
    window: Option<usize>,
    #[command(flatten)]
    hfs: HfsArgs,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    /// Weighting rule: fwsa, nmi, delta or entropy.
    #[arg(long)]
    method: Option<Method>,
    /// Number of hidden states.
    #[arg(long)]
    k: Option<usize>,
    /// Weight learning rate.
    #[arg(long)]
    eta: Option<f64>,
    /// Stop when no weight moves by more than this.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// K-Means restarts on the first pass.
    #[arg(long)]
    n_init: Option<usize>,
    /// NMI scaling: arithmetic, geometric or max.
    #[arg(long)]
    nmi_norm: Option<NmiNormalization>,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("scenario").required(true).args(["case", "ar", "sigma_switch"])))]
pub struct SimulateArgs {
    /// Bivariate Gaussian case 1 to 5.
    #[arg(long)]
    case: Option<u8>,
    /// Regime-switching autoregression of order 1 or 2.
    #[arg(long)]
    ar: Option<usize>,
    /// Univariate normal with scales S0 and S1.
    #[arg(long, value_name = "S0,S1")]
    sigma_switch: Option<String>,
    #[arg(long)]
    periods: Option<usize>,
    #[arg(long)]
    min_len: Option<usize>,
    #[arg(long)]
    max_len: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Series CSV to write.
    #[arg(long)]
    out: PathBuf,
    /// Truth label CSV to write.
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    column: ColumnArg,
    #[command(flatten)]
    tails: TailArgs,
    #[command(flatten)]
    hfs: HfsArgs,
    /// Segmentation CSV to write.
    #[arg(long)]
    out: PathBuf,
    /// Fit report JSON to write.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    features: FeatureArgs,
    #[arg(long)]
    seed: Option<u64>,
    /// Feature CSV to write.
    #[arg(long)]
    out: PathBuf,
    /// Ball membership JSON to write.
    #[arg(long)]
    balls_out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    /// Feature CSV from extract-features.
    #[arg(long)]
    features: PathBuf,
    /// Ball JSON from extract-features.
    #[arg(long)]
    balls: PathBuf,
    #[command(flatten)]
    cluster: ClusterArgs,
    #[arg(long)]
    seed: Option<u64>,
    /// Segmentation CSV to write.
    #[arg(long)]
    out: PathBuf,
    /// Final weight CSV to write.
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Iteration trace JSON to write.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    column: ColumnArg,
    /// Label CSV to score; without it the pipeline runs on --input.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Truth label CSV.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Write the pipeline labels here.
    #[arg(long)]
    segmentation: Option<PathBuf>,
    /// Comma-separated z levels for the tail comparison.
    #[arg(long)]
    z: Option<String>,
    /// Write per-state density curves to PREFIX_state0.csv and PREFIX_state1.csv.
    #[arg(long, value_name = "PREFIX")]
    kde_prefix: Option<PathBuf>,
    #[arg(long)]
    kde_points: Option<usize>,
    /// Replicate a Gaussian case.
    #[arg(long, conflicts_with_all = ["ar", "table"])]
    case: Option<u8>,
    /// Replicate an autoregressive scenario.
    #[arg(long, conflicts_with = "table")]
    ar: Option<usize>,
    /// Replicate all Gaussian cases.
    #[arg(long)]
    table: bool,
    /// Comma-separated weighting rules for replication.
    #[arg(long)]
    methods: Option<String>,
    #[arg(long)]
    reps: Option<usize>,
    #[command(flatten)]
    features: FeatureArgs,
    #[command(flatten)]
    cluster: ClusterArgs,
    #[arg(long)]
    seed: Option<u64>,
    /// JSON report to write; printed to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Replication means as a scenario by method CSV.
    #[arg(long)]
    table_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PpplotArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    column: ColumnArg,
    #[command(flatten)]
    tails: TailArgs,
    /// Geometric rate; default the observed event fraction.
    #[arg(long)]
    p: Option<f64>,
    /// P-P CSV to write.
    #[arg(long)]
    out: PathBuf,
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("REGIME_SEG_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("REGIME_SEG_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Run(e.to_string()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    let cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    match cli.command {
        Command::Simulate(a) => commands::simulate(&a, &cfg),
        Command::Segment(a) => commands::segment(&a, &cfg),
        Command::ExtractFeatures(a) => commands::extract(&a, &cfg),
        Command::Decode(a) => commands::decode(&a, &cfg),
        Command::Evaluate(a) => commands::evaluate(&a, &cfg),
        Command::Ppplot(a) => commands::ppplot(&a, &cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("regime-seg: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

//! `arseg` command-line front-end.

mod commands;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "arseg", version, about = "Change-points in the mean of series with AR noise")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a series from the benchmark design.
    Simulate(SimulateArgs),
    /// Robust lag-1 autocorrelation of a series.
    Rho(RhoArgs),
    /// Robust AR(p) coefficients of a series.
    Phi(PhiArgs),
    /// Estimate change-points end to end.
    Segment(SegmentArgs),
    /// Criterion path over the number of changes (and order).
    Select(SegmentArgs),
    /// Remove the artefacts decorrelation leaves next to each change.
    Postprocess(PostprocessArgs),
    /// Hausdorff distance between true and estimated change-points.
    Evaluate(EvaluateArgs),
    /// Monte-Carlo benchmark over seeded replicates.
    Bench(BenchArgs),
}

/// Comma-separated list of reals, e.g. `-1.2,-0.4`.
#[derive(Debug, Clone)]
pub struct RealList(pub Vec<f64>);

fn parse_reals(s: &str) -> Result<RealList, String> {
    if s.trim().is_empty() {
        return Ok(RealList(Vec::new()));
    }
    s.split(',')
        .map(|p| {
            let p = p.trim();
            p.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| format!("'{p}' is not a finite number"))
        })
        .collect::<Result<_, _>>()
        .map(RealList)
}

/// Comma-separated list of indices.
#[derive(Debug, Clone)]
pub struct IndexList(pub Vec<usize>);

fn parse_indices(s: &str) -> Result<IndexList, String> {
    if s.trim().is_empty() {
        return Ok(IndexList(Vec::new()));
    }
    s.split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("'{p}': {e}")))
        .collect::<Result<_, _>>()
        .map(IndexList)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DesignKind {
    Ar1,
    Arp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Gaussian,
    Cauchy,
}

#[derive(Args)]
pub struct DesignArgs {
    #[arg(long, value_enum, default_value = "ar1")]
    pub design: DesignKind,
    #[arg(long, default_value_t = 1600)]
    pub n: usize,
    /// AR(1) coefficient.
    #[arg(long, allow_hyphen_values = true)]
    pub rho: Option<f64>,
    /// AR(p) coefficients, comma separated.
    #[arg(long, value_parser = parse_reals, allow_hyphen_values = true)]
    pub phi: Option<RealList>,
    #[arg(long, default_value_t = 0.1)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub design: DesignArgs,
    /// Replicate stream within the seed.
    #[arg(long, default_value_t = 0)]
    pub stream: u64,
    #[arg(long, value_enum, default_value = "gaussian")]
    pub family: Family,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Args)]
pub struct InputArgs {
    /// CSV file with a single `value` column.
    #[arg(long, short)]
    pub input: PathBuf,
    /// Number of leading pre-sample values in the file.
    #[arg(long)]
    pub presample: Option<usize>,
    /// Read the pre-sample length from a `truth.json` written by `simulate`.
    #[arg(long, conflicts_with = "presample")]
    pub truth: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum RhoKind {
    MedianDiff,
    Cauchy,
    MaGenton,
}

#[derive(Args)]
pub struct RhoArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum, default_value = "median-diff")]
    pub method: RhoKind,
    /// Also report the Monte-Carlo variance and the zero-correlation test
    /// statistic under this AR(1) coefficient.
    #[arg(long, allow_hyphen_values = true)]
    pub diagnostic_rho: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub diagnostic_sigma: f64,
    #[arg(long, default_value_t = 50)]
    pub truncation_lag: usize,
    #[arg(long, default_value_t = 100_000)]
    pub mc_reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args)]
pub struct PhiArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, short, default_value_t = 1)]
    pub p: usize,
    /// Ridge parameter; by default 0 with a retry at 1/n if singular.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub qn_constant: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SegMethod {
    /// No decorrelation.
    Ls,
    /// Robust estimate of the coefficients.
    Robust,
    /// Robust estimate, post-processed.
    RobustP,
    /// Known coefficients (`--rho` or `--phi`).
    Oracle,
    /// Known coefficients, post-processed.
    OracleP,
    /// Joint choice of the order and the number of changes, post-processed.
    Joint,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Selection {
    Mbic,
    Beta,
}

#[derive(Args)]
pub struct SegmentArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum, default_value = "robust-p")]
    pub method: SegMethod,
    /// AR order for robust estimation.
    #[arg(long, short, default_value_t = 1)]
    pub p: usize,
    /// Use the Cauchy-innovation variant of the AR(1) estimator.
    #[arg(long)]
    pub cauchy: bool,
    #[arg(long, allow_hyphen_values = true)]
    pub rho: Option<f64>,
    #[arg(long, value_parser = parse_reals, allow_hyphen_values = true)]
    pub phi: Option<RealList>,
    #[arg(long, value_enum, default_value = "mbic")]
    pub selection: Selection,
    #[arg(long, default_value_t = 0.25)]
    pub beta: f64,
    #[arg(long, default_value_t = 75)]
    pub m_max: usize,
    /// Largest order tried by `--method joint`.
    #[arg(long, default_value_t = 3)]
    pub p_max: usize,
    /// Minimum segment length.
    #[arg(long, default_value_t = 1)]
    pub min_seg_len: usize,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub qn_constant: Option<f64>,
    /// Write the report here instead of stdout.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Args)]
pub struct PostprocessArgs {
    #[arg(long, value_parser = parse_indices)]
    pub changepoints: IndexList,
    #[arg(long)]
    pub n: usize,
    #[arg(long, short, default_value_t = 1)]
    pub p: usize,
}

#[derive(Args)]
pub struct EvaluateArgs {
    /// `truth.json` from `simulate`.
    #[arg(long, required_unless_present = "true_changepoints")]
    pub truth: Option<PathBuf>,
    #[arg(long, value_parser = parse_indices, requires = "n")]
    pub true_changepoints: Option<IndexList>,
    /// Report written by `segment`.
    #[arg(long, required_unless_present = "changepoints")]
    pub estimate: Option<PathBuf>,
    #[arg(long, value_parser = parse_indices)]
    pub changepoints: Option<IndexList>,
    /// Post-sample length (taken from the truth file when given).
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub design: DesignArgs,
    #[arg(long, default_value_t = 100)]
    pub reps: usize,
    /// Comma-separated subset of ls, robust, robust-p, oracle, oracle-p.
    #[arg(long, default_value = "ls,robust,robust-p,oracle,oracle-p")]
    pub methods: String,
    #[arg(long, default_value_t = 15)]
    pub m_max: usize,
    #[arg(long, default_value_t = 1)]
    pub min_seg_len: usize,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => commands::simulate(a),
        Command::Rho(a) => commands::rho(a),
        Command::Phi(a) => commands::phi(a),
        Command::Segment(a) => commands::segment(a, false),
        Command::Select(a) => commands::segment(a, true),
        Command::Postprocess(a) => commands::postprocess(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Bench(a) => commands::bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", io::error_json(&e));
            ExitCode::from(1)
        }
    }
}

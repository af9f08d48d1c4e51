use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mixlaw_core::Method;

/// Fit per-family mixture scaling laws and plan sampling ratios.
///
/// Model sizes are in millions of non-embedding parameters, token budgets in
/// billions and losses in nats per token.
#[derive(Debug, Parser)]
#[command(name = "mixlaw", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit joint-law coefficients from run records.
    Fit(FitArgs),
    /// Predict per-family and total losses for a mixture.
    Predict(PredictArgs),
    /// Solve for the loss-minimizing family mixture.
    Optimize(OptimizeArgs),
    /// Check that a family's loss depends only on its own ratio.
    Diagnose(DiagnoseArgs),
    /// Expand a family mixture into a per-language schedule.
    Plan(PlanArgs),
    /// Generate synthetic run records from joint-law coefficients.
    Simulate(SimulateArgs),
    /// Compare baseline and optimal mixtures.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Exact,
    Zero,
    First,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Exact => Method::Exact,
            MethodArg::Zero => Method::ZeroOrder,
            MethodArg::First => Method::FirstOrder,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PreferenceMode {
    /// Every family weighted 1.
    Unweighted,
    /// Each family weighted by the inverse of its mono-family loss.
    Normalized,
    /// Weights read from `--weights`.
    File,
}

#[derive(Debug, Args)]
pub struct Output {
    /// Output file; written atomically. Defaults to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct ParamsArg {
    /// Joint-law coefficients (JSON). Defaults to the bundled reference set.
    #[arg(long)]
    pub params: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PreferenceArgs {
    #[arg(long, value_enum, default_value_t = PreferenceMode::Unweighted)]
    pub preference: PreferenceMode,

    /// JSON object of family weights, used with `--preference file`.
    #[arg(long)]
    pub weights: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Run records as JSON Lines; `-` reads stdin.
    #[arg(long)]
    pub records: PathBuf,

    /// Families to fit. Defaults to every family with a reported loss.
    #[arg(long, allow_hyphen_values = true, value_delimiter = ',')]
    pub family: Vec<String>,

    #[arg(long, default_value_t = mixlaw_core::fitting::DEFAULT_HUBER_DELTA)]
    pub delta: f64,

    /// Seed for the extra random starts.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Extra random starts on top of the default grid.
    #[arg(long, default_value_t = 0)]
    pub random_starts: usize,

    /// Fit the ratio exponent first, then the size terms.
    #[arg(long)]
    pub two_stage: bool,

    /// Fit on the highest-loss share and report error on this fraction.
    #[arg(long)]
    pub holdout: Option<f64>,

    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[command(flatten)]
    pub params: ParamsArg,

    /// Model size, millions of parameters.
    #[arg(long, allow_hyphen_values = true)]
    pub n: f64,

    /// Token budget, billions.
    #[arg(long, allow_hyphen_values = true)]
    pub d: f64,

    /// `uniform` or a JSON object of family ratios.
    #[arg(long, default_value = "uniform")]
    pub mixture: String,

    #[command(flatten)]
    pub prefs: PreferenceArgs,

    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub params: ParamsArg,

    #[arg(long, allow_hyphen_values = true, default_value_t = 397.0)]
    pub n: f64,

    #[arg(long, allow_hyphen_values = true, default_value_t = 50.0)]
    pub d: f64,

    #[arg(long, value_enum, default_value_t = MethodArg::Exact)]
    pub method: MethodArg,

    #[command(flatten)]
    pub prefs: PreferenceArgs,

    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    /// Run records as JSON Lines; `-` reads stdin.
    #[arg(long)]
    pub records: PathBuf,

    /// Family whose ratio is held fixed.
    #[arg(long)]
    pub family: String,

    /// Family whose ratio varies. Defaults to every other family.
    #[arg(long)]
    pub complement: Option<String>,

    #[arg(long, default_value_t = mixlaw_core::diagnostics::DEFAULT_REFERENCE_RATIO)]
    pub reference_ratio: f64,

    #[arg(long, default_value_t = mixlaw_core::diagnostics::DEFAULT_SPREAD_THRESHOLD)]
    pub threshold: f64,

    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    /// Corpus manifest (JSON). Defaults to the bundled manifest.
    #[arg(long)]
    pub manifest: Option<PathBuf>,

    /// `uniform` or a JSON object of family ratios.
    #[arg(long, default_value = "uniform")]
    pub mixture: String,

    /// Within-family smoothing exponent.
    #[arg(long, default_value_t = mixlaw_core::corpus::DEFAULT_WITHIN_FAMILY_ALPHA)]
    pub alpha: f64,

    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub params: ParamsArg,

    /// Model sizes, millions of parameters.
    #[arg(long, allow_hyphen_values = true, value_delimiter = ',', default_values_t = [85.0, 397.0, 810.0, 1200.0])]
    pub n: Vec<f64>,

    /// Token budgets, billions.
    #[arg(long, allow_hyphen_values = true, value_delimiter = ',', default_values_t = [25.0, 50.0, 100.0])]
    pub d: Vec<f64>,

    /// Ratios given to each target family in turn.
    #[arg(long, allow_hyphen_values = true, value_delimiter = ',', default_values_t = [0.25, 0.5, 1.0])]
    pub ratios: Vec<f64>,

    /// Standard deviation of the log-normal noise factor.
    #[arg(long, default_value_t = 0.0)]
    pub sigma: f64,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Families to include. Defaults to all families in the params file.
    #[arg(long, allow_hyphen_values = true, value_delimiter = ',')]
    pub families: Vec<String>,

    /// Output file for JSON Lines records. Defaults to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub params: ParamsArg,

    /// Corpus manifest for the token-count baselines.
    #[arg(long)]
    pub manifest: Option<PathBuf>,

    #[arg(long, allow_hyphen_values = true, default_value_t = 85.0)]
    pub n: f64,

    #[arg(long, allow_hyphen_values = true, default_value_t = 50.0)]
    pub d: f64,

    /// Smoothing exponent of the smoothed baseline.
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,

    /// Extra mixture to include, as a JSON object of family ratios.
    #[arg(long)]
    pub mixture: Option<String>,

    #[command(flatten)]
    pub prefs: PreferenceArgs,

    #[command(flatten)]
    pub output: Output,
}

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Default seed when neither `--seed` nor the environment variable is set.
pub const DEFAULT_SEED: u64 = 42;
pub const SEED_ENV: &str = "STEIN_CHAOS_SEED";

#[derive(Debug, Parser)]
#[command(name = "stein-chaos", version, about = "Stein's method bounds for normal approximation and Wiener chaos functionals")]
pub struct Cli {
    /// Worker threads for sampling and quadrature (results do not depend on it).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Write the report here instead of standard output.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Stein equation solutions and their boundedness constants.
    #[command(name = "stein-eq", subcommand)]
    SteinEq(SteinEqCommand),

    /// Same as `stein-eq verify-constants`.
    VerifyConstants(VerifyArgs),

    /// Distance of a sample or a known density to N(0, 1).
    Distance(DistanceArgs),

    /// Bounds on the distance to N(0, 1) with empirical comparison.
    #[command(subcommand)]
    Bound(BoundCommand),

    /// Chaos functional utilities.
    #[command(subcommand)]
    Chaos(ChaosCommand),

    /// Bound and empirical distance tables versus n, as CSV.
    EmitCurve(CurveArgs),
}

#[derive(Debug, Subcommand)]
pub enum SteinEqCommand {
    /// Tabulate f_h, f_h' and the ODE residual; CSV columns w,f,fprime,residual.
    Eval(EvalArgs),
    /// Certify the boundedness constants of f_h on a dense grid; CSV output.
    VerifyConstants(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Test function: indicator:x, smoothed:x,eps, identity, abs:c, sin, clip:a,
    /// tanh, cos, interval:a,b, constant:c.
    #[arg(long = "h", value_name = "H")]
    pub h: String,
    #[arg(long, default_value_t = -5.0, allow_hyphen_values = true)]
    pub from: f64,
    #[arg(long, default_value_t = 5.0, allow_hyphen_values = true)]
    pub to: f64,
    #[arg(long, default_value_t = 0.5)]
    pub step: f64,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// `all` for the bundled families, or one test function (see `stein-eq eval --help`).
    #[arg(long, default_value = "all")]
    pub family: String,
    /// Grid spacing on [-10, 10]; at most 1e-3.
    #[arg(long, default_value_t = 1e-3)]
    pub grid_step: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    #[value(alias = "w")]
    Wasserstein,
    #[value(alias = "ks", alias = "k")]
    Kolmogorov,
    #[value(alias = "tv")]
    TotalVariation,
}

impl From<MetricArg> for stein_chaos::Metric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Wasserstein => stein_chaos::Metric::Wasserstein,
            MetricArg::Kolmogorov => stein_chaos::Metric::Kolmogorov,
            MetricArg::TotalVariation => stein_chaos::Metric::TotalVariation,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DensityArg {
    Normal,
    ShiftedNormal,
    Chi2,
}

#[derive(Debug, Args)]
pub struct DistanceArgs {
    /// Sample file, one real per line (`#` comments allowed).
    #[arg(long, conflicts_with = "density")]
    pub input: Option<PathBuf>,
    /// Known density instead of a sample (total variation only).
    #[arg(long, value_enum, required_unless_present = "input")]
    pub density: Option<DensityArg>,
    /// Degrees of freedom of the standardized chi-square density.
    #[arg(long)]
    pub n: Option<u32>,
    /// Shift of the shifted normal density.
    #[arg(long, allow_hyphen_values = true)]
    pub delta: Option<f64>,
    #[arg(long, value_enum)]
    pub metric: MetricArg,
    /// Bootstrap replicates for a standard error (0 disables).
    #[arg(long, default_value_t = 0)]
    pub bootstrap: usize,
    #[command(flatten)]
    pub seed: SeedArgs,
}

#[derive(Debug, Args, Clone, Copy)]
pub struct SeedArgs {
    /// Random seed; falls back to $STEIN_CHAOS_SEED, then 42.
    #[arg(long, env = SEED_ENV, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SamplingArgs {
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[command(flatten)]
    pub seed: SeedArgs,
    /// Exit with status 2 if the empirical distance exceeds the bound by more
    /// than `assert_sigmas` standard errors.
    #[arg(long = "assert")]
    pub assert: bool,
    /// Tolerance override `name=value`; may be repeated.
    #[arg(long = "tol", value_name = "NAME=VALUE")]
    pub tolerances: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum BoundCommand {
    /// W = sum of independent summands from a JSON model: d_W <= 3 sum E|X_i|^3.
    IndepSum(IndepSumArgs),
    /// W = sum_i psi(Z_i)/sqrt(n) for a builtin psi: theta E|1 - T|.
    GaussianFunctional(GaussianArgs),
    /// Centered chaos functional from JSON: theta E|1 - Gamma|.
    Chaos(ChaosBoundArgs),
}

#[derive(Debug, Args)]
pub struct IndepSumArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub sampling: SamplingArgs,
}

#[derive(Debug, Args)]
pub struct GaussianArgs {
    /// identity, chi2 or hermite:k, optionally prefixed by `builtin:`.
    #[arg(long, default_value = "builtin:chi2")]
    pub psi: String,
    /// Number of independent summands.
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    #[arg(long, value_enum, default_value = "wasserstein")]
    pub metric: MetricArg,
    #[command(flatten)]
    pub sampling: SamplingArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormalizationArg {
    Keep,
    Normalize,
    Reject,
}

#[derive(Debug, Args)]
pub struct ChaosBoundArgs {
    #[arg(long)]
    pub functional: PathBuf,
    #[arg(long, value_enum, default_value = "wasserstein")]
    pub metric: MetricArg,
    /// Handling of inputs whose variance is not one.
    #[arg(long, value_enum, default_value = "keep")]
    pub normalization: NormalizationArg,
    #[command(flatten)]
    pub sampling: SamplingArgs,
}

#[derive(Debug, Subcommand)]
pub enum ChaosCommand {
    /// Check the exact chaos identities on a functional; exit 2 on failure.
    Check(ChaosCheckArgs),
}

#[derive(Debug, Args)]
pub struct ChaosCheckArgs {
    #[arg(long)]
    pub functional: PathBuf,
    #[command(flatten)]
    pub seed: SeedArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CurveFamilyArg {
    #[value(name = "chi2_bounds", alias = "chi2")]
    Chi2Bounds,
    #[value(name = "indep_sum_bounds", alias = "indep-sum")]
    IndepSumBounds,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[arg(long, value_enum)]
    pub family: CurveFamilyArg,
    /// Comma-separated list of n.
    #[arg(long = "n", value_delimiter = ',', required = true)]
    pub n_values: Vec<usize>,
    /// Draws per row for the empirical columns (0 leaves them empty).
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[command(flatten)]
    pub seed: SeedArgs,
}

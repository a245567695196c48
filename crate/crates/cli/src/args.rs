use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nestces::{GroupBy, LmOptions, NoiseKind, ReportFormat, RhoGrid, Scale, Segment, SigmaSource, SurfaceFormat};

#[derive(Debug, Parser)]
#[command(
    name = "nestces",
    version,
    about = "Estimate the nested three-input CES production function",
    long_about = "Estimate V = A·[δ·(δ₁K^(−ρ₁) + (1−δ₁)L^(−ρ₁))^(ρ/ρ₁) + (1−δ)·(K/L)^(−ρ)]^(−1/ρ) \
                  from output,capital,labor CSV data.\n\n\
                  Exit status: 0 success, 1 usage or input error, 2 fit completed without converging."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit free parameters by Levenberg-Marquardt and print a fit report
    Fit(FitArgs),
    /// Grid search over (rho1, rho), fitting A, delta, delta1 at every cell
    Grid(GridArgs),
    /// Generate a seeded synthetic dataset as CSV
    Simulate(SimulateArgs),
    /// Total output per state and/or industry
    Aggregate(AggregateArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ScaleArg {
    /// Residuals V - V̂
    Levels,
    /// Residuals ln V - ln V̂
    Logs,
}

impl From<ScaleArg> for Scale {
    fn from(s: ScaleArg) -> Self {
        match s {
            ScaleArg::Levels => Scale::Levels,
            ScaleArg::Logs => Scale::Logs,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Text,
    Csv,
    Json,
}

impl From<FormatArg> for ReportFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Text => ReportFormat::Text,
            FormatArg::Csv => ReportFormat::Csv,
            FormatArg::Json => ReportFormat::Json,
        }
    }
}

#[derive(Debug, Args)]
pub struct LmArgs {
    /// Iteration cap; every trial step, accepted or rejected, counts
    #[arg(long, default_value_t = 200)]
    pub max_iterations: usize,
    /// Initial damping
    #[arg(long, default_value_t = 1e-3)]
    pub lambda_init: f64,
    /// Damping multiplier on rejection (divisor on acceptance)
    #[arg(long, default_value_t = 10.0)]
    pub lambda_factor: f64,
    /// Stop when the relative RSS decrease falls below this
    #[arg(long, default_value_t = 1e-10)]
    pub rss_rel_tol: f64,
    /// Stop when the infinity norm of J'r falls below this
    #[arg(long, default_value_t = 1e-8)]
    pub grad_tol: f64,
    /// Stop when the step is this small relative to the parameters
    #[arg(long, default_value_t = 1e-12)]
    pub step_tol: f64,
    /// Give up when damping exceeds this
    #[arg(long, default_value_t = 1e12)]
    pub lambda_max: f64,
}

impl LmArgs {
    pub fn options(&self) -> Result<LmOptions, String> {
        let o = LmOptions {
            max_iterations: self.max_iterations,
            lambda_init: self.lambda_init,
            lambda_factor: self.lambda_factor,
            rss_rel_tol: self.rss_rel_tol,
            grad_tol: self.grad_tol,
            step_tol: self.step_tol,
            lambda_max: self.lambda_max,
        };
        o.validate()?;
        Ok(o)
    }
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Residual scale
    #[arg(long, value_enum, default_value = "levels")]
    pub scale: ScaleArg,
    /// Report format
    #[arg(long, value_enum, default_value = "text")]
    pub format: FormatArg,
    /// Tolerance on |delta-1| and |delta1-1| for the purely capital-intensive class
    #[arg(long, default_value_t = 0.2)]
    pub tolerance: f64,
    /// Industry code shown in the report
    #[arg(long, default_value = "-")]
    pub industry: String,
    /// Rho-set label shown in the report (defaults to the preset name, or "custom")
    #[arg(long)]
    pub rho_set: Option<String>,
}

/// `NAME=VALUE` for one of A, delta, delta1, rho, rho1.
#[derive(Debug, Clone, Copy)]
pub struct Assignment {
    pub id: nestces::ParamId,
    pub value: f64,
}

pub fn parse_assignment(s: &str) -> Result<Assignment, String> {
    let (name, value) = s.split_once('=').ok_or_else(|| format!("expected NAME=VALUE, got `{s}`"))?;
    let id = nestces::ParamId::parse(name.trim())
        .ok_or_else(|| format!("unknown parameter `{name}` (expected A, delta, delta1, rho, rho1)"))?;
    let value = value
        .trim()
        .parse::<f64>()
        .map_err(|e| format!("`{value}`: {e}"))?;
    if !value.is_finite() {
        return Err(format!("`{value}` is not finite"));
    }
    Ok(Assignment { id, value })
}

pub fn parse_segment(s: &str) -> Result<Segment, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, c] = parts[..] else {
        return Err(format!("expected start:stop:step, got `{s}`"));
    };
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}"));
    Segment::new(num(a)?, num(b)?, num(c)?).map_err(|e| e.to_string())
}

pub fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("expected low:high, got `{s}`"))?;
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}"));
    Ok((num(a)?, num(b)?))
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Input CSV with columns output,capital,labor
    #[arg(long)]
    pub input: PathBuf,
    /// Hold a parameter fixed, e.g. --fix rho=0.5 (repeatable)
    #[arg(long, value_parser = parse_assignment, allow_hyphen_values = true)]
    pub fix: Vec<Assignment>,
    /// Starting value for a free parameter (repeatable). Defaults: rho = rho1 = 0.5,
    /// delta = delta1 = 0.5, A = mean(V) / mean(V̂ at A = 1)
    #[arg(long, value_parser = parse_assignment, allow_hyphen_values = true)]
    pub init: Vec<Assignment>,
    #[command(flatten)]
    pub report: ReportArgs,
    #[command(flatten)]
    pub lm: LmArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Preset {
    /// (-0.9, 1.25, 0.64), (1.68, 1.72, 0.88), (1.86, 10.00, 0.94)
    #[value(name = "rhoVec1")]
    RhoVec1,
    /// (-1, 1, 0.40), (1.68, 2.00, 0.64), (10.00, 11.51, 0.88)
    #[value(name = "rhoVec2")]
    RhoVec2,
}

impl Preset {
    pub fn grid(self) -> RhoGrid {
        match self {
            Preset::RhoVec1 => RhoGrid::rho_vec1(),
            Preset::RhoVec2 => RhoGrid::rho_vec2(),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Preset::RhoVec1 => "rhoVec_1",
            Preset::RhoVec2 => "rhoVec_2",
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SigmaArg {
    /// sigma = 1/(1+rho)
    Outer,
    /// sigma = 1/(1+rho1)
    Inner,
}

impl From<SigmaArg> for SigmaSource {
    fn from(s: SigmaArg) -> Self {
        match s {
            SigmaArg::Outer => SigmaSource::Outer,
            SigmaArg::Inner => SigmaSource::Inner,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SurfaceFormatArg {
    /// rho1,rho,neg_ssr,status rows
    Long,
    /// rho1 rows by rho columns
    Matrix,
}

impl From<SurfaceFormatArg> for SurfaceFormat {
    fn from(s: SurfaceFormatArg) -> Self {
        match s {
            SurfaceFormatArg::Long => SurfaceFormat::LongCsv,
            SurfaceFormatArg::Matrix => SurfaceFormat::Matrix,
        }
    }
}

#[derive(Debug, Args)]
#[command(after_help = "Grids: with neither --preset nor --rho/--rho1, both grids are rhoVec1. \
    --preset supplies the base segments for both grids and --rho/--rho1 add segments to it.\n\
    Presets: rhoVec1 = (-0.9, 1.25, 0.64), (1.68, 1.72, 0.88), (1.86, 10.00, 0.94); \
    rhoVec2 = (-1, 1, 0.40), (1.68, 2.00, 0.64), (10.00, 11.51, 0.88), read as start:stop:step.")]
pub struct GridArgs {
    /// Input CSV with columns output,capital,labor
    #[arg(long)]
    pub input: PathBuf,
    /// Named grid for both rho and rho1
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Segment of the rho grid as start:stop:step (repeatable)
    #[arg(long, value_parser = parse_segment, allow_hyphen_values = true)]
    pub rho: Vec<Segment>,
    /// Segment of the rho1 grid as start:stop:step (repeatable)
    #[arg(long, value_parser = parse_segment, allow_hyphen_values = true)]
    pub rho1: Vec<Segment>,
    /// Which substitution parameter the sigma in [0, 1] selection rule uses
    #[arg(long, value_enum, default_value = "outer")]
    pub sigma_source: SigmaArg,
    /// Write the negative-SSR surface to this file
    #[arg(long)]
    pub surface: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "long")]
    pub surface_format: SurfaceFormatArg,
    /// Fit cells in parallel. Disables warm starts; output is identical to --cold-start
    #[arg(long)]
    pub parallel: bool,
    /// Start every cell from the default initial values instead of its best fitted neighbour
    #[arg(long)]
    pub cold_start: bool,
    #[command(flatten)]
    pub report: ReportArgs,
    #[command(flatten)]
    pub lm: LmArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum NoiseArg {
    /// V = V̂·exp(e)
    Lognormal,
    /// V = V̂ + e
    Additive,
}

impl From<NoiseArg> for NoiseKind {
    fn from(n: NoiseArg) -> Self {
        match n {
            NoiseArg::Lognormal => NoiseKind::LogNormal,
            NoiseArg::Additive => NoiseKind::Additive,
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long = "A", alias = "a", default_value_t = 2.0)]
    pub efficiency: f64,
    #[arg(long, default_value_t = 0.6, allow_hyphen_values = true)]
    pub delta: f64,
    #[arg(long, default_value_t = 0.4, allow_hyphen_values = true)]
    pub delta1: f64,
    #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
    pub rho: f64,
    #[arg(long, default_value_t = 1.2, allow_hyphen_values = true)]
    pub rho1: f64,
    /// Number of observations
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Capital range low:high, sampled log-uniformly
    #[arg(long, value_parser = parse_range, default_value = "0.5:50")]
    pub k_range: (f64, f64),
    /// Labor range low:high, sampled log-uniformly
    #[arg(long, value_parser = parse_range, default_value = "0.5:50")]
    pub l_range: (f64, f64),
    /// Standard deviation of the noise term
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, value_enum, default_value = "lognormal")]
    pub noise_kind: NoiseArg,
    /// Write to this file instead of standard output
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum GroupArg {
    State,
    Industry,
    StateIndustry,
}

impl From<GroupArg> for GroupBy {
    fn from(g: GroupArg) -> Self {
        match g {
            GroupArg::State => GroupBy::State,
            GroupArg::Industry => GroupBy::Industry,
            GroupArg::StateIndustry => GroupBy::StateAndIndustry,
        }
    }
}

#[derive(Debug, Args)]
pub struct AggregateArgs {
    /// Input CSV with the grouping column(s)
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "state")]
    pub by: GroupArg,
    #[arg(long, value_enum, default_value = "text")]
    pub format: FormatArg,
}

//! `las`: density grids, normalising-constant bounds, fits, simulation
//! studies and z-score analysis for log-adjusted shrinkage priors.

mod commands;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use las_core::{PriorSpec, RunConfig, TauPrior};

use crate::error::CliError;

#[derive(Parser, Debug)]
#[command(name = "las", version, about = "Log-adjusted shrinkage priors for sparse normal means")]
struct Cli {
    /// Worker threads for replications and methods; 1 disables parallelism.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Write here instead of standard output.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate a prior density or the iterated logarithm on a grid.
    Density(DensityArgs),
    /// Certified lower and upper bounds on the normalising constant C(gamma).
    Normconst(NormconstArgs),
    /// Fit one dataset and report per-coordinate posterior summaries.
    Fit(FitArgs),
    /// Run a simulation study over a scenario grid.
    Simulate(SimulateArgs),
    /// Shrink a file of z-scores (or t-statistics) and rank by |z|.
    Analyze(AnalyzeArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Las,
    Ilas,
    ScaledBeta,
    Horseshoe,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TauArg {
    HalfCauchy,
    InverseGamma,
    Fixed,
}

#[derive(Args, Debug, Clone)]
pub struct PriorArgs {
    #[arg(long, value_enum, default_value_t = VariantArg::Las)]
    pub variant: VariantArg,
    /// Spike exponent; defaults to 1/n when there is data.
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    pub b: f64,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    /// Order of the iterated logarithm.
    #[arg(long = "L", visible_alias = "levels", default_value_t = 1)]
    pub levels: u32,
    /// Learn gamma by exact Metropolis-Hastings (LAS with b = 0 only).
    #[arg(long)]
    pub adaptive_gamma: bool,
    #[arg(long, value_enum, default_value_t = TauArg::HalfCauchy)]
    pub tau_prior: TauArg,
    /// Half-Cauchy scale on sqrt(tau) (default 1/n), or inverse-gamma scale (default 1).
    #[arg(long)]
    pub tau_scale: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub tau_shape: f64,
    #[arg(long, default_value_t = 1.0)]
    pub tau_value: f64,
}

impl PriorArgs {
    /// Builds and validates the spec; `n` supplies the data-driven defaults.
    pub fn spec(&self, n: Option<usize>) -> Result<PriorSpec, CliError> {
        let default_a = n.map(|n| 1.0 / n as f64);
        let a = self
            .a
            .or(default_a)
            .ok_or_else(|| CliError::Usage("--a is required when there is no data to set a = 1/n".into()))?;
        let mut spec = match self.variant {
            VariantArg::Las => PriorSpec::las(a, self.gamma).with_b(self.b),
            VariantArg::Ilas => PriorSpec::ilas(a, self.gamma, self.levels).with_b(self.b),
            VariantArg::ScaledBeta => PriorSpec::scaled_beta(a, self.b),
            VariantArg::Horseshoe => PriorSpec::horseshoe(),
        };
        spec.levels = self.levels;
        spec.gamma_adaptive = self.adaptive_gamma;
        spec.tau_prior = match self.tau_prior {
            TauArg::HalfCauchy => {
                let scale = self.tau_scale.or(default_a).unwrap_or(1.0);
                TauPrior::HalfCauchyOnRoot { scale }
            }
            TauArg::InverseGamma => TauPrior::InverseGamma { shape: self.tau_shape, scale: self.tau_scale.unwrap_or(1.0) },
            TauArg::Fixed => TauPrior::Fixed { value: self.tau_value },
        };
        spec.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(spec)
    }
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    #[arg(long, default_value_t = 2000)]
    pub iterations: usize,
    #[arg(long, default_value_t = 1000)]
    pub burn_in: usize,
    #[arg(long, default_value_t = 1)]
    pub thin: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Shape and rate of the gamma prior on gamma.
    #[arg(long, default_value_t = 1.0)]
    pub a0_gamma: f64,
    #[arg(long, default_value_t = 1.0)]
    pub b0_gamma: f64,
    #[arg(long, default_value_t = 16)]
    pub k_init: u32,
    #[arg(long, default_value_t = 1024)]
    pub k_max: u32,
}

impl RunArgs {
    pub fn config(&self) -> Result<RunConfig, CliError> {
        let cfg = RunConfig {
            iterations: self.iterations,
            burn_in: self.burn_in,
            master_seed: self.seed,
            a0_gamma: self.a0_gamma,
            b0_gamma: self.b0_gamma,
            k_init: self.k_init,
            k_max: self.k_max,
            thin: self.thin,
        };
        cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(cfg)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum GridVar {
    Kappa,
    Theta,
    Iterlog,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Spacing {
    Linear,
    Log,
    /// Even in logit(x); clusters points at both ends of (0, 1).
    Logit,
}

#[derive(Args, Debug)]
pub struct DensityArgs {
    #[arg(long = "var", value_enum)]
    pub var: GridVar,
    #[command(flatten)]
    pub prior: PriorArgs,
    /// Evaluate at this single point instead of a grid.
    #[arg(long)]
    pub x: Option<f64>,
    #[arg(long)]
    pub lo: Option<f64>,
    #[arg(long)]
    pub hi: Option<f64>,
    #[arg(long, default_value_t = 512)]
    pub points: usize,
    /// Defaults: logit for kappa, linear for theta, log for iterlog.
    #[arg(long, value_enum)]
    pub spacing: Option<Spacing>,
}

#[derive(Args, Debug)]
pub struct NormconstArgs {
    #[arg(long)]
    pub gamma: f64,
    #[arg(long)]
    pub a: f64,
    /// Grid resolution; the sums use N = round(K^3) points.
    #[arg(long = "K", visible_alias = "k")]
    pub k: f64,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    /// Observations: one value per line, or CSV with a header naming --column.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = "y")]
    pub column: String,
    #[command(flatten)]
    pub prior: PriorArgs,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Comma-separated scenario kinds (I, II).
    #[arg(long, value_delimiter = ',', default_value = "I")]
    pub scenario: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "0.2")]
    pub omega: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "9")]
    pub c: Vec<f64>,
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    #[arg(long, default_value_t = 100)]
    pub reps: usize,
    /// Comma-separated methods: las, alas, ilas, ilas<L>, hs.
    #[arg(long, value_delimiter = ',', default_value = "las,ilas,hs")]
    pub methods: Vec<String>,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    /// z-scores: one value per line, or CSV with a `z` column.
    #[arg(long, required_unless_present = "t_input", conflicts_with = "t_input")]
    pub input: Option<PathBuf>,
    /// t-statistics, mapped to z by Phi^{-1}(F_df(t)); needs --df.
    #[arg(long, requires = "df")]
    pub t_input: Option<PathBuf>,
    #[arg(long)]
    pub df: Option<f64>,
    /// Column to read from CSV input; defaults to `z` or `t`.
    #[arg(long)]
    pub column: Option<String>,
    #[arg(long, value_delimiter = ',', default_value = "las")]
    pub methods: Vec<String>,
    #[command(flatten)]
    pub run: RunArgs,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("las: {e}");
            e.exit_code()
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let threads = cli.threads.unwrap_or(0);
    if cli.threads == Some(0) {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let out = output::Sink::new(cli.output, cli.format);
    pool.install(|| match &cli.command {
        Command::Density(args) => commands::density(args, &out),
        Command::Normconst(args) => commands::normconst(args, &out),
        Command::Fit(args) => commands::fit(args, &out),
        Command::Simulate(args) => commands::simulate(args, &out),
        Command::Analyze(args) => commands::analyze(args, &out),
    })
}

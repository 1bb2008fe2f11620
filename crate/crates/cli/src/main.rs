//! `ergm-lasso` command-line tool.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ergm_lasso::estimator::Preconditioner;

/// Seed used when `--seed` is not given.
pub const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Parser, Debug)]
#[command(name = "ergm-lasso", version, about = "LASSO variable selection for exponential random graph models")]
struct Cli {
    /// More log output (repeat for debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Standardize, fit the unpenalized model and report SEs, p-values and AIC.
    Fit(FitArgs),
    /// Coefficient path over a penalty grid plus the importance ranking.
    Path(PathArgs),
    /// Path, ranking, threshold walk and refit of the selected model.
    Select(SelectArgs),
    /// Draw networks from a study setup or from a given model.
    Simulate(SimulateArgs),
    /// Exact quantities by enumeration (at most 7 nodes).
    Exact(ExactArgs),
    /// Write the model spec with scale factors from the Erdős–Rényi reference.
    Standardize(StandardizeArgs),
}

#[derive(Args, Debug, Clone)]
pub struct InputArgs {
    /// Edge list of the observed network.
    #[arg(long)]
    pub edges: PathBuf,
    /// Node attribute CSV (first column: node id).
    #[arg(long)]
    pub attrs: Option<PathBuf>,
    /// JSON model spec.
    #[arg(long)]
    pub spec: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct OutputArgs {
    /// Output directory (created if absent).
    #[arg(long)]
    pub out: PathBuf,
    /// Allow writing into a non-empty output directory.
    #[arg(long)]
    pub force: bool,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum PrecondArg {
    Scalar,
    Diagonal,
    EdgesResidual,
}

impl From<PrecondArg> for Preconditioner {
    fn from(p: PrecondArg) -> Self {
        match p {
            PrecondArg::Scalar => Preconditioner::Scalar,
            PrecondArg::Diagonal => Preconditioner::Diagonal,
            PrecondArg::EdgesResidual => Preconditioner::EdgesResidual,
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct TuningArgs {
    /// Erdős–Rényi draws used for standardization.
    #[arg(long, default_value_t = ergm_lasso::statistics::DEFAULT_STANDARDIZE_DRAWS)]
    pub standardize_draws: usize,
    /// Skip standardization (use the scales in the model spec file).
    #[arg(long)]
    pub no_standardize: bool,
    /// Draws per SGD iteration.
    #[arg(long)]
    pub m_per_iter: Option<usize>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Convergence tolerance on the window-averaged step.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Base learning rate.
    #[arg(long)]
    pub eta0: Option<f64>,
    /// Toggle attempts between retained draws (default: one sweep).
    #[arg(long)]
    pub thin: Option<usize>,
    /// Parallel MCMC chains per sample.
    #[arg(long)]
    pub chains: Option<usize>,
    #[arg(long, value_enum)]
    pub preconditioner: Option<PrecondArg>,
    /// Draws for the covariance behind the standard errors.
    #[arg(long)]
    pub cov_draws: Option<usize>,
    /// Grid points of the log-likelihood bridge.
    #[arg(long)]
    pub bridge_points: Option<usize>,
    /// Draws per bridge grid point.
    #[arg(long)]
    pub bridge_draws: Option<usize>,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[command(flatten)]
    pub tuning: TuningArgs,
}

#[derive(Args, Debug)]
pub struct PathArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[command(flatten)]
    pub tuning: TuningArgs,
    /// `geom[:POINTS[:RATIO]]`, `lin[:POINTS]` or a decreasing list `4,2,1,0`.
    #[arg(long, default_value = "geom:40:0.01")]
    pub lambda_grid: String,
    /// Also write `path.svg`.
    #[arg(long)]
    pub plot: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum CriterionArg {
    Aic,
    Pvalue,
}

#[derive(Args, Debug)]
pub struct SelectArgs {
    #[command(flatten)]
    pub path: PathArgs,
    #[arg(long, value_enum, default_value = "aic")]
    pub criterion: CriterionArg,
    /// Significance level for `--criterion pvalue`.
    #[arg(long, default_value_t = 0.05)]
    pub alpha_sig: f64,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub output: OutputArgs,
    /// Built-in setup: gwesp, gwnsp, bernoulli, attribute, attribute_ignored.
    #[arg(long, conflicts_with_all = ["spec", "theta"])]
    pub setup: Option<String>,
    /// JSON model spec to draw from (with `--theta`).
    #[arg(long, requires = "theta")]
    pub spec: Option<PathBuf>,
    /// Node attributes for `--spec` models.
    #[arg(long)]
    pub attrs: Option<PathBuf>,
    /// Comma-separated coefficients on the raw statistics.
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<String>,
    /// Number of nodes (taken from `--attrs` when given).
    #[arg(long, default_value_t = 50)]
    pub nodes: usize,
    /// Number of networks.
    #[arg(long, default_value_t = 20)]
    pub draws: usize,
    /// Burn-in in sweeps over all dyads.
    #[arg(long, default_value_t = ergm_lasso::simulate::GENERATOR_SWEEPS)]
    pub burn_in_sweeps: usize,
}

#[derive(Args, Debug)]
pub struct ExactArgs {
    #[command(flatten)]
    pub output: OutputArgs,
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub attrs: Option<PathBuf>,
    /// Observed network; enables the MLE, penalized path and activation points.
    #[arg(long)]
    pub edges: Option<PathBuf>,
    /// Node count when no edge list or attributes are given.
    #[arg(long)]
    pub nodes: Option<usize>,
    /// Coefficients (scaled) at which to report log κ and moments.
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<String>,
    /// Penalty grid for the exact penalized path.
    #[arg(long, default_value = "geom:10:0.01")]
    pub lambda_grid: String,
}

#[derive(Args, Debug)]
pub struct StandardizeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[arg(long, default_value_t = ergm_lasso::statistics::DEFAULT_STANDARDIZE_DRAWS)]
    pub standardize_draws: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(k) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k.max(1)).build_global() {
            log::warn!("could not size the worker pool: {e}");
        }
    }
    let result = match cli.command {
        Command::Fit(a) => commands::fit(a),
        Command::Path(a) => commands::path(a),
        Command::Select(a) => commands::select(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Exact(a) => commands::exact(a),
        Command::Standardize(a) => commands::standardize(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}

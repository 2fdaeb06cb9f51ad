//! `pgilab`: command-line front end for the public goods index, the
//! continuous-time openness model and the agent-based policy simulator.
//!
//! Exit codes: 0 success, 1 a verified property does not hold, 2 input
//! error, 3 numeric failure.

mod abm_cmd;
mod dyn_cmd;
mod output;
mod pgi_cmd;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub const DEFAULT_SEED: u64 = 0xC0FFEE;

#[derive(Debug)]
pub enum Failure {
    Input(anyhow::Error),
    Numeric(anyhow::Error),
    Unmet(String),
}

impl Failure {
    pub fn input(e: anyhow::Error) -> Self {
        Failure::Input(e)
    }

    fn code(&self) -> u8 {
        match self {
            Failure::Unmet(_) => 1,
            Failure::Input(_) => 2,
            Failure::Numeric(_) => 3,
        }
    }
}

macro_rules! input_errors {
    ($($t:ty),*) => {$(
        impl From<$t> for Failure {
            fn from(e: $t) -> Self {
                Failure::Input(e.into())
            }
        }
    )*};
}

input_errors!(
    std::io::Error,
    pgi_lab::scorecard::ScorecardError,
    pgi_lab::pgi::PgiError,
    pgi_lab::abm::AbmError,
    pgi_lab::stats::harness::HarnessError,
    csv::Error
);

impl From<pgi_lab::dynamics::DynamicsError> for Failure {
    fn from(e: pgi_lab::dynamics::DynamicsError) -> Self {
        if e.is_numeric() {
            Failure::Numeric(e.into())
        } else {
            Failure::Input(e.into())
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "pgilab", version, about = "Public goods index, openness dynamics and AI market policy simulation")]
struct Cli {
    /// Cap on worker threads; outputs do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Index computation and weight robustness.
    #[command(subcommand)]
    Pgi(PgiCommand),
    /// Longitudinal case studies.
    #[command(subcommand)]
    Case(CaseCommand),
    /// Continuous-time oligopoly model.
    #[command(name = "dyn", subcommand)]
    Dyn(DynCommand),
    /// Agent-based policy simulation.
    #[command(subcommand)]
    Abm(AbmCommand),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Agg {
    Linear,
    Ces,
}

#[derive(Debug, Subcommand)]
pub enum PgiCommand {
    /// Score and rank models.
    Compute(PgiComputeArgs),
    /// Rank stability under random weight perturbations.
    Sensitivity(PgiSensitivityArgs),
}

#[derive(Debug, Args)]
pub struct PgiComputeArgs {
    /// Scorecard CSV; defaults to the bundled five-model dimension scores.
    #[arg(long)]
    pub scorecards: Option<PathBuf>,
    /// Dimension weights `alpha,beta,gamma`, renormalized to sum to one.
    #[arg(long, value_parser = output::parse_weights)]
    pub weights: Option<[f64; 3]>,
    #[arg(long, value_enum, default_value = "linear")]
    pub agg: Agg,
    /// CES exponent, used with `--agg ces`.
    #[arg(long, default_value_t = 1.0)]
    pub rho: f64,
    /// Weight of the positive block in the computed externality score.
    #[arg(long, default_value_t = 0.5)]
    pub w_pos: f64,
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PgiSensitivityArgs {
    #[arg(long)]
    pub scorecards: Option<PathBuf>,
    #[arg(long, default_value_t = 10_000)]
    pub draws: usize,
    #[arg(long, value_parser = output::parse_seed, default_value = "0xC0FFEE")]
    pub seed: u64,
    #[arg(long, default_value_t = 0.2)]
    pub box_lo: f64,
    #[arg(long, default_value_t = 0.5)]
    pub box_hi: f64,
    #[arg(long, default_value_t = 0.5)]
    pub w_pos: f64,
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum CaseCommand {
    /// Openness of three model generations from one vendor.
    Openai(CaseArgs),
}

#[derive(Debug, Args)]
pub struct CaseArgs {
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum DynCommand {
    /// Integrate the model and write the trajectory.
    Simulate(DynSimulateArgs),
    /// Search the excludability grid for the private or social optimum.
    Optimize(DynOptimizeArgs),
    /// Check a qualitative property of the model.
    Verify(DynVerifyArgs),
}

#[derive(Debug, Args)]
pub struct DynSimulateArgs {
    /// Calibration file; defaults to the bundled baseline.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Excludability of the focal firm.
    #[arg(long)]
    pub e: Option<f64>,
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub step: Option<f64>,
    /// Trajectory CSV; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DynOptimizeArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Maximize welfare instead of the firm's value.
    #[arg(long)]
    pub social: bool,
    /// Grid resolution; defaults to the calibration's.
    #[arg(long)]
    pub grid_step: Option<f64>,
    /// Write the full policy scan as CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Prop {
    /// Private excludability is at least the social optimum on the grid.
    A1,
    /// Small user-base advantages tip the market only with strong data returns.
    A3,
    /// The openness subsidy moves the private choice to the social optimum.
    A4,
    /// Private excludability does not rise with spillover leakage.
    B6,
}

#[derive(Debug, Args)]
pub struct DynVerifyArgs {
    #[arg(long, value_enum, ignore_case = true)]
    pub prop: Prop,
    /// Calibration file; defaults to the bundled tipping calibration for A3
    /// and the baseline otherwise.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum AbmCommand {
    /// One replication of one scenario.
    Run(AbmRunArgs),
    /// Monte Carlo comparison of all five scenarios.
    Compare(AbmCompareArgs),
}

#[derive(Debug, Args)]
pub struct AbmRunArgs {
    /// Scenario configuration file; flags given explicitly override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub scenario: Option<String>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub users: Option<usize>,
    #[arg(long, value_parser = output::parse_seed)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "pgilab-out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AbmCompareArgs {
    #[arg(long, default_value_t = 100)]
    pub reps: usize,
    #[arg(long, default_value_t = 20)]
    pub steps: usize,
    #[arg(long, default_value_t = 2000)]
    pub users: usize,
    #[arg(long, value_parser = output::parse_seed, default_value = "0xC0FFEE")]
    pub seed: u64,
    #[arg(long, default_value = "pgilab-out")]
    pub out: PathBuf,
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::Input(anyhow::anyhow!("--threads must be at least 1")));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Input(e.into()))?;
    }
    match cli.command {
        Command::Pgi(PgiCommand::Compute(a)) => pgi_cmd::compute(&a),
        Command::Pgi(PgiCommand::Sensitivity(a)) => pgi_cmd::sensitivity(&a),
        Command::Case(CaseCommand::Openai(a)) => pgi_cmd::case_openai(&a),
        Command::Dyn(DynCommand::Simulate(a)) => dyn_cmd::simulate(&a),
        Command::Dyn(DynCommand::Optimize(a)) => dyn_cmd::optimize(&a),
        Command::Dyn(DynCommand::Verify(a)) => dyn_cmd::verify(&a),
        Command::Abm(AbmCommand::Run(a)) => abm_cmd::run(&a),
        Command::Abm(AbmCommand::Compare(a)) => abm_cmd::compare(&a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Input(e) => eprintln!("error: {e:#}"),
                Failure::Numeric(e) => eprintln!("numeric failure: {e:#}"),
                Failure::Unmet(msg) => eprintln!("property does not hold: {msg}"),
            }
            ExitCode::from(f.code())
        }
    }
}

//! `maviscid`: convergence tables, single solves and estimate checks.
//!
//! Exit codes: 0 success, 1 solver or verification failure, 2 usage error.

mod commands;
mod settings;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "maviscid", version, about = "C0 interior penalty solver for the vanishing moment Monge-Ampere problem")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Error and order tables over a mesh-size or epsilon sweep, one per degree.
    Convergence(RunArgs),
    /// One solve: dof dump plus gnuplot-ready sampling grids.
    Solve(RunArgs),
    /// Monte-Carlo checks of the discrete estimates and of coercivity.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Md,
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    /// Built-in case id (I-VI).
    #[arg(long)]
    pub case: Option<String>,
    /// `key = value` run file; its values apply where a flag is absent.
    #[arg(long)]
    pub config: Option<std::path::PathBuf>,
    #[arg(long)]
    pub dim: Option<usize>,
    /// Polynomial degrees, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub degree: Option<Vec<usize>>,
    /// Mesh sizes as `1/n` or `n`, comma separated.
    #[arg(long)]
    pub h_list: Option<String>,
    /// Epsilon values, comma separated.
    #[arg(long)]
    pub eps_list: Option<String>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, value_parser = ["full", "reduced", "plain"])]
    pub weight_mode: Option<String>,
    /// Seed of every random draw.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long, default_value = "maviscid-out")]
    pub out: std::path::PathBuf,
    /// Table formats, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "csv,md")]
    pub format: Vec<Format>,
}

#[derive(Args, Debug, Clone)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Random functions per level and check.
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
}

/// Error carrying its exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Failure(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Failure(_) => 1,
        }
    }
}

impl From<maviscid::Error> for CliError {
    fn from(e: maviscid::Error) -> Self {
        use maviscid::Error as E;
        match e {
            E::InvalidArgument(_)
            | E::Config { .. }
            | E::Unknown { .. }
            | E::Expression { .. }
            | E::DimensionMismatch(_)
            | E::UnsupportedQuadrature { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Failure(e.to_string()),
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("MAVISCID_THREADS") else { return Ok(()) };
    let n: usize = match v.trim().parse() {
        Ok(n) if n > 0 => n,
        _ => return Err(CliError::Usage(format!("MAVISCID_THREADS must be a positive integer, got `{v}`"))),
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Failure(format!("cannot start {n} worker threads: {e}")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|_| match &cli.command {
        Command::Convergence(a) => commands::convergence(a),
        Command::Solve(a) => commands::solve(a),
        Command::Verify(a) => commands::verify(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                CliError::Usage(m) => eprintln!("error: {m}"),
                CliError::Failure(m) => eprintln!("failed: {m}"),
            }
            ExitCode::from(e.code())
        }
    }
}

//! `screenequil`: solve, report on, and verify the contracting equilibria.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Overrides, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Solver(#[from] screenequil::Error),
    #[error("output error: {0}")]
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        use screenequil::Error as E;
        match self {
            CliError::Config(_) | CliError::Solver(E::InvalidArgument(_)) => 2,
            CliError::Solver(
                E::Coverage { .. } | E::Regularity(_) | E::UnsupportedAssumption(_) | E::NoInteriorSplit(_),
            ) => 4,
            CliError::Solver(_) | CliError::Io(_) => 5,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "screenequil",
    version,
    about = "Equilibria of competitive sequential screening on the Hotelling line"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration; the running example when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Setting to process (repeatable).
    #[arg(long = "setting", global = true, value_name = "NAME")]
    settings: Vec<String>,
    /// Type scale for `sweep` (repeatable).
    #[arg(long = "sigma", global = true, value_name = "FLOAT")]
    sigmas: Vec<f64>,
    #[arg(long, global = true, value_name = "INT")]
    gamma_points: Option<usize>,
    /// Cells per axis of the oracle grids.
    #[arg(long, global = true, value_name = "INT")]
    grid: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Oracle suite for `verify`.
    #[arg(long, global = true, value_name = "NAME")]
    suite: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve settings and write their contracts per type.
    Solve,
    /// Consumer, producer and total surplus per setting.
    Surplus,
    /// Interim utility curves of spot, non-exclusive and exclusive contracting.
    Figure,
    /// Early-contracting limits of fees and consumer surplus.
    Limits,
    /// Run the brute-force oracle suite.
    Verify,
    /// Surplus per setting across type scales.
    Sweep,
}

fn init_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("SCREENEQUIL_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("SCREENEQUIL_THREADS must be a positive integer, got '{raw}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> Result<commands::Code, CliError> {
    init_threads()?;
    let cfg = RunConfig::load(cli.config.as_deref())?.apply(Overrides {
        settings: cli.settings,
        sigmas: cli.sigmas,
        gamma_points: cli.gamma_points,
        grid: cli.grid,
        out: cli.out,
        suite: cli.suite,
    })?;
    match cli.command {
        Command::Solve => commands::solve(&cfg),
        Command::Surplus => commands::surplus_table(&cfg),
        Command::Figure => commands::figure(&cfg),
        Command::Limits => commands::limits(&cfg),
        Command::Verify => commands::verify(&cfg),
        Command::Sweep => commands::sweep(&cfg),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

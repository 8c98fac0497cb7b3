//! Experiment harness for the power-allocation game.
//!
//! Subcommands mirror the experiment suite (convergence traces, sweeps over
//! the network size, verification) plus `solve` for a single instance.
//! Exit codes: 0 success, 1 configuration error, 2 non-convergence in any
//! trial, 3 verification failure.

mod config;
mod experiments;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::ExperimentConfig;
use experiments::Runner;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
    NonConvergence(String),
    Verification(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::NonConvergence(_) => 2,
            CliError::Verification(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m)
            | CliError::Io(m)
            | CliError::NonConvergence(m)
            | CliError::Verification(m) => m,
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "chargegame",
    version,
    about = "Multi-user wireless charging power allocation: equilibrium solver and experiment runner"
)]
struct Cli {
    /// Flat key = value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory for CSV/JSON files.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    /// Suppress progress notes (data output is unaffected).
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Trace synchronous convergence from three starts on one instance.
    ConvergenceSync,
    /// Trace asynchronous (lossy) convergence from three starts.
    ConvergenceAsync,
    /// Sweep network sizes; record sync and async iteration counts.
    ItersVsSize,
    /// Sweep network sizes; record mean equilibrium bids.
    EquilibriumVsUsers,
    /// Sweep network sizes; record equilibrium welfare.
    WelfareVsUsers,
    /// Sweep network sizes; record the price of anarchy.
    PoaVsUsers,
    /// Run the independent verification battery and write a report.
    Verify,
    /// Solve one instance and print bids, welfare, and the price of anarchy.
    Solve,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {}", error.message());
            ExitCode::from(error.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut config = match &cli.config {
        Some(path) => ExperimentConfig::load(path).map_err(|e| CliError::Config(e.to_string()))?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    std::fs::create_dir_all(&cli.out)
        .map_err(|e| CliError::Io(format!("{}: {e}", cli.out.display())))?;

    let runner = Runner::new(&config, &cli.out, cli.quiet);
    match cli.command {
        Command::ConvergenceSync => runner.convergence_sync(),
        Command::ConvergenceAsync => runner.convergence_async(),
        Command::ItersVsSize => runner.iters_vs_size(),
        Command::EquilibriumVsUsers => runner.equilibrium_vs_users(),
        Command::WelfareVsUsers => runner.welfare_vs_users(),
        Command::PoaVsUsers => runner.poa_vs_users(),
        Command::Verify => runner.verify(),
        Command::Solve => runner.solve(),
    }
}

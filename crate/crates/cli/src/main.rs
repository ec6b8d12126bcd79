//! `extremal-lab`: reproducible runs of the linearized solver, the
//! nonlinearity construction and the bound checks.

mod commands;
mod config;
mod error;
mod output;
mod spec_args;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::RunConfig;
use error::CliError;

#[derive(Parser)]
#[command(
    name = "extremal-lab",
    version,
    about = "Radial extremal solutions: solve, construct, verify"
)]
struct Cli {
    /// JSON file with run settings; flags override its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    flags: RunConfig,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Solve the linearized problem for a potential; writes omega.csv.
    Linsolve,
    /// Build a potential, reconstruct f and audit it.
    Construct,
    /// Check the two-sided bound, eigenvalue and stability for a case.
    Verify,
    /// Seeded comparison-principle sweep over random step potentials.
    Sweep,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let base = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let cfg = base.overlay(&cli.flags);
    cfg.validate_numbers()?;
    let (outputs, failure) = match cli.command {
        Command::Linsolve => commands::linsolve(&cfg)?,
        Command::Construct => commands::construct(&cfg)?,
        Command::Verify => commands::verify(&cfg)?,
        Command::Sweep => commands::sweep(&cfg)?,
    };
    let manifest = outputs.write(&cfg.out_dir())?;
    eprintln!("wrote {}", manifest.display());
    failure.map_or(Ok(()), Err)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

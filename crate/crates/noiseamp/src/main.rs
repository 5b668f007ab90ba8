use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use noiseamp::cli::{
    load_config, run_amplify, run_phase_dist, run_sweep, run_tomo, run_validate, CliResult,
};

/// Probabilistic phase concentration of weak coherent states: sweeps,
/// amplification runs, phase distributions, tomography and validation.
#[derive(Parser)]
#[command(name = "noiseamp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
    /// Overrides the seed in the configuration file.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Gain, Γ and success probability versus added thermal noise.
    Sweep(Common),
    /// Single-point amplification: states, Wigner functions, phase stats.
    Amplify(Common),
    /// Canonical phase distributions for input, noisy and heralded states.
    PhaseDist(Common),
    /// Homodyne sampling plus maximum-likelihood reconstruction.
    Tomo(Common),
    /// Three-way analytic / Fock-oracle / Monte Carlo cross-validation.
    Validate(Common),
}

fn dispatch(cmd: &Command) -> CliResult {
    match cmd {
        Command::Sweep(c) => run_sweep(&load_config(&c.config)?, &c.out, c.seed),
        Command::Amplify(c) => run_amplify(&load_config(&c.config)?, &c.out),
        Command::PhaseDist(c) => run_phase_dist(&load_config(&c.config)?, &c.out),
        Command::Tomo(c) => run_tomo(&load_config(&c.config)?, &c.out, c.seed),
        Command::Validate(c) => run_validate(&load_config(&c.config)?, &c.out, c.seed),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}

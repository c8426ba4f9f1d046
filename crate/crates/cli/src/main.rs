//! `coopchain`: simulate and analyze cooperative single-photon emission
//! from a one-dimensional atomic chain.
//!
//! Exit codes: 0 success, 2 usage error, 3 numerical or I/O failure.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{CliError, ConfigFile};

#[derive(Parser)]
#[command(
    name = "coopchain",
    version,
    about = "Cooperative emission from a 1D atomic chain: states, spectra, decay fits, pulse plans"
)]
struct Cli {
    /// TOML config file mirroring the flags (section per subcommand);
    /// explicit flags win on conflict
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the decay (F) and shift (G) kernels at one separation
    Kernel(commands::KernelArgs),
    /// Coupling strength of ramp states, one row per m
    Coupling(commands::CouplingArgs),
    /// Write a state's amplitudes as a JSON array of (re, im) pairs
    State(commands::StateArgs),
    /// Eigenvalues of the coupling matrix, ascending by decay constant
    Spectrum(commands::SpectrumArgs),
    /// Eigenmode projections v, w and normalized weightings of a state
    Weights(commands::WeightsArgs),
    /// Time evolution of a ramp state: survival amplitude and population
    Evolve(commands::EvolveArgs),
    /// Fit an exponential to the envelope of a trace CSV
    Fit(commands::FitArgs),
    /// Lowest fitted decay constant per (N, spacing) over all m
    Sweep(commands::SweepArgs),
    /// Field-pulse parameters that prepare a target ramp state
    Plan(commands::PlanArgs),
    /// Phase-error robustness: projections and fits per offset
    Perturb(commands::PerturbArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match ConfigFile::load(cli.config.as_deref()) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    let result = match &cli.command {
        Command::Kernel(a) => commands::run_kernel(a, &cfg),
        Command::Coupling(a) => commands::run_coupling(a, &cfg),
        Command::State(a) => commands::run_state(a, &cfg),
        Command::Spectrum(a) => commands::run_spectrum(a, &cfg),
        Command::Weights(a) => commands::run_weights(a, &cfg),
        Command::Evolve(a) => commands::run_evolve(a, &cfg),
        Command::Fit(a) => commands::run_fit(a, &cfg),
        Command::Sweep(a) => commands::run_sweep(a, &cfg),
        Command::Plan(a) => commands::run_plan(a, &cfg),
        Command::Perturb(a) => commands::run_perturb(a, &cfg),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e),
    }
}

fn fail(e: CliError) -> ExitCode {
    match e {
        CliError::Usage(msg) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
        CliError::Numeric(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(3)
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hartree_blowup::commands;
use hartree_blowup::config::Config;

/// Blow-up laboratory for the mass-critical NLS with a Hartree perturbation.
#[derive(Parser, Debug)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Key-value configuration file; unset keys keep their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Existing directory for the outputs.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    /// Seed for the optional initial perturbation.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Ground state Q, rho and their diagnostics.
    GroundState,
    /// Profile coefficients P+-_{j,k} and beta_{j,k}.
    Profile,
    /// Blow-up law constants and initial parameters.
    Law,
    /// Evolve the configured initial data.
    Simulate,
    /// Modulation parameters of a stored snapshot.
    Decompose,
    /// Blow-up rate reproduction with graded criteria.
    ExperimentBlowup,
    /// Boundedness probe for the defocusing sign.
    ExperimentGlobal,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let base = match cli.command {
        Command::ExperimentGlobal => Config::global_default(),
        _ => Config::default(),
    };
    let config = match &cli.config {
        Some(path) => Config::load(base, path),
        None => Ok(base),
    };
    let config = match config {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let out = cli.out.as_path();
    let result = match cli.command {
        Command::GroundState => commands::ground_state(&config, out),
        Command::Profile => commands::profile(&config, out),
        Command::Law => commands::law(&config, out),
        Command::Simulate => commands::simulate(&config, out, cli.seed),
        Command::Decompose => commands::decompose(&config, out),
        Command::ExperimentBlowup => commands::blowup(&config, out, cli.seed),
        Command::ExperimentGlobal => commands::global(&config, out, cli.seed),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("one or more criteria failed; see the outputs in {}", out.display());
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

//! `boole`: derive conditions of possible experience, test marginals for a
//! joint distribution, and run the measurement-protocol simulations.
//!
//! Exit codes: 0 success or feasible, 1 infeasible, 2 invalid input,
//! 3 capacity exceeded, 4 inconsistent marginals.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "boole", version, about = "Correlation polytopes, marginal feasibility and measurement-protocol simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Facet inequalities of a scenario's correlation polytope.
    Facets {
        #[arg(long)]
        scenario: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Does a family of context marginals admit a joint distribution?
    Check {
        #[arg(long)]
        marginals: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Run a measurement protocol and estimate correlators.
    Simulate {
        #[arg(value_enum)]
        protocol: ProtocolArg,
        #[arg(long)]
        runs: u64,
        #[arg(long)]
        seed: u64,
        /// Pair tables (pair protocol) or a single triple table (triple protocol).
        #[arg(long)]
        marginals: Option<PathBuf>,
        /// Precession angle per time step for the quantum protocol.
        #[arg(long, allow_negative_numbers = true)]
        omega_tau: Option<f64>,
        #[arg(long)]
        threads: Option<usize>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Two-slit additivity report for a geometry or explicit distributions.
    Twoslit {
        #[arg(long)]
        geometry: Option<PathBuf>,
        /// Also sample screen hits of the both-open context.
        #[arg(long, requires = "seed")]
        runs: Option<u64>,
        #[arg(long, requires = "runs")]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Args, Debug, Clone)]
struct OutputArgs {
    /// Directory for CSV and JSON outputs.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum ProtocolArg {
    Triple,
    Pair,
    Quantum,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return ExitCode::from(if err.use_stderr() { commands::EXIT_VALIDATION } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Facets { scenario, output } => commands::facets(&scenario, &output.out),
        Command::Check { marginals, output } => commands::check(&marginals, &output.out),
        Command::Simulate { protocol, runs, seed, marginals, omega_tau, threads, output } => {
            let protocol = match protocol {
                ProtocolArg::Triple => commands::SimProtocol::Triple,
                ProtocolArg::Pair => commands::SimProtocol::Pair,
                ProtocolArg::Quantum => commands::SimProtocol::Quantum,
            };
            commands::simulate(&commands::SimulateConfig { protocol, runs, seed, marginals, omega_tau, threads, out: output.out })
        }
        Command::Twoslit { geometry, runs, seed, threads, output } => {
            commands::twoslit(geometry.as_deref(), runs.zip(seed), threads, &output.out)
        }
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(commands::exit_code(&err))
        }
    }
}

//! Command line front end for the manyterms library.
//!
//! Four subcommands cover the supported workflows end to end: `fit`
//! estimates the partially linear model on a CSV data set, `simulate` runs a
//! Monte Carlo study from a config file, `decompose` writes per-replication
//! score decompositions, and `densities` tabulates the error densities.
//!
//! Exit codes are stable: 0 on success, 2 for input or configuration
//! problems, 3 for numerical failures (rank deficiency, singular systems),
//! 4 for internal errors. Data goes to stdout or --out; diagnostics go to
//! stderr.

mod decompose;
mod densities;
mod emit;
mod error;
mod fit;
mod simulate;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "manyterms",
    version,
    about = "Series estimation of the partially linear model with many terms"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the partially linear model on a CSV file.
    Fit(fit::FitArgs),
    /// Run a Monte Carlo study described by a key=value config file.
    Simulate(simulate::SimulateArgs),
    /// Decompose simulated scores into bias, linear, and degenerate parts.
    Decompose(decompose::DecomposeArgs),
    /// Tabulate one of the error densities on a grid.
    Densities(densities::DensitiesArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Fit(args) => fit::run(&args),
        Command::Simulate(args) => simulate::run(&args),
        Command::Decompose(args) => decompose::run(&args),
        Command::Densities(args) => densities::run(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

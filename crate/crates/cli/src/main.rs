//! `lagrange-ising` command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 runtime failure (including divergence
//! and the brute-force size guard).

mod commands;
mod input;
mod options;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Bad flags, config values, or solver tags. Exit code 1.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// A run that started but could not finish. Exit code 2.
#[derive(Debug)]
pub struct RuntimeError(pub String);

impl std::fmt::Display for RuntimeError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for RuntimeError {}

#[derive(Debug, Parser)]
#[command(name = "lagrange-ising", version, about = "Ising solvers driven by Lagrange-multiplier dynamics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one instance with a multi-restart solver.
    Solve(commands::SolveArgs),
    /// Exhaustive ground state of a small instance.
    Bruteforce(commands::BruteforceArgs),
    /// Bit-encoded least squares solved as an Ising problem.
    Regress(commands::RegressArgs),
    /// Sweep solvers x instances x seeds into a CSV table.
    Bench(commands::BenchArgs),
}

fn configure_threads() -> Result<(), UsageError> {
    let Ok(raw) = std::env::var("LAGRANGE_ISING_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| UsageError(format!("LAGRANGE_ISING_THREADS must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| UsageError(format!("thread pool: {e}")))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = configure_threads().map_err(anyhow::Error::from).and_then(|()| match cli.command {
        Command::Solve(a) => commands::solve(a),
        Command::Bruteforce(a) => commands::bruteforce(a),
        Command::Regress(a) => commands::regress(a),
        Command::Bench(a) => commands::bench(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                eprintln!("run with --help for usage");
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

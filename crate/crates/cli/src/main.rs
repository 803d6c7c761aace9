//! `ncsim`: simulate the N-interactions random graph, run the audit battery,
//! check the exact one-step law, and sweep parameter grids.
//!
//! Exit codes: 0 ok, 1 verification failure, 2 configuration error, 3 I/O
//! error.

mod common;
mod oracle_check;
mod simulate;
mod sweep;
mod verify;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "ncsim",
    version,
    about = "N-interactions random graph simulator and verification harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run trajectories and write checkpoint series and a summary.
    Simulate(simulate::SimulateArgs),
    /// Run the audit battery and write a JSON report.
    Verify(verify::VerifyArgs),
    /// Compare the enumerated one-step law with the closed forms.
    OracleCheck(oracle_check::OracleArgs),
    /// Summarise a grid of parameter cells into CSV.
    Sweep(sweep::SweepArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => simulate::run(&args),
        Command::Verify(args) => verify::run(&args),
        Command::OracleCheck(args) => oracle_check::run(&args),
        Command::Sweep(args) => sweep::run(&args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("ncsim: {e}");
            e.exit_code()
        }
    }
}

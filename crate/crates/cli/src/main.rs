//! `sensched`: scenario-driven sensor-schedule analysis.
//!
//! Subcommands: `simulate` (covariance trajectories as CSV), `search`
//! (periodic-schedule enumeration), `approx` (periodic approximation of a
//! schedule's long-run cost), `verify` (numerical verification suites).
//!
//! Exit codes: 0 success (for `verify`: all checks passed), 1 output/IO
//! failure, 2 input error, 3 budget exceeded, 4 feasibility or convergence
//! failure. `verify` exits 1 when any check fails.

mod commands;
mod error;
mod output;
mod scenario;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::commands::Suite;

#[derive(Parser)]
#[command(name = "sensched", version, about = "Sensor scheduling for linear systems: simulate, search, approximate, verify")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Propagate the scheduled covariance sequence and write it as CSV.
    Simulate {
        /// Scenario JSON file.
        scenario: PathBuf,
        /// Number of steps to propagate.
        #[arg(long)]
        horizon: usize,
        /// CSV output path (written atomically).
        #[arg(long)]
        out: PathBuf,
    },
    /// Enumerate periodic schedules up to a period bound and report the best.
    Search {
        /// Scenario JSON file (its schedule entry is ignored).
        scenario: PathBuf,
        /// Largest period to enumerate.
        #[arg(long)]
        max_period: usize,
        /// Optional per-period CSV output path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Construct a periodic schedule matching the scenario schedule's
    /// long-run average cost within a gap bound.
    Approx {
        /// Scenario JSON file.
        scenario: PathBuf,
        /// Required cost gap.
        #[arg(long)]
        delta: f64,
        /// Optional JSON report output path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a numerical verification suite (exit 0 iff every check passes).
    Verify {
        /// Which battery to run.
        #[arg(long, value_enum)]
        suite: Suite,
        /// Seed for the randomized instances (reproducibility is a contract;
        /// there is no wall-clock fallback).
        #[arg(long)]
        seed: u64,
        /// Optional JSON Lines output path for the reports.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate {
            scenario,
            horizon,
            out,
        } => commands::simulate(&scenario, horizon, &out),
        Command::Search {
            scenario,
            max_period,
            out,
        } => commands::search(&scenario, max_period, out.as_deref()),
        Command::Approx {
            scenario,
            delta,
            out,
        } => commands::approx(&scenario, delta, out.as_deref()),
        Command::Verify { suite, seed, out } => commands::verify(suite, seed, out.as_deref()),
    };
    match result {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.code);
        }
    }
}

mod config;
mod fit_cmd;
mod input;
mod simulate_cmd;

use clap::{Parser, Subcommand};

/// Exit codes distinguishing the failure classes of the front end.
pub mod exit {
    pub const OK: i32 = 0;
    pub const USAGE: i32 = 2;
    pub const FILE_NOT_FOUND: i32 = 3;
    pub const PARSE_ERROR: i32 = 4;
    pub const NON_NUMERIC: i32 = 5;
    pub const ESTIMATOR_FAILURE: i32 = 6;
}

#[derive(Parser)]
#[command(
    name = "ramml",
    about = "Robust adaptive modified maximum likelihood regression",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit estimators to a CSV dataset and report coefficients, scale,
    /// SEP and trimmed SEP.
    Fit(fit_cmd::FitArgs),
    /// Run a Monte-Carlo sweep described by a config file and write one
    /// CSV row per cell and estimator.
    Simulate(simulate_cmd::SimulateArgs),
}

fn main() {
    // Worker-count override for the simulation fan-out.
    if let Ok(value) = std::env::var("RAMML_WORKERS") {
        if let Ok(workers) = value.parse::<usize>() {
            if workers >= 1 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(workers)
                    .build_global();
            }
        }
    }

    let cli = Cli::parse();
    let code = match cli.command {
        Command::Fit(args) => fit_cmd::run(&args),
        Command::Simulate(args) => simulate_cmd::run(&args),
    };
    std::process::exit(code);
}

//! The `simulate` subcommand: expand a sweep config, run the cells, and
//! emit one CSV row per cell and estimator.

use std::io::Write;
use std::path::PathBuf;

use clap::Args;

use ramml::{run_table, CellResult};

use crate::config::SweepConfig;
use crate::exit;

#[derive(Args)]
pub struct SimulateArgs {
    /// Sweep configuration file (TOML).
    #[arg(long)]
    pub config: PathBuf,

    /// Output CSV path (default: the config's `output` key, else stdout).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

pub fn run(args: &SimulateArgs) -> i32 {
    if !args.config.exists() {
        eprintln!("error: config file not found: {}", args.config.display());
        return exit::FILE_NOT_FOUND;
    }
    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {}: {e}", args.config.display());
            return exit::FILE_NOT_FOUND;
        }
    };
    let config = match SweepConfig::parse(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}: {e}", args.config.display());
            return exit::PARSE_ERROR;
        }
    };
    let cells = match config.expand() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}: {e}", args.config.display());
            return exit::PARSE_ERROR;
        }
    };

    let results = match run_table(&cells) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return exit::ESTIMATOR_FAILURE;
        }
    };

    let csv = render_csv(&results);
    let output = args
        .output
        .clone()
        .or_else(|| config.output.as_ref().map(PathBuf::from));
    match output {
        Some(path) => {
            if let Err(e) = std::fs::write(&path, csv) {
                eprintln!("error: {}: {e}", path.display());
                return exit::PARSE_ERROR;
            }
        }
        None => {
            let mut out = std::io::stdout().lock();
            let _ = out.write_all(csv.as_bytes());
        }
    }
    exit::OK
}

/// Full-precision CSV; float formatting is the shortest round-trip
/// representation, so reruns are byte-identical.
pub fn render_csv(results: &[CellResult]) -> String {
    let mut out = String::from("n,m,law,level,ell,rho,estimator,mse_beta,mse_sigma,failures\n");
    for cell in results {
        let s = &cell.scenario;
        for stat in &cell.stats {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                s.n,
                s.m,
                s.error_law.name(),
                s.contamination,
                s.leverage_magnitude,
                s.rho,
                stat.estimator.name(),
                stat.mse_beta,
                stat.mse_sigma,
                stat.failures
            ));
        }
    }
    out
}

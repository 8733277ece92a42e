//! Command-line front end for the quenching solver. Exit codes: 0 success,
//! 2 numerical failure, 3 configuration error, 4 I/O failure.

// Range guards compare as `!(x > 0.0)` so NaN fails closed.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod runner;

use config::{parse_args, ParseOutcome};
use runner::run_experiment;
use runner::run_scan;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let cfg = match parse_args(&args) {
        Ok(ParseOutcome::Run(cfg)) => cfg,
        Ok(ParseOutcome::Exit) => std::process::exit(0),
        Err(msg) => {
            eprintln!("error: {msg}");
            std::process::exit(3);
        }
    };
    let result = match &cfg.scan {
        Some(spec) => run_scan(&cfg, &spec.clone()),
        None => run_experiment(&cfg),
    };
    if let Err(e) = result {
        eprintln!("error: {}", e.message());
        std::process::exit(e.exit_code());
    }
}

//! Batch front end for `dicke-qfi-core`: time scans, Dicke excitation scans,
//! exponent maps and the oracle check, with a TOML config, a grid-pass cache,
//! CSV/JSON output and a worker pool.

pub mod args;
pub mod cache;
pub mod checks;
pub mod commands;
pub mod config;
pub mod grid;
pub mod output;
pub mod runner;

use args::{Cli, Command};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Numerical(_) | CliError::Io(_) => 2,
        }
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::TimeScan(a) => commands::time_scan(a),
        Command::DickeScan(a) => commands::dicke_scan(a),
        Command::ExponentMap(a) => commands::exponent_map(a),
        Command::OracleCheck(a) => commands::oracle_check(a),
    }
}

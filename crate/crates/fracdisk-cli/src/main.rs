//! `fracdisk` command-line driver.
//!
//! Exit codes: 0 on success, 2 for configuration errors (including usage
//! errors reported by the argument parser), 3 for numerical failures and 1 for
//! failures writing the outputs.

mod commands;
mod config;

use std::fmt;
use std::process::ExitCode;

use clap::Parser;

use crate::config::{Cli, RunConfig};

/// A failed run with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    pub fn output(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<fracdisk::Error> for Failure {
    fn from(e: fracdisk::Error) -> Self {
        let code = match &e {
            e if e.is_config_error() => 2,
            fracdisk::Error::Numerical(_) => 3,
            _ => 1,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::output(format!("cannot write output: {e}"))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result =
        RunConfig::resolve(cli.command.flags()).and_then(|cfg| commands::run(&cli.command, &cfg));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code)
        }
    }
}

//! `starshape`: simulate star-shaped random particles and inspect their
//! correlation structure from the command line.
//!
//! Exit codes: 0 success, 2 usage error, 1 numeric or I/O failure.

mod args;
mod config;
mod output;
mod run;

use std::process::ExitCode;

use clap::Parser;

use crate::args::Cli;

/// A user error detected after argument parsing (missing or inconsistent
/// values); reported like a clap usage error.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

pub fn usage<T>(msg: impl Into<String>) -> anyhow::Result<T> {
    Err(UsageError(msg.into()).into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<UsageError>() => {
            eprintln!("error: {e}\n\nFor more information, try '--help'.");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

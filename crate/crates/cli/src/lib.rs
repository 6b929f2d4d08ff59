//! Command-line harness: configuration, output persistence with run
//! manifests, and the experiment subcommands.

use std::ffi::OsString;
use std::process::ExitCode;

use clap::Parser;

pub mod args;
pub mod checks;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use error::{HarnessError, Result};

/// Parses `argv`, runs the subcommand and maps the outcome to an exit code.
pub fn run<I, T>(argv: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match args::Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match commands::dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rms: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

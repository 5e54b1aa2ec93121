//! File-based front end for `smw-core`: Matrix Market matrices, a JSON
//! update manifest, and the `solve`, `invert`, `capacitance`, `check`,
//! `bench` and `gen` commands.

pub mod args;
pub mod bundle;
pub mod commands;
pub mod error;
pub mod mtx;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;

use crate::args::{Cli, Command};
pub use crate::error::CliError;

fn dispatch(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Solve { bundle, out: path } => commands::solve(&bundle.to_bundle()?, path, out),
        Command::Invert { bundle, out: path } => commands::invert(&bundle.to_bundle()?, path, out),
        Command::Capacitance { bundle, out: path } => {
            commands::capacitance(&bundle.to_bundle()?, path, out)
        }
        Command::Check { bundle, solution } => {
            commands::check(&bundle.to_bundle()?, solution.as_deref(), out).map(|_| ())
        }
        Command::Bench(args) => commands::bench(args, out).map(|_| ()),
        Command::Gen(args) => commands::gen(args, out),
    }
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{e}");
            return e.exit_code();
        }
    };
    match dispatch(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

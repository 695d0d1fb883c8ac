//! Command-line surface of `efl-core`.
//!
//! Each subcommand prints one JSON document `{result, diagnostics, manifest}`
//! to stdout; `simulate` additionally produces the trajectory CSV. Exit codes:
//! 0 success (including blow-up), 2 invalid flags, 3 integrator failure,
//! 4 violated precondition, 1 anything else.

pub mod args;
pub mod commands;
pub mod output;

use std::ffi::OsString;

use clap::Parser;

use crate::args::Cli;

/// Parses `argv` (including the program name) and runs the command.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match commands::execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

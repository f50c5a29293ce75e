//! `laysum`: one binary, one subcommand per toolkit module.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on runtime errors (with a
//! one-line diagnostic on stderr).

mod args;
mod commands;
mod error;

use std::io::Write;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use crate::args::Cli;

const EXIT_USAGE: u8 = 1;
const EXIT_RUNTIME: u8 = 2;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    match commands::dispatch(cli.command) {
        Ok(out) => {
            let body = if cli.json { out.json } else { out.text };
            let mut stdout = std::io::stdout().lock();
            if stdout
                .write_all(body.as_bytes())
                .and_then(|_| stdout.flush())
                .is_err()
            {
                return ExitCode::from(EXIT_RUNTIME);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("laysum: error: {}", e.one_line());
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}

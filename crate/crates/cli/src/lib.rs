//! Command-line front end for the `constxr` toolkit.
//!
//! Exit codes: 0 when the check passes, 1 on a mathematical rejection, 2 on
//! usage or data errors.

pub mod args;
pub mod commands;
pub mod inputs;
pub mod report;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use crate::args::{Cli, Command};
use crate::commands::{execute, Verdict};

pub const EXIT_PASS: u8 = 0;
pub const EXIT_REJECT: u8 = 1;
pub const EXIT_ERROR: u8 = 2;

fn output_path(command: &Command) -> Option<&std::path::Path> {
    let out = match command {
        Command::Synth(a) => &a.output,
        Command::Verify(a) => &a.output,
        Command::Herglotz(a) => &a.output,
        Command::Disctest(a) => &a.output,
        Command::Iiest(a) => &a.output,
        Command::Slicetest(a) => &a.output,
    };
    out.out.as_deref()
}

pub fn run(cli: Cli) -> ExitCode {
    let result = match execute(&cli.command) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_ERROR);
        }
    };
    let mut writes = result.extra.clone();
    match output_path(&cli.command) {
        Some(path) => writes.push((path.to_path_buf(), result.text.clone())),
        None => {
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(result.text.as_bytes()).is_err() {
                return ExitCode::from(EXIT_ERROR);
            }
        }
    }
    for (path, contents) in writes {
        if let Err(e) = std::fs::write(&path, contents) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return ExitCode::from(EXIT_ERROR);
        }
    }
    match result.verdict {
        Verdict::Pass => ExitCode::from(EXIT_PASS),
        Verdict::Reject(reason) => {
            eprintln!("rejected: {reason}");
            ExitCode::from(EXIT_REJECT)
        }
    }
}

pub fn main_with_args() -> ExitCode {
    run(Cli::parse())
}

//! Command-line front end for `payscheme-core`.
//!
//! Every subcommand prints one JSON document on standard output and a short
//! summary or error on standard error. Exit codes: 0 success, 1 infeasible
//! program or failed verification, 2 bad input, 3 numerical breakdown.

pub mod args;
pub mod commands;
pub mod error;
pub mod format;
pub mod json;

use std::ffi::OsString;
use std::io::Read;

use clap::Parser;

use crate::args::Cli;
use crate::commands::{dispatch, Context};
use crate::error::EXIT_INPUT;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Output {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdin: &mut dyn Read) -> Output
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                Output {
                    stdout: String::new(),
                    stderr: text,
                    code: EXIT_INPUT,
                }
            } else {
                Output {
                    stdout: text,
                    stderr: String::new(),
                    code: 0,
                }
            };
        }
    };
    let mut ctx = Context::new(stdin);
    match dispatch(cli.command, &mut ctx) {
        Ok(report) => Output {
            stdout: json::to_canonical(&report.doc),
            stderr: report.note.map(|n| format!("{n}\n")).unwrap_or_default(),
            code: report.code,
        },
        Err(e) => Output {
            stdout: String::new(),
            stderr: format!("error: {e}\n"),
            code: e.exit_code(),
        },
    }
}

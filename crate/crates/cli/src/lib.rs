//! Command-line front end for the folkmetrics analyses.
//!
//! [`run`] parses an argument vector, executes one subcommand and returns the
//! process exit status: 0 on success, 1 for domain or I/O failures, 2 for
//! usage errors.

mod args;
mod commands;
mod output;
mod report;

use std::ffi::OsString;
use std::io;

use clap::Parser;

pub use args::Cli;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Names of the files a `report` bundle always contains.
pub use report::BUNDLE_FILES;

pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match cli.global.threads {
        0 => commands::execute(&cli),
        n => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| commands::execute(&cli)),
            Err(e) => Err(e.into()),
        },
    };
    match result {
        Ok(()) => EXIT_OK,
        // a closed downstream pipe is not our failure
        Err(e) if is_broken_pipe(&e) => EXIT_OK,
        Err(e) => {
            eprintln!("folkmetrics: {e:#}");
            EXIT_FAILURE
        }
    }
}

fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain().any(|cause| {
        let io_err = cause
            .downcast_ref::<io::Error>()
            .or_else(|| match cause.downcast_ref::<folkmetrics::Error>() {
                Some(folkmetrics::Error::Io(inner)) => Some(inner),
                _ => None,
            });
        io_err.is_some_and(|e| e.kind() == io::ErrorKind::BrokenPipe)
    })
}

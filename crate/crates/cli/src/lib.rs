//! Library side of the `cfsim` binary: argument types, config loading and
//! the command implementations, kept here so tests can drive them directly.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;

use std::fs;
use std::io::Write;
use std::path::Path;

pub use args::{Cli, Command};
pub use error::CliError;

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match out {
        Some(p) => fs::write(p, bytes).map_err(|source| CliError::Io {
            path: p.to_path_buf(),
            source,
        }),
        None => {
            let mut so = std::io::stdout().lock();
            so.write_all(bytes).and_then(|_| so.flush()).map_err(|source| CliError::Io {
                path: "<stdout>".into(),
                source,
            })
        }
    }
}

/// Executes one parsed command line.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    let (out, path) = match &cli.command {
        Command::Simulate(a) => (commands::simulate(a)?, a.out.as_deref()),
        Command::Sweep(a) => (commands::sweep(a)?, a.out.as_deref()),
        Command::Overhead(a) => (commands::overhead(a)?, a.out.as_deref()),
        Command::Reuse(a) => (commands::reuse(a)?, a.out.as_deref()),
        Command::Verify(a) => {
            let o = commands::verify(a)?;
            println!("{}", o.summary.unwrap_or_default());
            return Ok(());
        }
    };
    emit(path, &out.csv)?;
    if let Some(s) = out.summary {
        eprintln!("{s}");
    }
    Ok(())
}

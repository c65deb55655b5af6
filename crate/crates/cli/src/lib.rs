//! Command-line driver for `synchrolab`.
//!
//! [`run`] parses arguments, dispatches the subcommand, writes a run
//! directory (data files plus `manifest.json`) and echoes the primary table
//! to standard output.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::io::Write;

pub use config::{parse_config, RunConfig};
pub use error::CliError;

/// Runs the driver and returns the process exit code.
pub fn run<I, T>(argv: I, env: impl Fn(&str) -> Option<String>) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match execute(argv, env) {
        Ok(()) => 0,
        Err(CliError::Usage(e)) => {
            let _ = e.print();
            CliError::Usage(e).exit_code()
        }
        Err(e) => {
            eprintln!("synchrolab: {e}");
            e.exit_code()
        }
    }
}

fn execute<I, T>(argv: I, env: impl Fn(&str) -> Option<String>) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cfg = parse_config(argv, env)?;
    let report = commands::dispatch(&cfg)?;
    let dir = output::write_run(&cfg, &report)?;
    let echo = report.tables[report.echo].render(cfg.format)?;
    let mut stdout = std::io::stdout().lock();
    stdout.write_all(echo.as_bytes())?;
    stdout.flush()?;
    eprintln!("wrote {}", dir.display());
    Ok(())
}

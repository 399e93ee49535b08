//! Batch front end: identity verification, simulation, current moments and
//! large-deviation tables, with seeded reproducible runs and CSV output.

pub mod commands;
pub mod config;
pub mod verify;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;

pub use config::{Cli, Command, Flags, RunConfig, SEED_ENV};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_CONTAMINATED: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Core(#[from] asepqj_core::Error),
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => EXIT_INVALID,
            CliError::Core(asepqj_core::Error::Domain(_) | asepqj_core::Error::Size { .. } | asepqj_core::Error::Usage(_)) => {
                EXIT_INVALID
            }
            CliError::Core(_) | CliError::Io { .. } => EXIT_FAILED,
        }
    }
}

/// Seventeen significant digits, enough to round-trip an `f64`.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// What a command produced: human-readable text, an optional CSV document,
/// and the exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub text: String,
    pub csv: Option<String>,
    pub code: i32,
    /// Where the CSV goes; `None` prints it after the text, except for the
    /// verify report whose CSV twin is only written to a file.
    pub out: Option<std::path::PathBuf>,
}

/// Runs one parsed command.
pub fn execute(command: &Command, env_seed: Option<String>) -> Result<Outcome, CliError> {
    let cfg = RunConfig::resolve(command.flags(), env_seed)?;
    let mut outcome = match command {
        Command::Verify(_) => commands::verify(&cfg),
        Command::Simulate(_) => commands::simulate(&cfg),
        Command::Moment(_) => commands::moment(&cfg),
        Command::Ldp(_) => commands::ldp(&cfg),
    }?;
    outcome.out = cfg.out;
    Ok(outcome)
}

/// Parses arguments, runs, writes output, and returns the process exit code.
pub fn run<I, T>(args: I, env_seed: Option<String>, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    let outcome = match execute(&cli.command, env_seed) {
        Ok(o) => o,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return e.exit_code();
        }
    };
    let _ = out.write_all(outcome.text.as_bytes());
    if let Some(csv) = &outcome.csv {
        match &outcome.out {
            Some(path) => {
                if let Err(source) = std::fs::write(path, csv) {
                    let e = CliError::Io { path: path.display().to_string(), source };
                    let _ = writeln!(err, "error: {e}");
                    return e.exit_code();
                }
            }
            None if !matches!(cli.command, Command::Verify(_)) => {
                let _ = out.write_all(csv.as_bytes());
            }
            None => {}
        }
    }
    outcome.code
}

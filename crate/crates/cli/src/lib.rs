//! Command-line front end for living safety cases.
//!
//! [`run`] parses arguments, dispatches to a command and returns the text
//! for stdout and stderr together with the exit status, so the binary is a
//! thin wrapper and everything is testable in-process.

pub mod commands;
pub mod config;
pub mod report;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::{Format, RunConfig};
pub use report::{CaseReport, Verdict, REPORT_VERSION};

#[derive(Debug, Parser)]
#[command(
    name = "livecase",
    version,
    about = "Validate, monitor and analyse living safety cases"
)]
pub struct Cli {
    /// Safety case file; overrides `case` in the config.
    #[arg(long, global = true)]
    pub case: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[arg(long, global = true, env = "LIVECASE_CONFIG")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and check the case, its hazard log trace and structure.
    Validate,
    /// Evaluate SPIs, evidence and fault trees and print a verdict.
    Evaluate {
        /// Change events to include as an impact summary.
        #[arg(long)]
        events: Option<PathBuf>,
    },
    /// Propagate change events through the argument.
    Impact {
        events: PathBuf,
        #[arg(long)]
        annotations: Option<PathBuf>,
    },
    /// Write a new case from the built-in template.
    Init {
        #[arg(long)]
        system: String,
        #[arg(long)]
        odd: String,
        #[arg(long, short, default_value = "case.scdl")]
        output: PathBuf,
        #[arg(long)]
        force: bool,
    },
    /// Cut sets, top probability and budgets of one fault tree.
    Fta { tree: String },
    #[command(subcommand)]
    Ingest(Ingest),
}

#[derive(Debug, Subcommand)]
pub enum Ingest {
    /// Check telemetry files line by line.
    Telemetry {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Register a new version of an evidence artifact.
    Evidence {
        artifact: String,
        file: PathBuf,
        #[arg(long)]
        journal: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    pub fn new(code: i32, stdout: String) -> Self {
        Self {
            code,
            stdout,
            stderr: String::new(),
        }
    }

    pub fn fail(code: i32, message: impl Into<String>) -> Self {
        let mut stderr = message.into();
        if !stderr.ends_with('\n') {
            stderr.push('\n');
        }
        Self {
            code,
            stdout: String::new(),
            stderr,
        }
    }
}

/// Exit status used when a command cannot run at all.
pub fn operational_failure_code(command: &Command) -> i32 {
    match command {
        Command::Validate => 2,
        _ => 3,
    }
}

pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            return if code == 0 {
                Outcome::new(0, text)
            } else {
                Outcome::fail(code, text)
            };
        }
    };
    match commands::dispatch(&cli) {
        Ok(o) => o,
        Err(e) => Outcome::fail(
            operational_failure_code(&cli.command),
            format!("error: {e:#}"),
        ),
    }
}

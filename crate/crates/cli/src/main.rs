//! Transcript correction and scoring from the command line.
//!
//! Four subcommands share one binary: `correct` runs the three-stage
//! pipeline over a hypothesis transcript and records outcomes in a trace,
//! `evaluate` scores hypothesis/reference pairs directly, `classify` labels
//! correction pairs with failure-mode categories, and `report` renders
//! result tables from recorded traces.
//!
//! Exit codes: 0 on success, 1 when any utterance failed mid-run, 2 on
//! configuration or usage errors. Diagnostics go to stderr, data to stdout.

mod classify;
mod config;
mod correct;
mod evaluate;
mod report;
mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "rllm", version, about = "Correct and score speech-recognition transcripts")]
struct Cli {
    /// Settings file with one table per subcommand; flags override it
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the correction pipeline over a transcript, writing a trace
    Correct(correct::CorrectArgs),
    /// Score a hypothesis transcript against references
    Evaluate(evaluate::EvaluateArgs),
    /// Label correction pairs with failure-mode categories
    Classify(classify::ClassifyArgs),
    /// Render result tables from recorded traces
    Report(report::ReportArgs),
}

/// Failures split by exit code: usage errors abort before any work, run
/// errors mean the run started and something went wrong inside it.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Run(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Run(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(msg) | CliError::Run(msg) => f.write_str(msg),
        }
    }
}

/// Shorthand for mapping fallible setup steps onto usage errors.
pub fn usage(context: &str, error: impl std::fmt::Display) -> CliError {
    CliError::Usage(format!("{context}: {error}"))
}

/// Write a machine-readable report: pretty JSON, trailing newline, stable
/// key order so reruns are byte-identical.
pub fn write_json(path: &std::path::Path, value: &impl serde::Serialize) -> Result<(), CliError> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| CliError::Run(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| usage(&format!("cannot write {}", path.display()), e))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let file = match config::ConfigFile::load_optional(cli.config.as_deref()) {
        Ok(file) => file,
        Err(error) => {
            eprintln!("error: {error}");
            return ExitCode::from(error.code());
        }
    };
    let result = match &cli.command {
        Command::Correct(args) => correct::run(args, &file),
        Command::Evaluate(args) => evaluate::run(args, &file),
        Command::Classify(args) => classify::run(args, &file),
        Command::Report(args) => report::run(args, &file),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {error}");
            ExitCode::from(error.code())
        }
    }
}

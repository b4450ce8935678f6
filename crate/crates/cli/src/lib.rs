//! Command-line front end for `corrcomplete`.
//!
//! Exit codes: 0 success, 1 verification failed, 2 invalid input,
//! 3 pattern not chordal, 4 not positive definite, 5 I/O failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

mod commands;
mod dot;

pub use commands::CheckReport;

/// Environment variable overriding the Cholesky pivot tolerance.
pub const TOL_ENV: &str = "CORRCOMPLETE_TOL";

#[derive(Debug, Parser)]
#[command(
    name = "corrcomplete",
    version,
    about = "Maximum-entropy completion of partial correlation matrices"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Complete a partial correlation matrix.
    Complete(CompleteArgs),
    /// Verify a dense matrix, optionally against its original pattern.
    Check(CheckArgs),
    /// Show chordality, cliques, clique tree and merge order.
    Explain(ExplainArgs),
    /// Write fixture or random partial matrices.
    #[command(subcommand)]
    Gen(GenCommand),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Input file, or `-` for stdin.
    #[arg(long)]
    pub input: PathBuf,
    /// Input format; inferred from the file extension when omitted.
    #[arg(long, value_parser = ["json", "csv"])]
    pub format: Option<String>,
}

#[derive(Debug, Args)]
pub struct CompleteArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Output file for the completed matrix; stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Output format; defaults to the input format.
    #[arg(long, value_parser = ["json", "csv"])]
    pub out_format: Option<String>,
    /// Write a JSON completion report here.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Root clique as comma-separated labels, or `auto` for the largest.
    #[arg(long, default_value = "auto")]
    pub root: String,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Partial matrix the dense input was completed from.
    #[arg(long)]
    pub pattern: Option<PathBuf>,
    /// Format of the pattern file; inferred when omitted.
    #[arg(long, value_parser = ["json", "csv"])]
    pub pattern_format: Option<String>,
    /// Also run the numeric max-determinant oracle (six free entries at most).
    #[arg(long)]
    pub oracle: bool,
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Write the pattern graph and clique tree in DOT format here.
    #[arg(long)]
    pub dot: Option<PathBuf>,
    /// Root clique as comma-separated labels, or `auto`.
    #[arg(long, default_value = "auto")]
    pub root: String,
}

#[derive(Debug, Args)]
pub struct GenOutput {
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_parser = ["json", "csv"], default_value = "json")]
    pub format: String,
}

#[derive(Debug, Subcommand)]
pub enum GenCommand {
    /// Single-currency model from six coefficients.
    Xccy {
        /// `(E,nu_E),(A,nu_A),(E,A),(E,X),(A,X),(X,nu_X)`, comma-separated.
        #[arg(long, value_delimiter = ',', num_args = 1, allow_hyphen_values = true)]
        params: Vec<f64>,
        #[command(flatten)]
        out: GenOutput,
    },
    /// N-currency model.
    Ncurrency {
        /// Number of foreign currencies.
        #[arg(long)]
        count: usize,
        /// JSON parameter file; the canonical fixture is replicated when omitted.
        #[arg(long)]
        params_file: Option<PathBuf>,
        #[command(flatten)]
        out: GenOutput,
    },
    /// Random positive definite matrix masked to a random chordal pattern.
    Random {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        out: GenOutput,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] corrcomplete::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
    #[error("verification failed: {0}")]
    CheckFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use corrcomplete::Error as E;
        match self {
            CliError::CheckFailed(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Io { .. } => 5,
            CliError::Core(e) => match e {
                E::InvalidInput(_) | E::SeparatorMismatch { .. } => 2,
                E::NotChordal { .. } => 3,
                E::CliqueBlockNotPd { .. } | E::NotPositiveDefinite { .. } | E::NoFeasiblePoint(_) => 4,
            },
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let sink: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = sink.write_all(text.as_bytes());
            return code;
        }
    };
    match commands::dispatch(cli.command, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

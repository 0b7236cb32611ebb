//! Batch front end: `varcalc <subcommand> --config <path>`.
//!
//! Exit status is 0 on success, 1 when a computation fails or a check does
//! not pass, and 2 for usage and configuration errors. Summaries go to
//! standard output as `key = value` lines; diagnostics go to standard error.

mod commands;
pub mod config;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::{ConfigError, Document, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "varcalc", version, about = "Variational calculus on C^∞(S¹, ℝᵐ)")]
#[command(arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Run configuration file.
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides `[run] seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory for output files; created if missing.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Suppress informational messages on standard error.
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Euler-Lagrange residual of `[curve]`.
    Residual(Common),
    /// Leapfrog solve from `[initial]`.
    SolveIvp(Common),
    /// Action minimization between `[boundary]` endpoints.
    SolveBvp(Common),
    /// First variations of the action along `[curve]`.
    VerifyCritical(Common),
    /// Weak-integral identity for the dual curve of `[weak]`.
    WeakIntegralCheck(Common),
    /// Constancy of `g − ∫f` for `[dbr]` or along `[curve]`.
    DbrCheck(Common),
    /// Refinement study over `[ladder]`.
    Converge(Common),
}

/// Outcome of a subcommand that ran to completion.
pub(crate) enum Outcome {
    Pass,
    Fail(String),
}

pub(crate) enum CliError {
    Config(ConfigError),
    Domain(crate::Error),
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        Self::Config(e)
    }
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        Self::Domain(e)
    }
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            let code = e.exit_code();
            let sink: &mut dyn Write = if code == 0 { stdout } else { stderr };
            let _ = sink.write_all(text.as_bytes());
            return if code == 0 { EXIT_OK } else { EXIT_USAGE };
        }
    };
    let (name, common, exec): (&str, &Common, commands::Exec) = match &cli.command {
        Command::Residual(c) => ("residual", c, commands::residual),
        Command::SolveIvp(c) => ("solve-ivp", c, commands::solve_ivp),
        Command::SolveBvp(c) => ("solve-bvp", c, commands::solve_bvp),
        Command::VerifyCritical(c) => ("verify-critical", c, commands::verify_critical),
        Command::WeakIntegralCheck(c) => ("weak-integral-check", c, commands::weak_integral_check),
        Command::DbrCheck(c) => ("dbr-check", c, commands::dbr_check),
        Command::Converge(c) => ("converge", c, commands::converge),
    };
    let result = Document::load(&common.config).map_err(CliError::from).and_then(|doc| {
        let mut cfg = RunConfig::from_document(&doc)?;
        if let Some(seed) = common.seed {
            cfg.seed = seed;
        }
        let mut ctx = commands::Context::new(name, common, stdout, stderr)?;
        exec(&doc, &cfg, &mut ctx)
    });
    match result {
        Ok(Outcome::Pass) => EXIT_OK,
        Ok(Outcome::Fail(reason)) => {
            let _ = writeln!(stderr, "varcalc {name}: {reason}");
            EXIT_FAILURE
        }
        Err(CliError::Config(e)) => {
            let _ = writeln!(stderr, "varcalc {name}: config error: {e}");
            EXIT_USAGE
        }
        Err(CliError::Domain(e)) => {
            let _ = writeln!(stderr, "varcalc {name}: {e}");
            EXIT_FAILURE
        }
    }
}

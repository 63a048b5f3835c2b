//! `cf-certify`: certified quantile tables, simulation checks and transform
//! tabulation from the command line.
//!
//! Exit codes: 0 success, 2 usage or domain error, 3 level or bracket outside
//! the applicability window, 4 verification failure.

mod commands;
mod error;
mod output;
mod setup;

use clap::{Parser, Subcommand};

use commands::{BoundArgs, TableArgs, TransformArgs, VerifyArgs};
use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "cf-certify", version, about = "Certified Cornish-Fisher quantile intervals")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Certify upper quantiles at the given levels
    Bound(BoundArgs),
    /// Certify a grid or list of levels and write the full table
    Table(TableArgs),
    /// Check certificates against simulated samples
    Verify(VerifyArgs),
    /// Tabulate a correcting transform, its inverse or the inverse's derivative
    Transform(TransformArgs),
}

/// Sizes the global thread pool from `CF_CERTIFY_THREADS` when set.
fn configure_threads() -> CliResult<()> {
    let Ok(value) = std::env::var("CF_CERTIFY_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| CliError::Usage(format!("CF_CERTIFY_THREADS must be a positive integer, got '{value}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot size thread pool: {e}")))
}

fn run(cli: Cli) -> CliResult<()> {
    configure_threads()?;
    match &cli.command {
        Command::Bound(args) => commands::cmd_bound(args),
        Command::Table(args) => commands::cmd_table(args),
        Command::Verify(args) => commands::cmd_verify(args),
        Command::Transform(args) => commands::cmd_transform(args),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

//! Command-line front end: rule grammar, run configuration, and the
//! subcommands that write analysis artifacts.

mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod parse;

pub use commands::{Outcome, execute};
pub use config::{Cli, RunConfig};
pub use error::CliError;

/// Caps the worker pool from `CAUSAL_FORGE_THREADS`, when set.
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("CAUSAL_FORGE_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("CAUSAL_FORGE_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("cannot size the thread pool: {e}")))
}

/// Resolves, executes and writes a run. Returns the summary to print.
pub fn run(cli: Cli) -> Result<Outcome, CliError> {
    let out = cli.out.clone();
    let cfg = RunConfig::resolve(cli)?;
    let outcome = execute(&cfg)?;
    if let Some(dir) = out {
        output::write_run(&dir, &cfg, &outcome)?;
    }
    Ok(outcome)
}

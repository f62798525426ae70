//! Command-line front end for `qhop`.
//!
//! [`parse_config`] turns arguments and an optional TOML file into a
//! [`RunConfig`]; [`run`] executes it and writes records plus a manifest.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::io::Write;
use std::time::Instant;

pub use config::{parse_config, resolve, Cli, CommandKind, Format, RunConfig};
pub use error::CliError;
pub use output::{read_manifest, Manifest};

/// Execute a resolved config. Nothing is written unless the run succeeds.
pub fn run(cfg: &RunConfig) -> Result<(), CliError> {
    let start = Instant::now();
    let outcome = commands::execute(cfg)?;
    let wall_time_seconds = start.elapsed().as_secs_f64();
    let bytes = outcome.records.render(cfg.format);
    match &cfg.output_path {
        Some(path) => {
            output::atomic_write(path, &bytes)?;
            output::write_manifest(&Manifest {
                schema_version: output::SCHEMA_VERSION,
                tool: "qhop".into(),
                version: env!("CARGO_PKG_VERSION").into(),
                config: cfg.clone(),
                seed: cfg.seed,
                wall_time_seconds,
                records: outcome.records.len(),
                output: path.clone(),
                summary: outcome.summary,
            })?;
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(&bytes)
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::io("<stdout>", e))?;
        }
    }
    Ok(())
}

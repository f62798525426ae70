//! Argument parsing and config-file merging.
//!
//! Values are resolved as flag > config file > default. The merged
//! parameter table is checked against the command's parameter struct, so
//! unknown keys and type mismatches are rejected before anything runs.

use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::commands;
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "qhop", version, about = "Transverse-field Hopfield model: exact, mean-field and ensemble runs")]
pub struct Cli {
    /// TOML file with parameter defaults for this run.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Record file; records go to stdout when omitted.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Worker threads for ensemble runs (default: all cores).
    #[arg(long, global = true, env = "QHOP_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Exact,
    Meanfield,
    PhaseDiagram,
    Selfavg,
    Converge,
    Retrieval,
    Norms,
    Verify,
}

impl fmt::Display for CommandKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = serde_json::to_value(self).map_err(|_| fmt::Error)?;
        write!(f, "{}", v.as_str().unwrap_or_default())
    }
}

#[derive(Debug, Clone, Default, Args, Serialize)]
pub struct ModelFlags {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    /// Transverse field.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
    /// Longitudinal field.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
}

#[derive(Debug, Clone, Default, Args, Serialize)]
pub struct SolverFlags {
    /// dense | symmetric | slq
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solver: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probes: Option<i64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub krylov_steps: Option<i64>,
}

#[derive(Debug, Clone, Default, Args, Serialize)]
#[command(allow_negative_numbers = true)]
pub struct ExactFlags {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<i64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<i64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelFlags,
    /// uniform | aligned
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
    /// Pattern the aligned field follows (1-based).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pattern: Option<i64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub solver: SolverFlags,
    /// CSV of ±1 patterns (one row per pattern) instead of random draws.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub patterns_file: Option<String>,
    /// Also write the dense spectrum as `index,eigenvalue` CSV.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spectrum_file: Option<String>,
}

#[derive(Debug, Clone, Default, Args, Serialize)]
#[command(allow_negative_numbers = true)]
pub struct MeanfieldFlags {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelFlags,
}

#[derive(Debug, Clone, Default, Args, Serialize)]
#[command(allow_negative_numbers = true)]
pub struct PhaseFlags {
    /// `start:stop:step` or a comma list.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d_grid: Option<String>,
}

#[derive(Debug, Clone, Default, Args, Serialize)]
#[command(allow_negative_numbers = true)]
pub struct SelfavgFlags {
    /// `start:stop:step` or a comma list.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_grid: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<i64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelFlags,
    /// uniform | aligned
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pattern: Option<i64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<i64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub solver: SolverFlags,
}

#[derive(Debug, Clone, Default, Args, Serialize)]
#[command(allow_negative_numbers = true)]
pub struct ConvergeFlags {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_grid: Option<String>,
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelFlags,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<i64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub solver: SolverFlags,
}

#[derive(Debug, Clone, Default, Args, Serialize)]
#[command(allow_negative_numbers = true)]
pub struct RetrievalFlags {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<i64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelFlags,
}

#[derive(Debug, Clone, Default, Args, Serialize)]
#[command(allow_negative_numbers = true)]
pub struct NormsFlags {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_grid: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<i64>,
}

#[derive(Debug, Clone, Default, Args, Serialize)]
#[command(allow_negative_numbers = true)]
pub struct VerifyFlags {
    /// Trials for the Bogolyubov and Duhamel suites.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<i64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gauge_trials: Option<i64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gauge_n: Option<i64>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Exact free energy of one disorder sample.
    Exact(ExactFlags),
    /// Mean-field minimizer of the single-pattern model.
    Meanfield(MeanfieldFlags),
    /// Critical inverse temperature over a grid of transverse fields.
    PhaseDiagram(PhaseFlags),
    /// Disorder variance of the free energy versus n.
    Selfavg(SelfavgFlags),
    /// Gap between the exact and mean-field free energies versus n.
    Converge(ConvergeFlags),
    /// Exact overlap with the stored pattern against mean field.
    Retrieval(RetrievalFlags),
    /// Sample means of the coupling and overlap-matrix norms.
    Norms(NormsFlags),
    /// Bogolyubov, Duhamel and gauge-invariance property suites.
    Verify(VerifyFlags),
}

impl Command {
    pub fn kind(&self) -> CommandKind {
        match self {
            Command::Exact(_) => CommandKind::Exact,
            Command::Meanfield(_) => CommandKind::Meanfield,
            Command::PhaseDiagram(_) => CommandKind::PhaseDiagram,
            Command::Selfavg(_) => CommandKind::Selfavg,
            Command::Converge(_) => CommandKind::Converge,
            Command::Retrieval(_) => CommandKind::Retrieval,
            Command::Norms(_) => CommandKind::Norms,
            Command::Verify(_) => CommandKind::Verify,
        }
    }

    fn flag_values(&self) -> Result<Map<String, Value>, CliError> {
        let v = match self {
            Command::Exact(f) => serde_json::to_value(f),
            Command::Meanfield(f) => serde_json::to_value(f),
            Command::PhaseDiagram(f) => serde_json::to_value(f),
            Command::Selfavg(f) => serde_json::to_value(f),
            Command::Converge(f) => serde_json::to_value(f),
            Command::Retrieval(f) => serde_json::to_value(f),
            Command::Norms(f) => serde_json::to_value(f),
            Command::Verify(f) => serde_json::to_value(f),
        };
        match v {
            Ok(Value::Object(map)) => Ok(map),
            Ok(_) => Ok(Map::new()),
            Err(e) => Err(CliError::Config {
                key: None,
                message: e.to_string(),
            }),
        }
    }
}

/// A fully resolved invocation: every parameter present and validated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: CommandKind,
    /// Command parameters with defaults filled in.
    pub params: Map<String, Value>,
    pub seed: u64,
    pub output_path: Option<PathBuf>,
    pub format: Format,
    pub threads: Option<usize>,
}

pub const DEFAULT_SEED: u64 = 0;

/// Keys a config file may set besides command parameters.
const GLOBAL_KEYS: [&str; 4] = ["seed", "output", "format", "threads"];

/// Parse an argument vector (program name first) into a [`RunConfig`].
pub fn parse_config<I, T>(args: I) -> Result<RunConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::Config {
        key: None,
        message: e.to_string().trim_end().to_string(),
    })?;
    resolve(cli)
}

fn read_config_file(path: &Path) -> Result<toml::Table, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    text.parse::<toml::Table>().map_err(|e| CliError::Config {
        key: Some("config".into()),
        message: format!("{}: {}", path.display(), e.message()),
    })
}

fn take_global<T: serde::de::DeserializeOwned>(
    table: &mut toml::Table,
    key: &'static str,
) -> Result<Option<T>, CliError> {
    match table.remove(key) {
        None => Ok(None),
        Some(v) => v
            .try_into()
            .map(Some)
            .map_err(|e: toml::de::Error| CliError::config(key, e.message().to_string())),
    }
}

/// Merge flags, config file and defaults.
pub fn resolve(cli: Cli) -> Result<RunConfig, CliError> {
    let mut file = match &cli.config {
        Some(path) => read_config_file(path)?,
        None => toml::Table::new(),
    };
    let file_seed: Option<u64> = take_global(&mut file, GLOBAL_KEYS[0])?;
    let file_output: Option<PathBuf> = take_global(&mut file, GLOBAL_KEYS[1])?;
    let file_format: Option<Format> = take_global(&mut file, GLOBAL_KEYS[2])?;
    let file_threads: Option<usize> = take_global(&mut file, GLOBAL_KEYS[3])?;

    let mut params: Map<String, Value> = match serde_json::to_value(&file) {
        Ok(Value::Object(map)) => map,
        _ => Map::new(),
    };
    for (k, v) in cli.command.flag_values()? {
        params.insert(k, v);
    }

    let threads = cli.threads.or(file_threads);
    if threads == Some(0) {
        return Err(CliError::config("threads", "must be >= 1"));
    }
    let kind = cli.command.kind();
    Ok(RunConfig {
        command: kind,
        params: commands::normalize(kind, params)?,
        seed: cli.seed.or(file_seed).unwrap_or(DEFAULT_SEED),
        output_path: cli.output.or(file_output),
        format: cli.format.or(file_format).unwrap_or_default(),
        threads,
    })
}

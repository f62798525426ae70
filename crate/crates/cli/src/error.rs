use std::path::PathBuf;

use serde_json::json;
use thiserror::Error;

/// Everything that can stop a run, mapped onto exit codes.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flag, config entry or parameter value. `key` names the offender
    /// when one can be identified.
    #[error("{}", match key { Some(k) => format!("{k}: {message}"), None => message.clone() })]
    Config { key: Option<String>, message: String },

    #[error(transparent)]
    Core(#[from] qhop::Error),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn config(key: &str, message: impl Into<String>) -> Self {
        CliError::Config {
            key: Some(key.to_string()),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config { .. } => "config",
            CliError::Core(qhop::Error::InvalidInput(_)) => "config",
            CliError::Core(qhop::Error::ResourceGuard { .. }) => "resource_guard",
            CliError::Core(qhop::Error::Numerical(_)) => "numerical",
            CliError::Core(_) | CliError::Io { .. } => "io",
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self.kind() {
            "config" => 2,
            "resource_guard" => 3,
            "numerical" => 4,
            _ => 1,
        }
    }

    /// Machine-readable error record for stderr.
    pub fn to_json(&self) -> serde_json::Value {
        let key = match self {
            CliError::Config { key, .. } => key.clone(),
            _ => None,
        };
        json!({
            "error": {
                "kind": self.kind(),
                "key": key,
                "message": self.to_string(),
                "exit_code": self.exit_code(),
            }
        })
    }
}

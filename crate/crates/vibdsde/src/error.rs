use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config parse error: {0}")]
    ConfigParse(String),

    #[error("invalid config at `{key}`: {msg}")]
    Validation { key: String, msg: String },

    #[error("{0}")]
    Runtime(#[from] vibdsde_core::Error),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("verification failed: {0}")]
    VerificationFailed(String),
}

impl CliError {
    pub fn invalid(key: impl Into<String>, msg: impl std::fmt::Display) -> Self {
        CliError::Validation { key: key.into(), msg: msg.to_string() }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    /// 2 for config problems, 3 for runtime failures, 4 for failed checks.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ConfigParse(_) | CliError::Validation { .. } => 2,
            CliError::Runtime(_) | CliError::Io { .. } => 3,
            CliError::VerificationFailed(_) => 4,
        }
    }

    pub fn category(&self) -> &'static str {
        match self {
            CliError::ConfigParse(_) => "config_parse",
            CliError::Validation { .. } => "validation",
            CliError::Runtime(_) => "runtime",
            CliError::Io { .. } => "io",
            CliError::VerificationFailed(_) => "verification",
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

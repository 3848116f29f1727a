//! CLI-level errors. Field validation errors carry the config field path.

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("config parse error: {0}")]
    Parse(#[from] serde_json::Error),

    #[error("invalid config field '{field}': {message}")]
    Field { field: String, message: String },

    #[error("subcommand '{mode}' cannot run an experiment of kind '{kind}'")]
    ModeMismatch { mode: &'static str, kind: String },

    #[error(transparent)]
    Core(#[from] nnlmf::Error),

    #[error("dB conversion requires a positive value, got {value}")]
    NonPositiveDb { value: f64 },
}

impl CliError {
    pub fn field(field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Field { field: field.into(), message: message.into() }
    }
}

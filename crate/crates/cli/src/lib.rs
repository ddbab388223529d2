//! Library side of the `polar-tls` command: sweep configuration, grid
//! evaluation, output writers and the cascade summary. `main.rs` only parses
//! flags and dispatches here.

pub mod config;
pub mod run;
pub mod sweep;
pub mod table;

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, bad config file contents or an invalid combination of them.
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Compute(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn compute(err: impl std::fmt::Display) -> Self {
        CliError::Compute(err.to_string())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    /// 2 for usage errors, 1 for everything that fails after validation.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Compute(_) | CliError::Io { .. } => 1,
        }
    }
}

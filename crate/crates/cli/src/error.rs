use std::path::PathBuf;

use nego_core::{ConfigError, ParseError, PolicyError, QeError};
use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const IO: i32 = 1;
    pub const PARSE: i32 = 2;
    pub const RESOURCE: i32 = 3;
    pub const VALIDATION: i32 = 4;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Resource(#[from] QeError),
    #[error("{0}")]
    Validation(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Read { .. } | CliError::Io(_) => exit::IO,
            CliError::Parse(_) => exit::PARSE,
            CliError::Resource(_) => exit::RESOURCE,
            CliError::Validation(_) => exit::VALIDATION,
        }
    }
}

impl From<ParseError> for CliError {
    fn from(e: ParseError) -> Self {
        CliError::Parse(e.to_string())
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Parse(p) => p.into(),
            ConfigError::Resource(r) => r.into(),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<PolicyError> for CliError {
    fn from(e: PolicyError) -> Self {
        match e {
            PolicyError::Parse(p) => p.into(),
            PolicyError::Config(c) => c.into(),
            PolicyError::Resource(r) => r.into(),
            invalid @ PolicyError::Invalid(_) => CliError::Validation(invalid.to_string()),
        }
    }
}

pub fn read(path: &std::path::Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Read { path: path.to_path_buf(), source })
}

//! Command-line front end for `cvtherm`.
//!
//! Every subcommand reads a flat TOML [`RunConfig`](config::RunConfig) and
//! writes one deterministic file: JSON for `steady` and `fit`, CSV for
//! `curve` and `bench`. Exit codes are 0 on success, 1 for configuration
//! errors, 2 when a parameter point has no stable steady state and 3 for any
//! other runtime failure.

pub mod commands;
pub mod config;
pub mod format;

use thiserror::Error;

pub use config::{ConfigError, RunConfig};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),

    #[error("{0}")]
    Unstable(String),

    #[error("{0}")]
    Runtime(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Unstable(_) => 2,
            CliError::Runtime(_) | CliError::Io(_) => 3,
        }
    }
}

impl From<cvtherm::Error> for CliError {
    fn from(e: cvtherm::Error) -> Self {
        match e {
            cvtherm::Error::Unstable { .. } => CliError::Unstable(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

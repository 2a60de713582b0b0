//! Command-line pipelines over the `metapop` library: configuration
//! parsing, input loading, subcommand dispatch and run manifests.

pub mod commands;
pub mod config;
pub mod manifest;

use std::path::PathBuf;

use thiserror::Error;

pub use commands::{dispatch, Command};
pub use config::{parse_config, parse_config_str, LoadedConfig, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed or inconsistent configuration.
    #[error("{0}")]
    Config(String),

    /// Input data or settings rejected by the library before any run.
    #[error("invalid input: {0}")]
    Invalid(#[source] metapop::Error),

    /// Failure while computing.
    #[error(transparent)]
    Run(#[from] metapop::Error),

    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0} verification check(s) failed")]
    ChecksFailed(usize),
}

impl CliError {
    /// 1 for validation errors, 2 for runtime aborts.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Invalid(_) => 1,
            CliError::Run(_) | CliError::Output { .. } | CliError::ChecksFailed(_) => 2,
        }
    }
}

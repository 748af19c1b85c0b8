//! Experiment runner for the `dampwave` crate: TOML configs, named
//! reproduction experiments, sweeps and CSV/JSON artifacts.

use std::path::Path;

use thiserror::Error;

pub mod commands;
pub mod config;
pub mod experiments;
pub mod output;
pub mod sweep;

pub use config::ExperimentConfig;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("acceptance check failed: {0}")]
    Acceptance(String),
    #[error("io error: {0}")]
    Io(String),
}

impl CliError {
    pub fn numerical<E: std::fmt::Display>(e: E) -> Self {
        CliError::Numerical(e.to_string())
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }

    /// 1 config (and io), 2 numerical, 3 acceptance.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::Acceptance(_) => 3,
        }
    }
}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}

//! Pipeline commands behind the `mwp` binary, usable as a library.

pub mod commands;
pub mod config;

use thiserror::Error;

pub use commands::{
    cmd_datagen, cmd_eval, cmd_grid, cmd_solve_equation, cmd_solve_problem, cmd_split, cmd_train, GridCell,
    PredictionSource, TrainOutcome,
};
pub use config::RunConfig;

/// Failure classes, each with its own exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Runtime(_) => 4,
        }
    }
}

impl From<mwp_core::DatasetError> for CliError {
    fn from(e: mwp_core::DatasetError) -> Self {
        match e {
            mwp_core::DatasetError::Io(io) => CliError::Runtime(io.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<mwp_core::model::ModelError> for CliError {
    fn from(e: mwp_core::model::ModelError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<mwp_core::model::CheckpointError> for CliError {
    fn from(e: mwp_core::model::CheckpointError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<mwp_core::model::AdapterError> for CliError {
    fn from(e: mwp_core::model::AdapterError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<mwp_core::metrics::MetricsError> for CliError {
    fn from(e: mwp_core::metrics::MetricsError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<mwp_core::preprocess::VocabError> for CliError {
    fn from(e: mwp_core::preprocess::VocabError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

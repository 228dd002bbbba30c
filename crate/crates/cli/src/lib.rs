//! Library side of the `qqn` command: run configuration and the three subcommands.

pub mod commands;
pub mod config;

use qqn_core::qnet::CheckpointError;
use qqn_core::trainer::TrainError;
use qqn_core::world::WorldError;
use thiserror::Error;

pub use commands::{eval, export_traj, train, TrainReport};
pub use config::{build, FlagValues, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical divergence: {0}")]
    Divergence(String),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Divergence(_) => 3,
            CliError::Other(_) => 1,
        }
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::Config(_) | TrainError::World(WorldError::Config(_)) => CliError::Config(e.to_string()),
            TrainError::Divergence { .. } => CliError::Divergence(e.to_string()),
            other => CliError::Other(other.to_string()),
        }
    }
}

impl From<CheckpointError> for CliError {
    fn from(e: CheckpointError) -> Self {
        CliError::Other(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Other(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Other(e.to_string())
    }
}

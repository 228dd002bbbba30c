//! Training loop, replay memory and greedy evaluation.

mod config;
mod eval;
mod replay;
mod train;

pub use config::TrainConfig;
pub use eval::{evaluate, evaluate_checkpoint, greedy_rollout, EvalSummary, Rollout, TrajectoryPoint};
pub use replay::{sample_batch, ReplayBuffer, Transition};
pub use train::{
    explore_action, train, write_train_log, EpisodeLog, StepReport, TrainOutput, Trainer, TRAIN_LOG_HEADER,
};

use thiserror::Error;

use crate::nn::NnError;
use crate::qnet::{CheckpointError, QError};
use crate::scenario::Scenario;
use crate::world::WorldError;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("replay buffer holds {have} transitions, batch needs {need}")]
    Underfilled { have: usize, need: usize },
    #[error("training diverged at episode {episode}, gradient step {gradient_step}: {what}")]
    Divergence {
        episode: usize,
        gradient_step: u64,
        what: String,
    },
    #[error("all episodes already ran")]
    Finished,
    #[error("evaluation needs at least one episode")]
    NoEpisodes,
    #[error("network is for {found}, scenario is {expected}")]
    ScenarioMismatch { expected: Scenario, found: Scenario },
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Q(#[from] QError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
}

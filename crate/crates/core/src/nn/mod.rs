//! Small dense networks with exact reverse-mode gradients and an Adam optimizer.

mod adam;
mod mlp;

pub use adam::AdamState;
pub use mlp::{Activation, Gradients, Mlp, Tape};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NnError {
    #[error("input has {got} values, network expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("parameter vector has {got} entries, expected {expected}")]
    ParamCount { expected: usize, got: usize },
    #[error("tape was recorded on a different network or before a parameter update")]
    StaleTape,
    #[error("networks have different layer sizes")]
    ShapeMismatch,
}

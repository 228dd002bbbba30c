//! Quadratic Q-function whose maximizing action is a PID-like control law.

mod checkpoint;
mod net;

pub use checkpoint::{Checkpoint, CheckpointError, RngSnapshot};
pub use net::{
    pid_features, td_target, Head, LossAndGrads, NetShape, PidFeatures, QError, QGrads, QHeads, QuadraticQNet,
    T_MIN,
};

//! Highway segment with randomized background traffic and the two maneuver scenarios.

mod config;
mod episode;
mod gap;
pub mod observation;
mod telemetry;
mod traffic;

use std::fmt;

pub use config::{ConfigError, DriverStyle, Range, ScenarioConfig};
pub use episode::WorldState;
pub use gap::{bracketing_gap_acceptable, choose_gap};
pub use observation::{obs_dim, Observation};
pub use telemetry::{TelemetryLog, TELEMETRY_HEADER};
pub use traffic::{BackgroundVehicle, Footprint, Traffic, TrafficSim};

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Running,
    Success,
    /// Contact with another vehicle, leaving the road, or losing heading control.
    Collision,
    Timeout,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Running => "running",
            Outcome::Success => "success",
            Outcome::Collision => "collision",
            Outcome::Timeout => "timeout",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult<T> {
    pub next_obs: Observation<T>,
    pub reward: T,
    pub terminal: bool,
    pub outcome: Outcome,
    /// The control after clamping to the scenario's range.
    pub applied_action: T,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WorldError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("episode already ended")]
    Terminal,
    #[error("action is not finite")]
    NonFiniteAction,
}

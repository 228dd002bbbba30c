//! Continuous vehicle control with quadratic Q-learning.
//!
//! The crate contains a small highway simulator with lane-change and on-ramp merge
//! scenarios, the reward model, dense networks with hand-written gradients, the
//! quadratic Q-network and its training loop. All numeric code is generic over
//! [`Real`]; the `*64` aliases fix the scalar to `f64`.

// `!(x > 0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod nn;
pub mod qnet;
pub mod reward;
pub mod scalar;
pub mod scenario;
pub mod seed;
pub mod trainer;
pub mod vehicle;
pub mod world;

pub use qnet::{Checkpoint, QuadraticQNet};
pub use reward::RewardConfig;
pub use scalar::Real;
pub use scenario::Scenario;
pub use trainer::{TrainConfig, Trainer};
pub use world::{Observation, Outcome, ScenarioConfig, WorldState};

pub type QuadraticQNet64 = QuadraticQNet<f64>;
pub type Checkpoint64 = Checkpoint<f64>;
pub type WorldState64 = WorldState<f64>;
pub type ScenarioConfig64 = ScenarioConfig<f64>;
pub type RewardConfig64 = RewardConfig<f64>;
pub type TrainConfig64 = TrainConfig<f64>;
pub type Trainer64 = Trainer<f64>;

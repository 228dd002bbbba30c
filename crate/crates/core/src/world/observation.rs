//! Fixed observation layouts. Every entry is a physical quantity divided by the
//! scale listed next to its index.

use crate::scalar::Real;
use crate::scenario::Scenario;

/// Normalized state vector fed to all networks.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation<T>(pub Vec<T>);

impl<T: Real> Observation<T> {
    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn all_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    /// Physical value of entry `index` for `scenario`.
    pub fn raw(&self, scenario: Scenario, index: usize) -> T {
        self.0[index] * T::c(scale(scenario, index))
    }
}

pub const POSITION_SCALE: f64 = 100.0;
pub const SPEED_DIFF_SCALE: f64 = 10.0;
pub const SPEED_SCALE: f64 = 30.0;

pub mod lane_change {
    pub const DIM: usize = 10;
    /// Signed lateral offset to the target-lane centerline (m), positive when the target is to the left.
    pub const DELTA_D_LT: usize = 0;
    pub const SPEED: usize = 1;
    pub const THETA: usize = 2;
    pub const OMEGA: usize = 3;
    pub const GAP_LEAD_DX: usize = 4;
    pub const GAP_LEAD_DV: usize = 5;
    pub const GAP_LAG_DX: usize = 6;
    pub const GAP_LAG_DV: usize = 7;
    pub const OWN_LEAD_DX: usize = 8;
    pub const CURVATURE: usize = 9;
    pub const SCALES: [f64; DIM] = [3.7, 30.0, 0.1, 0.1, 100.0, 10.0, 100.0, 10.0, 100.0, 0.01];
}

pub mod ramp_merge {
    pub const DIM: usize = 8;
    pub const SPEED: usize = 0;
    pub const DIST_TO_MERGE: usize = 1;
    pub const OWN_LEAD_DX: usize = 2;
    pub const OWN_LEAD_DV: usize = 3;
    pub const GAP_LEAD_DX: usize = 4;
    pub const GAP_LEAD_DV: usize = 5;
    pub const GAP_LAG_DX: usize = 6;
    pub const GAP_LAG_DV: usize = 7;
    pub const SCALES: [f64; DIM] = [30.0, 150.0, 100.0, 10.0, 100.0, 10.0, 100.0, 10.0];
}

pub fn obs_dim(scenario: Scenario) -> usize {
    match scenario {
        Scenario::LaneChange => lane_change::DIM,
        Scenario::RampMerge => ramp_merge::DIM,
    }
}

pub fn scale(scenario: Scenario, index: usize) -> f64 {
    match scenario {
        Scenario::LaneChange => lane_change::SCALES[index],
        Scenario::RampMerge => ramp_merge::SCALES[index],
    }
}

/// Normalizes a vector of physical values laid out for `scenario`.
pub fn normalize<T: Real>(scenario: Scenario, raw: &[T]) -> Observation<T> {
    debug_assert_eq!(raw.len(), obs_dim(scenario));
    Observation(
        raw.iter()
            .enumerate()
            .map(|(i, &v)| v / T::c(scale(scenario, i)))
            .collect(),
    )
}

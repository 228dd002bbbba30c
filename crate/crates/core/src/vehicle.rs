//! Point-mass-with-heading kinematics and the max-variant Intelligent Driver Model.

use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("non-positive spacing {0} to leader (vehicles already overlap)")]
    NonPositiveSpacing(f64),
    #[error("invalid IDM parameter {name}={value}: must be strictly positive")]
    InvalidParam { name: &'static str, value: f64 },
}

/// Pose and kinematics of one vehicle. `theta` is measured from the road axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleState<T> {
    pub x: T,
    pub y: T,
    pub v: T,
    pub theta: T,
    pub omega: T,
    pub lane_id: i32,
    pub length: T,
}

impl<T: Real> VehicleState<T> {
    /// A vehicle travelling straight along the road axis.
    pub fn on_axis(x: T, y: T, v: T, lane_id: i32, length: T) -> Self {
        Self {
            x,
            y,
            v,
            theta: T::zero(),
            omega: T::zero(),
            lane_id,
            length,
        }
    }
}

/// Parameters of the car-following law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdmParams<T> {
    /// Desired free-flow speed (m/s).
    pub v0: T,
    /// Minimum standstill spacing (m).
    pub s0: T,
    /// Minimum time headway (s).
    pub headway: T,
    /// Maximum acceleration (m/s²).
    pub a_max: T,
    /// Comfortable braking deceleration (m/s²).
    pub b: T,
    pub delta: T,
}

impl<T: Real> IdmParams<T> {
    /// s0 = 1 m, T = 1 s, a_m = 2 m/s², b = 1.5 m/s², δ = 4 with the given free-flow speed.
    pub fn with_desired_speed(v0: T) -> Self {
        Self {
            v0,
            s0: T::one(),
            headway: T::one(),
            a_max: T::c(2.0),
            b: T::c(1.5),
            delta: T::c(4.0),
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let fields = [
            ("v0", self.v0),
            ("s0", self.s0),
            ("T", self.headway),
            ("a_m", self.a_max),
            ("b", self.b),
            ("delta", self.delta),
        ];
        for (name, value) in fields {
            if !(value > T::zero()) {
                return Err(ModelError::InvalidParam {
                    name,
                    value: value.to_f64_lossy(),
                });
            }
        }
        Ok(())
    }

    /// Desired dynamic gap s* = s0 + max(0, v·T + v·Δv / (2·√(a_m·b))).
    ///
    /// The dynamic part is clamped at zero: with a quickly receding leader it would
    /// otherwise turn negative and `(s*/s)²` would grow again.
    pub fn desired_gap(&self, ego_v: T, delta_v: T) -> T {
        let two = T::c(2.0);
        let dynamic = ego_v * self.headway + ego_v * delta_v / (two * (self.a_max * self.b).sqrt());
        self.s0 + dynamic.max(T::zero())
    }
}

impl Default for IdmParams<f64> {
    fn default() -> Self {
        Self::with_desired_speed(30.0)
    }
}

fn speed_ratio_term<T: Real>(ego_v: T, params: &IdmParams<T>) -> T {
    (ego_v / params.v0).powf(params.delta)
}

/// Longitudinal acceleration behind a leader. `delta_v` is ego speed minus leader speed
/// and `spacing` the bumper-to-bumper gap.
///
/// Uses the less conservative form `a_m·(1 − max((v/v0)^δ, (s*/s)²))` instead of the
/// additive one, so a vehicle following at its desired gap still reaches `v0`.
pub fn idm_acceleration<T: Real>(
    ego_v: T,
    delta_v: T,
    spacing: T,
    params: &IdmParams<T>,
) -> Result<T, ModelError> {
    if !(spacing > T::zero()) {
        return Err(ModelError::NonPositiveSpacing(spacing.to_f64_lossy()));
    }
    let free = speed_ratio_term(ego_v, params);
    let interaction = (params.desired_gap(ego_v, delta_v) / spacing).powi(2);
    Ok(params.a_max * (T::one() - free.max(interaction)))
}

/// Free-road acceleration `a_m·(1 − (v/v0)^δ)`, used when no leader is in range.
pub fn no_leader_acceleration<T: Real>(ego_v: T, params: &IdmParams<T>) -> T {
    params.a_max * (T::one() - speed_ratio_term(ego_v, params))
}

/// Advances one vehicle by `dt` with semi-implicit Euler. `a_lt` is yaw acceleration.
/// Speed is clamped at zero; vehicles never reverse.
pub fn step_kinematics<T: Real>(state: &VehicleState<T>, a_lg: T, a_lt: T, dt: T) -> VehicleState<T> {
    let omega = state.omega + a_lt * dt;
    let theta = state.theta + omega * dt;
    let v = (state.v + a_lg * dt).max(T::zero());
    VehicleState {
        x: state.x + v * theta.cos() * dt,
        y: state.y + v * theta.sin() * dt,
        v,
        theta,
        omega,
        ..*state
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn defaults(v0: f64) -> IdmParams<f64> {
        IdmParams::with_desired_speed(v0)
    }

    #[test]
    fn free_flow_equilibrium_is_exact() {
        let p = defaults(30.0);
        assert_eq!(idm_acceleration(30.0, 0.0, 1e6, &p).unwrap(), 0.0);
    }

    #[test]
    fn standstill_equilibrium_at_minimum_gap() {
        let p = defaults(30.0);
        assert_eq!(idm_acceleration(0.0, 0.0, 1.0, &p).unwrap(), 0.0);
    }

    #[test]
    fn acceleration_from_rest_with_distant_leader() {
        let p = defaults(30.0);
        let a = idm_acceleration(0.0, 0.0, 100.0, &p).unwrap();
        assert!((a - 1.9998).abs() < 1e-12, "{a}");
    }

    #[test]
    fn overlap_is_rejected() {
        let p = defaults(30.0);
        assert!(matches!(
            idm_acceleration(10.0, 0.0, 0.0, &p),
            Err(ModelError::NonPositiveSpacing(_))
        ));
        assert!(idm_acceleration(10.0, 0.0, -2.0, &p).is_err());
    }

    #[test]
    fn free_road_cases() {
        let p = defaults(30.0);
        assert_eq!(no_leader_acceleration(30.0, &p), 0.0);
        assert_eq!(no_leader_acceleration(0.0, &p), 2.0);
        assert_eq!(no_leader_acceleration(60.0, &p), -30.0);
    }

    #[test]
    fn invalid_params_rejected() {
        let mut p = defaults(30.0);
        assert!(p.validate().is_ok());
        p.b = 0.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn straight_constant_speed_advance() {
        let s = VehicleState::on_axis(5.0f64, 1.0, 12.0, 0, 4.5);
        let n = step_kinematics(&s, 0.0, 0.0, 0.1);
        assert!((n.x - 6.2).abs() < 1e-12);
        assert_eq!(n.y, 1.0);
        assert_eq!(n.v, 12.0);
    }

    #[test]
    fn no_reversing() {
        let s = VehicleState::on_axis(5.0, 1.0, 0.0, 0, 4.5);
        let n = step_kinematics(&s, -1.0, 0.0, 0.1);
        assert_eq!(n.v, 0.0);
        assert_eq!(n.x, 5.0);
    }

    #[test]
    fn yaw_acceleration_integrates_semi_implicitly() {
        let s = VehicleState::on_axis(0.0f64, 0.0, 10.0, 1, 4.5);
        let n = step_kinematics(&s, 0.0, 0.1, 0.1);
        assert!((n.omega - 0.01).abs() < 1e-15);
        assert!((n.theta - 0.001).abs() < 1e-15);
        assert!((n.y - 10.0 * 0.001f64.sin() * 0.1).abs() < 1e-15);
        assert!((n.y - 0.001).abs() < 1e-9);
    }

    #[test]
    fn works_in_single_precision() {
        let p = IdmParams::<f32>::with_desired_speed(30.0);
        assert_eq!(idm_acceleration(30.0f32, 0.0, 1e6, &p).unwrap(), 0.0);
    }

    proptest! {
        #[test]
        fn idm_monotone_in_speed_and_spacing(
            v in 0.0f64..40.0, dv in -10.0f64..10.0, s in 0.5f64..200.0,
            dvel in 0.0f64..5.0, ds in 0.0f64..50.0, v0 in 10.0f64..40.0,
        ) {
            let p = defaults(v0);
            let base = idm_acceleration(v, dv, s, &p).unwrap();
            let faster = idm_acceleration(v + dvel, dv, s, &p).unwrap();
            let wider = idm_acceleration(v, dv, s + ds, &p).unwrap();
            prop_assert!(faster <= base + 1e-12);
            prop_assert!(wider >= base - 1e-12);
            prop_assert!(base <= p.a_max);
        }

        #[test]
        fn stopped_vehicle_stays_put(a in -5.0f64..=0.0, lt in -0.4f64..0.4, x in -100.0f64..100.0) {
            let s = VehicleState::on_axis(x, 2.0, 0.0, 0, 4.5);
            let n = step_kinematics(&s, a, lt, 0.1);
            prop_assert_eq!(n.x, s.x);
            prop_assert_eq!(n.y, s.y);
        }
    }
}

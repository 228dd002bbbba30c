//! Immediate reward: weighted safety, comfort and efficiency features, all non-positive.
//!
//! Lane change penalizes lateral offset to the target centerline, yaw acceleration and
//! yaw rate. Ramp merge penalizes proximity to the two gap vehicles and longitudinal
//! acceleration. Both pay a constant price per elapsed time step.

use crate::scalar::Real;
use crate::scenario::Scenario;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardConfig<T> {
    pub scenario: Scenario,
    /// Longitudinal proximity weight (ramp merge).
    pub w_s1: T,
    /// Lateral offset weight (lane change).
    pub w_s2: T,
    /// Control magnitude weight.
    pub w_c1: T,
    /// Yaw rate weight (lane change).
    pub w_c2: T,
    /// Elapsed time weight.
    pub w_t: T,
    /// Distance at which one gap vehicle costs exactly `w_s1`.
    pub d_ref: T,
    /// One-off penalty charged on the step that ends in a collision or road departure.
    pub collision_penalty: T,
}

impl<T: Real> RewardConfig<T> {
    pub fn for_scenario(scenario: Scenario) -> Self {
        let z = T::zero();
        match scenario {
            Scenario::LaneChange => Self {
                scenario,
                w_s1: z,
                w_s2: T::c(0.05),
                w_c1: T::c(0.5),
                w_c2: T::c(2.0),
                w_t: T::c(0.05),
                d_ref: T::c(10.0),
                collision_penalty: T::c(20.0),
            },
            Scenario::RampMerge => Self {
                scenario,
                w_s1: T::c(0.01),
                w_s2: z,
                w_c1: T::c(0.5),
                w_c2: z,
                w_t: T::c(0.05),
                d_ref: T::c(10.0),
                collision_penalty: T::c(10.0),
            },
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let weights = [
            ("w_s1", self.w_s1),
            ("w_s2", self.w_s2),
            ("w_c1", self.w_c1),
            ("w_c2", self.w_c2),
            ("w_t", self.w_t),
            ("collision_penalty", self.collision_penalty),
        ];
        for (name, w) in weights {
            if !(w >= T::zero()) || !w.is_finite() {
                return Err(format!("reward.{name} must be a finite non-negative number"));
            }
        }
        if !(self.d_ref > T::zero()) {
            return Err("reward.d_ref must be positive".into());
        }
        Ok(())
    }
}

/// Per-step quantities the reward features read.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardInputs<T> {
    /// Signed lateral offset to the target-lane centerline (m).
    pub delta_d_lt: T,
    /// Longitudinal clearance to the gap leader and gap lagger (m).
    pub gap_clearances: [T; 2],
    pub a_lt: T,
    pub a_lg: T,
    pub omega: T,
    pub dt: T,
}

impl<T: Real> RewardInputs<T> {
    pub fn zeroed(dt: T) -> Self {
        let z = T::zero();
        Self {
            delta_d_lt: z,
            gap_clearances: [T::c(1e3); 2],
            a_lt: z,
            a_lg: z,
            omega: z,
            dt,
        }
    }
}

/// Bounded inverse-distance proximity feature: `d_ref / max(d, 1)`.
pub fn proximity_feature<T: Real>(clearance: T, d_ref: T) -> T {
    d_ref / clearance.max(T::one())
}

pub fn safety_reward<T: Real>(inputs: &RewardInputs<T>, cfg: &RewardConfig<T>) -> T {
    match cfg.scenario {
        Scenario::LaneChange => -cfg.w_s2 * inputs.delta_d_lt.abs(),
        Scenario::RampMerge => {
            let sum = inputs
                .gap_clearances
                .iter()
                .fold(T::zero(), |acc, &d| acc + proximity_feature(d, cfg.d_ref));
            -cfg.w_s1 * sum
        }
    }
}

pub fn comfort_reward<T: Real>(inputs: &RewardInputs<T>, cfg: &RewardConfig<T>) -> T {
    match cfg.scenario {
        Scenario::LaneChange => -cfg.w_c1 * inputs.a_lt.abs() - cfg.w_c2 * inputs.omega.abs(),
        Scenario::RampMerge => -cfg.w_c1 * inputs.a_lg.abs(),
    }
}

pub fn efficiency_reward<T: Real>(inputs: &RewardInputs<T>, cfg: &RewardConfig<T>) -> T {
    -cfg.w_t * inputs.dt.abs()
}

pub fn total_reward<T: Real>(inputs: &RewardInputs<T>, cfg: &RewardConfig<T>) -> T {
    safety_reward(inputs, cfg) + comfort_reward(inputs, cfg) + efficiency_reward(inputs, cfg)
}

/// Extra terminal cost for a step that ends in a collision; zero otherwise.
pub fn terminal_penalty<T: Real>(collided: bool, cfg: &RewardConfig<T>) -> T {
    if collided {
        -cfg.collision_penalty
    } else {
        T::zero()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lc() -> RewardConfig<f64> {
        RewardConfig::for_scenario(Scenario::LaneChange)
    }

    fn rm() -> RewardConfig<f64> {
        RewardConfig::for_scenario(Scenario::RampMerge)
    }

    fn inputs(delta_d_lt: f64, a_lt: f64, omega: f64) -> RewardInputs<f64> {
        RewardInputs {
            delta_d_lt,
            a_lt,
            omega,
            ..RewardInputs::zeroed(0.1)
        }
    }

    #[test]
    fn lateral_safety() {
        assert_eq!(safety_reward(&inputs(0.0, 0.0, 0.0), &lc()), 0.0);
        let r = safety_reward(&inputs(1.85, 0.0, 0.0), &lc());
        assert!((r + 0.0925).abs() < 1e-15);
    }

    #[test]
    fn gap_proximity_safety() {
        let i = RewardInputs {
            gap_clearances: [10.0, 10.0],
            ..RewardInputs::zeroed(0.1)
        };
        assert!((safety_reward(&i, &rm()) + 0.02).abs() < 1e-15);
        let close = RewardInputs {
            gap_clearances: [0.2, 10.0],
            ..i
        };
        assert!((safety_reward(&close, &rm()) + 0.11).abs() < 1e-15);
    }

    #[test]
    fn comfort_terms() {
        assert_eq!(comfort_reward(&inputs(0.0, 0.0, 0.0), &lc()), 0.0);
        assert!((comfort_reward(&inputs(0.0, 0.5, 0.1), &lc()) + 0.45).abs() < 1e-15);
        let i = RewardInputs {
            a_lg: -4.5,
            ..RewardInputs::zeroed(0.1)
        };
        assert!((comfort_reward(&i, &rm()) + 2.25).abs() < 1e-15);
    }

    #[test]
    fn efficiency_per_step_and_per_episode() {
        let i = RewardInputs::zeroed(0.1);
        assert!((efficiency_reward(&i, &lc()) + 0.005).abs() < 1e-15);
        let free = RewardConfig { w_t: 0.0, ..lc() };
        assert_eq!(efficiency_reward(&i, &free), 0.0);
        let episode: f64 = (0..300).map(|_| efficiency_reward(&i, &lc())).sum();
        assert!((episode + 1.5).abs() < 1e-12);
    }

    #[test]
    fn worked_lane_change_total() {
        let r = total_reward(&inputs(1.85, 0.5, 0.1), &lc());
        assert!((r + 0.5475).abs() < 1e-12, "{r}");
        let only_time = total_reward(&RewardInputs::zeroed(0.1), &lc());
        assert_eq!(only_time, efficiency_reward(&RewardInputs::zeroed(0.1), &lc()));
    }

    #[test]
    fn terminal_penalty_only_on_collision() {
        assert_eq!(terminal_penalty(false, &lc()), 0.0);
        assert_eq!(terminal_penalty(true, &lc()), -20.0);
    }

    #[test]
    fn negative_weight_rejected() {
        let bad = RewardConfig { w_c1: -0.1, ..lc() };
        assert!(bad.validate().is_err());
        assert!(lc().validate().is_ok());
    }

    fn arb_inputs() -> impl Strategy<Value = RewardInputs<f64>> {
        (
            -20.0f64..20.0,
            0.01f64..500.0,
            0.01f64..500.0,
            -5.0f64..5.0,
            -5.0f64..5.0,
            -2.0f64..2.0,
            0.01f64..1.0,
        )
            .prop_map(|(d, c1, c2, a_lt, a_lg, omega, dt)| RewardInputs {
                delta_d_lt: d,
                gap_clearances: [c1, c2],
                a_lt,
                a_lg,
                omega,
                dt,
            })
    }

    proptest! {
        #[test]
        fn total_is_never_positive(i in arb_inputs()) {
            prop_assert!(total_reward(&i, &lc()) <= 0.0);
            prop_assert!(total_reward(&i, &rm()) <= 0.0);
        }

        #[test]
        fn clearance_order_is_irrelevant(i in arb_inputs()) {
            let swapped = RewardInputs { gap_clearances: [i.gap_clearances[1], i.gap_clearances[0]], ..i };
            prop_assert_eq!(total_reward(&i, &rm()), total_reward(&swapped, &rm()));
        }

        #[test]
        fn terms_monotone_in_magnitude(i in arb_inputs(), bump in 0.0f64..3.0) {
            let wider = RewardInputs { delta_d_lt: i.delta_d_lt.abs() + bump, ..i };
            prop_assert!(safety_reward(&wider, &lc()) <= safety_reward(&i, &lc()));
            let harder = RewardInputs { a_lt: i.a_lt.abs() + bump, a_lg: i.a_lg.abs() + bump, ..i };
            prop_assert!(comfort_reward(&harder, &lc()) <= comfort_reward(&i, &lc()));
            prop_assert!(comfort_reward(&harder, &rm()) <= comfort_reward(&i, &rm()));
        }

        #[test]
        fn comfort_linear_in_weight(i in arb_inputs()) {
            let doubled = RewardConfig { w_c1: 2.0 * lc().w_c1, w_c2: 0.0, ..lc() };
            let single = RewardConfig { w_c2: 0.0, ..lc() };
            prop_assert_eq!(comfort_reward(&i, &doubled), 2.0 * comfort_reward(&i, &single));
        }
    }
}

use crate::scalar::Real;
use crate::scenario::Scenario;
use crate::vehicle::IdmParams;

const KMH: f64 = 1.0 / 3.6;

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range<T> {
    pub lo: T,
    pub hi: T,
}

impl<T: Real> Range<T> {
    pub fn new(lo: T, hi: T) -> Self {
        Self { lo, hi }
    }

    pub fn clamp(&self, x: T) -> T {
        x.max(self.lo).min(self.hi)
    }

    pub fn contains(&self, x: T) -> bool {
        x >= self.lo && x <= self.hi
    }

    pub fn half_width(&self) -> T {
        (self.hi - self.lo) / T::c(2.0)
    }

    fn is_valid(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite() && self.lo <= self.hi
    }
}

/// Background driver temperament.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DriverStyle {
    Normal,
    /// Higher acceleration, shorter headway and standstill gap.
    Aggressive,
    /// Gentler acceleration, longer headway and standstill gap.
    Defensive,
}

impl DriverStyle {
    pub fn idm_params<T: Real>(self, v0: T) -> IdmParams<T> {
        let base = IdmParams::with_desired_speed(v0);
        match self {
            DriverStyle::Normal => base,
            DriverStyle::Aggressive => IdmParams {
                a_max: T::c(3.0),
                headway: T::c(0.5),
                s0: T::c(0.5),
                ..base
            },
            DriverStyle::Defensive => IdmParams {
                a_max: T::c(1.2),
                headway: T::c(1.8),
                s0: T::c(2.0),
                ..base
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid scenario config: {0}")]
pub struct ConfigError(pub String);

/// Road geometry, traffic generation and episode limits for one scenario.
/// Speeds are stored in m/s.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig<T> {
    pub scenario: Scenario,
    pub segment_length: T,
    pub lane_count: usize,
    pub lane_width: T,
    /// Distance the lane-change ego drives before the maneuver command.
    pub command_distance: T,
    /// Distance from the ramp-merge ego's spawn point to the merge point.
    pub ramp_start_distance: T,
    /// Longitudinal position from which the ramp ego may enter the rightmost lane.
    /// The ramp continues alongside that lane up to the segment end.
    pub merge_position: T,
    pub init_speed_range: Range<T>,
    pub departure_interval_range: Range<T>,
    pub speed_limit_range: Range<T>,
    pub aggressive_fraction: f64,
    pub defensive_fraction: f64,
    pub dt: T,
    pub max_episode_steps: usize,
    pub lg_action_range: Range<T>,
    pub lt_action_max: T,
    /// Minimum lead and lag clearance for accepting the bracketing gap.
    pub gap_min: T,
    /// Relative distances beyond this are reported as absent.
    pub sensor_range: T,
    /// Background traffic simulated before the ego enters.
    pub warmup_time: T,
    /// Longest wait for an acceptable gap after reaching the command distance.
    pub max_command_wait: T,
    pub vehicle_length: T,
    pub vehicle_width: T,
    /// Heading magnitude treated as loss of control.
    pub theta_limit: T,
    /// Paved width beyond each outer lane edge before the ego counts as off the road.
    pub shoulder_width: T,
}

impl<T: Real> ScenarioConfig<T> {
    pub fn for_scenario(scenario: Scenario) -> Self {
        Self {
            scenario,
            segment_length: T::c(350.0),
            lane_count: 3,
            lane_width: T::c(3.7),
            command_distance: T::c(150.0),
            ramp_start_distance: T::c(150.0),
            merge_position: T::c(250.0),
            init_speed_range: Range::new(T::c(30.0 * KMH), T::c(50.0 * KMH)),
            departure_interval_range: Range::new(T::c(5.0), T::c(10.0)),
            speed_limit_range: Range::new(T::c(80.0 * KMH), T::c(120.0 * KMH)),
            aggressive_fraction: 0.1,
            defensive_fraction: 0.1,
            dt: T::c(0.1),
            max_episode_steps: 300,
            lg_action_range: Range::new(T::c(-4.5), T::c(2.5)),
            lt_action_max: T::c(0.4),
            gap_min: T::c(10.0),
            sensor_range: T::c(100.0),
            warmup_time: T::c(40.0),
            max_command_wait: T::c(10.0),
            vehicle_length: T::c(4.5),
            vehicle_width: T::c(1.8),
            theta_limit: T::c(1.0),
            shoulder_width: T::c(2.5),
        }
    }

    /// Range of the learned control for this scenario.
    pub fn action_range(&self) -> Range<T> {
        match self.scenario {
            Scenario::LaneChange => Range::new(-self.lt_action_max, self.lt_action_max),
            Scenario::RampMerge => self.lg_action_range,
        }
    }

    /// Largest symmetric magnitude inside the action range; the greedy action never exceeds it.
    pub fn action_bound(&self) -> T {
        let r = self.action_range();
        (-r.lo).min(r.hi)
    }

    pub fn lane_center(&self, lane: i32) -> T {
        (T::c(lane as f64) + T::c(0.5)) * self.lane_width
    }

    pub fn middle_lane(&self) -> i32 {
        (self.lane_count / 2) as i32
    }

    pub fn road_width(&self) -> T {
        T::c(self.lane_count as f64) * self.lane_width
    }

    /// Centerline of the on-ramp, one lane width right of the rightmost lane.
    pub fn ramp_center(&self) -> T {
        self.lane_center(-1)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let err = |m: &str| Err(ConfigError(m.to_string()));
        for (name, r) in [
            ("init_speed_range", self.init_speed_range),
            ("departure_interval_range", self.departure_interval_range),
            ("speed_limit_range", self.speed_limit_range),
            ("lg_action_range", self.lg_action_range),
        ] {
            if !r.is_valid() {
                return Err(ConfigError(format!("{name} must be a nonempty finite interval")));
            }
        }
        if !(self.lg_action_range.lo <= T::zero() && self.lg_action_range.hi >= T::zero()) {
            return err("lg_action_range must contain 0");
        }
        if !(self.init_speed_range.lo >= T::zero()) {
            return err("init speeds must be non-negative");
        }
        if !(self.speed_limit_range.lo > T::zero()) {
            return err("speed limits must be positive");
        }
        if !(self.departure_interval_range.lo > T::zero()) {
            return err("departure intervals must be positive");
        }
        let fa = self.aggressive_fraction;
        let fd = self.defensive_fraction;
        if !(0.0..=1.0).contains(&fa) || !(0.0..=1.0).contains(&fd) || fa + fd > 1.0 {
            return err("driver style fractions must lie in [0,1] and sum to at most 1");
        }
        if !(self.dt > T::zero()) {
            return err("dt must be positive");
        }
        if self.max_episode_steps == 0 {
            return err("max_episode_steps must be positive");
        }
        if self.lane_count < 2 {
            return err("need at least two lanes");
        }
        for (name, v) in [
            ("segment_length", self.segment_length),
            ("lane_width", self.lane_width),
            ("lt_action_max", self.lt_action_max),
            ("gap_min", self.gap_min),
            ("sensor_range", self.sensor_range),
            ("vehicle_length", self.vehicle_length),
            ("vehicle_width", self.vehicle_width),
            ("theta_limit", self.theta_limit),
        ] {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(ConfigError(format!("{name} must be positive")));
            }
        }
        if !(self.command_distance >= T::zero()) || !(self.warmup_time >= T::zero()) {
            return err("command_distance and warmup_time must be non-negative");
        }
        if !(self.shoulder_width >= T::zero()) || !self.shoulder_width.is_finite() {
            return err("shoulder_width must be non-negative");
        }
        if !(self.max_command_wait >= T::zero()) {
            return err("max_command_wait must be non-negative");
        }
        if !(self.vehicle_width < self.lane_width) {
            return err("vehicle_width must be smaller than lane_width");
        }
        if self.theta_limit.to_f64_lossy() >= std::f64::consts::FRAC_PI_2 {
            return err("theta_limit must be below pi/2");
        }
        if self.scenario == Scenario::RampMerge {
            if !(self.ramp_start_distance > T::zero()) {
                return err("ramp_start_distance must be positive");
            }
            if !(self.merge_position < self.segment_length)
                || !(self.merge_position - self.ramp_start_distance >= T::zero())
            {
                return err("merge point and ramp start must lie on the segment");
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        for s in Scenario::ALL {
            ScenarioConfig::<f64>::for_scenario(s).validate().unwrap();
        }
    }

    #[test]
    fn action_ranges() {
        let lc = ScenarioConfig::<f64>::for_scenario(Scenario::LaneChange);
        assert_eq!(lc.action_range(), Range::new(-0.4, 0.4));
        assert_eq!(lc.action_bound(), 0.4);
        let rm = ScenarioConfig::<f64>::for_scenario(Scenario::RampMerge);
        assert_eq!(rm.action_range(), Range::new(-4.5, 2.5));
        assert_eq!(rm.action_bound(), 2.5);
    }

    #[test]
    fn bad_fractions_rejected() {
        let mut c = ScenarioConfig::<f64>::for_scenario(Scenario::LaneChange);
        c.aggressive_fraction = 0.7;
        c.defensive_fraction = 0.5;
        assert!(c.validate().is_err());
    }

    #[test]
    fn inverted_range_rejected() {
        let mut c = ScenarioConfig::<f64>::for_scenario(Scenario::LaneChange);
        c.init_speed_range = Range::new(20.0, 10.0);
        assert!(c.validate().is_err());
        let mut c = ScenarioConfig::<f64>::for_scenario(Scenario::LaneChange);
        c.dt = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn ramp_runs_beside_rightmost_lane() {
        let c = ScenarioConfig::<f64>::for_scenario(Scenario::RampMerge);
        assert_eq!(c.ramp_center(), -1.85);
        assert_eq!(c.lane_center(0) - c.ramp_center(), c.lane_width);
    }
}

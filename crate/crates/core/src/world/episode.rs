use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{ConfigError, ScenarioConfig};
use super::gap::{bracketing_gap_acceptable, choose_gap};
use super::observation::{normalize, Observation};
use super::traffic::{sample, BackgroundVehicle, EgoProxy, Footprint, Traffic, EMERGENCY_DECEL};
use super::{Outcome, StepResult, WorldError};
use crate::reward::{terminal_penalty, total_reward, RewardConfig, RewardInputs};
use crate::scalar::Real;
use crate::scenario::Scenario;
use crate::vehicle::{idm_acceleration, no_leader_acceleration, step_kinematics, IdmParams, VehicleState};

/// Upper bound on simulated steps while waiting for the ego to enter or reach the command point.
const MAX_SETUP_STEPS: usize = 5000;

/// One episode: background traffic, the ego vehicle and the maneuver in progress.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldState<T> {
    config: ScenarioConfig<T>,
    reward: RewardConfig<T>,
    rng: ChaCha8Rng,
    traffic: Traffic<T>,
    ego: VehicleState<T>,
    ego_idm: IdmParams<T>,
    target_lane: i32,
    gap: (Option<u32>, Option<u32>),
    steps: usize,
    outcome: Outcome,
}

impl<T: Real> WorldState<T> {
    /// Generates traffic, places the ego and returns the first observation of the maneuver.
    ///
    /// Lane change: the ego enters the middle lane after the warm-up, follows its lane under
    /// IDM for `command_distance`, then receives a left or right command once the bracketing
    /// gap in that lane is acceptable (or `max_command_wait` has passed).
    /// Ramp merge: the ego starts on the ramp `ramp_start_distance` before the merge point.
    pub fn reset(
        config: ScenarioConfig<T>,
        reward: RewardConfig<T>,
        seed: u64,
    ) -> Result<(Self, Observation<T>), WorldError> {
        config.validate()?;
        reward.validate().map_err(ConfigError)?;
        if reward.scenario != config.scenario {
            return Err(WorldError::Config(ConfigError(
                "reward and scenario configs target different scenarios".into(),
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut traffic = Traffic::new(&config, &mut rng);
        let despawn = config.segment_length + T::c(2.0) * config.sensor_range;
        while traffic.time < config.warmup_time {
            traffic.step(&config, &mut rng, None, despawn);
        }

        let placeholder = VehicleState::on_axis(T::zero(), T::zero(), T::zero(), 0, config.vehicle_length);
        let mut world = Self {
            ego_idm: IdmParams::with_desired_speed(T::one()),
            ego: placeholder,
            target_lane: 0,
            gap: (None, None),
            steps: 0,
            outcome: Outcome::Running,
            config,
            reward,
            rng,
            traffic,
        };
        match world.config.scenario {
            Scenario::LaneChange => world.setup_lane_change(),
            Scenario::RampMerge => world.setup_ramp_merge(),
        }
        let obs = world.observe();
        Ok((world, obs))
    }

    fn setup_lane_change(&mut self) {
        let mid = self.config.middle_lane();
        for _ in 0..MAX_SETUP_STEPS {
            if self.traffic.entry_clear(mid, None) {
                break;
            }
            self.advance_traffic(None);
        }
        let v = sample(&mut self.rng, self.config.init_speed_range);
        let v0 = sample(&mut self.rng, self.config.speed_limit_range);
        self.ego = VehicleState::on_axis(T::zero(), self.config.lane_center(mid), v, mid, self.config.vehicle_length);
        self.ego_idm = IdmParams::with_desired_speed(v0);
        self.target_lane = mid;

        for _ in 0..MAX_SETUP_STEPS {
            if self.ego.x >= self.config.command_distance {
                break;
            }
            self.follow_lane_step();
        }

        let left = self.rng.random_bool(0.5);
        self.target_lane = if left { mid + 1 } else { mid - 1 };
        let waited_max = (self.config.max_command_wait / self.config.dt).ceil().to_f64_lossy() as usize;
        for _ in 0..waited_max {
            if bracketing_gap_acceptable(&self.target_lane_offsets(), self.config.gap_min, self.config.sensor_range) {
                break;
            }
            self.follow_lane_step();
        }
        self.gap = self.select_gap();
    }

    fn setup_ramp_merge(&mut self) {
        let x = self.config.merge_position - self.config.ramp_start_distance;
        let v = sample(&mut self.rng, self.config.init_speed_range);
        let v0 = sample(&mut self.rng, self.config.speed_limit_range);
        self.ego = VehicleState::on_axis(x, self.config.ramp_center(), v, -1, self.config.vehicle_length);
        self.ego_idm = IdmParams::with_desired_speed(v0);
        self.target_lane = 0;
        self.gap = self.select_gap();
    }

    /// Builds a world directly in the maneuver phase from explicit vehicles, with no
    /// warm-up. Background vehicles get ids 1, 2, … in order; the gap is selected as in
    /// `reset`.
    pub fn from_vehicles(
        config: ScenarioConfig<T>,
        reward: RewardConfig<T>,
        ego: VehicleState<T>,
        target_lane: i32,
        background: Vec<(VehicleState<T>, IdmParams<T>)>,
        seed: u64,
    ) -> Result<Self, WorldError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut traffic = Traffic::new(&config, &mut rng);
        traffic.vehicles = background
            .into_iter()
            .enumerate()
            .map(|(i, (state, idm))| BackgroundVehicle {
                id: i as u32 + 1,
                state,
                idm,
                style: super::DriverStyle::Normal,
            })
            .collect();
        let ego_idm = IdmParams::with_desired_speed(ego.v.max(T::one()));
        let mut world = Self {
            config,
            reward,
            rng,
            traffic,
            ego,
            ego_idm,
            target_lane,
            gap: (None, None),
            steps: 0,
            outcome: Outcome::Running,
        };
        world.gap = world.select_gap();
        Ok(world)
    }

    pub fn config(&self) -> &ScenarioConfig<T> {
        &self.config
    }

    pub fn reward_config(&self) -> &RewardConfig<T> {
        &self.reward
    }

    pub fn ego(&self) -> &VehicleState<T> {
        &self.ego
    }

    pub fn background(&self) -> &[BackgroundVehicle<T>] {
        &self.traffic.vehicles
    }

    pub fn target_lane(&self) -> i32 {
        self.target_lane
    }

    /// Gap vehicles chosen when the maneuver started.
    pub fn gap(&self) -> (Option<u32>, Option<u32>) {
        self.gap
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn outcome(&self) -> Outcome {
        self.outcome
    }

    pub fn is_terminal(&self) -> bool {
        self.outcome != Outcome::Running
    }

    pub fn time(&self) -> T {
        self.traffic.time
    }

    fn ego_footprint(&self) -> Footprint<T> {
        Footprint::of(&self.ego, self.config.vehicle_width)
    }

    fn lane_strip(&self, lane: i32) -> (T, T) {
        let lo = T::c(lane as f64) * self.config.lane_width;
        (lo, lo + self.config.lane_width)
    }

    fn ego_proxy(&self) -> EgoProxy<T> {
        let fp = self.ego_footprint();
        let half = T::c(0.5);
        let occupies = (0..self.config.lane_count as i32)
            .map(|lane| {
                let (lo, hi) = self.lane_strip(lane);
                fp.lateral_fraction_in(lo, hi) > half
            })
            .collect();
        EgoProxy {
            x: self.ego.x,
            v: self.ego.v,
            length: self.ego.length,
            occupies,
        }
    }

    fn despawn_x(&self) -> T {
        self.config.segment_length.max(self.ego.x) + T::c(2.0) * self.config.sensor_range
    }

    fn advance_traffic(&mut self, ego: Option<&EgoProxy<T>>) {
        let despawn = self.despawn_x();
        self.traffic.step(&self.config, &mut self.rng, ego, despawn);
    }

    /// Nearest vehicle ahead in any lane the ego footprint touches.
    fn own_leader(&self) -> Option<&BackgroundVehicle<T>> {
        let fp = self.ego_footprint();
        let strips: Vec<(i32, T, T)> = (0..self.config.lane_count as i32)
            .map(|l| {
                let (lo, hi) = self.lane_strip(l);
                (l, lo, hi)
            })
            .collect();
        self.traffic.nearest_ahead(self.ego.x, |lane| {
            strips
                .iter()
                .any(|&(l, lo, hi)| l == lane && fp.touches_strip(lo, hi))
        })
    }

    fn ego_idm_acceleration(&self) -> T {
        match self.own_leader() {
            None => no_leader_acceleration(self.ego.v, &self.ego_idm),
            Some(lead) => {
                let spacing = lead.state.x - self.ego.x - (lead.state.length + self.ego.length) / T::c(2.0);
                idm_acceleration(self.ego.v, self.ego.v - lead.state.v, spacing, &self.ego_idm)
                    .unwrap_or(-T::c(EMERGENCY_DECEL))
            }
        }
    }

    /// Lane keeping under IDM before the maneuver command.
    fn follow_lane_step(&mut self) {
        let a = self.ego_idm_acceleration();
        let proxy = self.ego_proxy();
        self.advance_traffic(Some(&proxy));
        self.ego = step_kinematics(&self.ego, a, T::zero(), self.config.dt);
    }

    fn target_lane_offsets(&self) -> Vec<(u32, T)> {
        self.traffic
            .vehicles
            .iter()
            .filter(|v| v.state.lane_id == self.target_lane)
            .map(|v| (v.id, v.state.x - self.ego.x))
            .collect()
    }

    /// Leader and lagger of the gap the ego should enter in the target lane.
    pub fn select_gap(&self) -> (Option<u32>, Option<u32>) {
        choose_gap(&self.target_lane_offsets(), self.config.gap_min, self.config.sensor_range)
    }

    /// (Δx, Δv) of a vehicle relative to the ego, or `None` when absent or out of range.
    fn relative(&self, id: Option<u32>) -> Option<(T, T)> {
        let v = self.traffic.find(id?)?;
        let dx = v.state.x - self.ego.x;
        (dx.abs() <= self.config.sensor_range).then(|| (dx, v.state.v - self.ego.v))
    }

    fn own_leader_relative(&self) -> (T, T) {
        let r = self.config.sensor_range;
        match self.own_leader() {
            Some(l) if l.state.x - self.ego.x <= r => (l.state.x - self.ego.x, l.state.v - self.ego.v),
            _ => (r, T::zero()),
        }
    }

    /// Signed lateral offset from the ego to the target-lane centerline.
    pub fn lateral_offset(&self) -> T {
        self.config.lane_center(self.target_lane) - self.ego.y
    }

    pub fn observe(&self) -> Observation<T> {
        let r = self.config.sensor_range;
        let z = T::zero();
        let (lead_dx, lead_dv) = self.relative(self.gap.0).unwrap_or((r, z));
        let (lag_dx, lag_dv) = self.relative(self.gap.1).unwrap_or((-r, z));
        let (own_dx, own_dv) = self.own_leader_relative();
        let raw = match self.config.scenario {
            Scenario::LaneChange => vec![
                self.lateral_offset(),
                self.ego.v,
                self.ego.theta,
                self.ego.omega,
                lead_dx,
                lead_dv,
                lag_dx,
                lag_dv,
                own_dx,
                // straight road
                z,
            ],
            Scenario::RampMerge => vec![
                self.ego.v,
                self.config.merge_position - self.ego.x,
                own_dx,
                own_dv,
                lead_dx,
                lead_dv,
                lag_dx,
                lag_dv,
            ],
        };
        normalize(self.config.scenario, &raw)
    }

    fn gap_clearances(&self) -> [T; 2] {
        let r = self.config.sensor_range;
        let bumper = |id: Option<u32>| {
            self.relative(id)
                .map(|(dx, _)| {
                    let other = self.traffic.find(id.unwrap()).map(|v| v.state.length).unwrap_or(self.ego.length);
                    dx.abs() - (other + self.ego.length) / T::c(2.0)
                })
                .unwrap_or(r)
        };
        [bumper(self.gap.0), bumper(self.gap.1)]
    }

    fn collided(&self) -> bool {
        let fp = self.ego_footprint();
        let w = self.config.vehicle_width;
        if self
            .traffic
            .vehicles
            .iter()
            .any(|v| Footprint::of(&v.state, w).overlaps(&fp))
        {
            return true;
        }
        match self.config.scenario {
            Scenario::LaneChange => {
                self.ego.y < -self.config.shoulder_width
                    || self.ego.y > self.config.road_width() + self.config.shoulder_width
                    || self.ego.theta.abs() >= self.config.theta_limit
            }
            Scenario::RampMerge => false,
        }
    }

    fn maneuver_complete(&self) -> bool {
        match self.config.scenario {
            Scenario::LaneChange => {
                self.lateral_offset().abs() < T::c(0.2)
                    && self.ego.theta.abs() < T::c(0.02)
                    && self.ego.omega.abs() < T::c(0.05)
            }
            Scenario::RampMerge => {
                self.ego.x >= self.config.merge_position
                    && bracketing_gap_acceptable(&self.target_lane_offsets(), self.config.gap_min, self.config.sensor_range)
            }
        }
    }

    /// Applies the (clamped) control for one `dt` and advances all traffic.
    pub fn step(&mut self, action: T) -> Result<StepResult<T>, WorldError> {
        if self.is_terminal() {
            return Err(WorldError::Terminal);
        }
        if !action.is_finite() {
            return Err(WorldError::NonFiniteAction);
        }
        let applied = self.config.action_range().clamp(action);
        let dt = self.config.dt;
        let proxy = self.ego_proxy();

        let (a_lg, a_lt) = match self.config.scenario {
            Scenario::LaneChange => (self.ego_idm_acceleration(), applied),
            Scenario::RampMerge => (applied, T::zero()),
        };
        self.advance_traffic(Some(&proxy));
        match self.config.scenario {
            Scenario::LaneChange => {
                self.ego = step_kinematics(&self.ego, a_lg, a_lt, dt);
                let lane = (self.ego.y / self.config.lane_width).floor().to_f64_lossy() as i32;
                self.ego.lane_id = lane.clamp(0, self.config.lane_count as i32 - 1);
            }
            Scenario::RampMerge => {
                let v = (self.ego.v + a_lg * dt).max(T::zero());
                let x = self.ego.x + v * dt;
                self.ego = VehicleState { x, v, ..self.ego };
            }
        }
        self.steps += 1;
        if self.config.scenario == Scenario::RampMerge {
            // mainline traffic keeps passing the ramp, so the target gap moves with it
            self.gap = self.select_gap();
        }

        let collided = self.collided();
        self.outcome = if collided {
            Outcome::Collision
        } else if self.maneuver_complete() {
            Outcome::Success
        } else if self.steps >= self.config.max_episode_steps
            || (self.config.scenario == Scenario::RampMerge && self.ego.x >= self.config.segment_length)
        {
            Outcome::Timeout
        } else {
            Outcome::Running
        };

        let inputs = RewardInputs {
            delta_d_lt: self.lateral_offset(),
            gap_clearances: self.gap_clearances(),
            a_lt,
            a_lg,
            omega: self.ego.omega,
            dt,
        };
        let reward = total_reward(&inputs, &self.reward) + terminal_penalty(collided, &self.reward);

        Ok(StepResult {
            next_obs: self.observe(),
            reward,
            terminal: self.is_terminal(),
            outcome: self.outcome,
            applied_action: applied,
        })
    }
}

//! Background traffic: spawning at the segment entry, IDM car following, despawning.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::config::{DriverStyle, Range, ScenarioConfig};
use crate::scalar::Real;
use crate::vehicle::{idm_acceleration, no_leader_acceleration, step_kinematics, IdmParams, VehicleState};

/// Deceleration applied when a follower already overlaps its leader.
pub(crate) const EMERGENCY_DECEL: f64 = 9.0;
/// A new vehicle only enters a lane when the nearest vehicle is this far downstream.
pub(crate) const ENTRY_CLEARANCE: f64 = 30.0;

#[derive(Debug, Clone, PartialEq)]
pub struct BackgroundVehicle<T> {
    pub id: u32,
    pub state: VehicleState<T>,
    pub idm: IdmParams<T>,
    pub style: DriverStyle,
}

/// Axis-aligned bounding box of a (possibly slightly rotated) vehicle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Footprint<T> {
    pub x_min: T,
    pub x_max: T,
    pub y_min: T,
    pub y_max: T,
}

impl<T: Real> Footprint<T> {
    pub fn of(state: &VehicleState<T>, width: T) -> Self {
        let (s, c) = (state.theta.sin().abs(), state.theta.cos().abs());
        let two = T::c(2.0);
        let half_len = (state.length * c + width * s) / two;
        let half_wid = (state.length * s + width * c) / two;
        Self {
            x_min: state.x - half_len,
            x_max: state.x + half_len,
            y_min: state.y - half_wid,
            y_max: state.y + half_wid,
        }
    }

    pub fn overlaps(&self, other: &Self) -> bool {
        self.x_min < other.x_max && other.x_min < self.x_max && self.y_min < other.y_max && other.y_min < self.y_max
    }

    /// Fraction of this footprint's lateral extent inside the strip `[lo, hi]`.
    pub fn lateral_fraction_in(&self, lo: T, hi: T) -> T {
        let overlap = self.y_max.min(hi) - self.y_min.max(lo);
        (overlap.max(T::zero())) / (self.y_max - self.y_min)
    }

    pub fn touches_strip(&self, lo: T, hi: T) -> bool {
        self.y_max > lo && self.y_min < hi
    }
}

/// What background drivers see of the ego vehicle.
#[derive(Debug, Clone)]
pub(crate) struct EgoProxy<T> {
    pub x: T,
    pub v: T,
    pub length: T,
    /// Lanes in which the ego covers more than half of its own width.
    pub occupies: Vec<bool>,
}

pub(crate) fn sample<T: Real>(rng: &mut ChaCha8Rng, r: Range<T>) -> T {
    let (lo, hi) = (r.lo.to_f64_lossy(), r.hi.to_f64_lossy());
    T::c(rng.random_range(lo..=hi))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Traffic<T> {
    pub vehicles: Vec<BackgroundVehicle<T>>,
    pub time: T,
    next_departure: Vec<T>,
    next_id: u32,
}

impl<T: Real> Traffic<T> {
    pub(crate) fn new(cfg: &ScenarioConfig<T>, rng: &mut ChaCha8Rng) -> Self {
        let next_departure = (0..cfg.lane_count)
            .map(|_| {
                let hi = cfg.departure_interval_range.hi.to_f64_lossy();
                T::c(rng.random_range(0.0..=hi))
            })
            .collect();
        Self {
            vehicles: Vec::new(),
            time: T::zero(),
            next_departure,
            next_id: 1,
        }
    }

    pub fn find(&self, id: u32) -> Option<&BackgroundVehicle<T>> {
        self.vehicles.iter().find(|v| v.id == id)
    }

    /// Nearest vehicle strictly ahead of `x` in any lane accepted by `in_lane`.
    pub fn nearest_ahead(&self, x: T, in_lane: impl Fn(i32) -> bool) -> Option<&BackgroundVehicle<T>> {
        self.vehicles
            .iter()
            .filter(|v| in_lane(v.state.lane_id) && v.state.x > x)
            .min_by(|a, b| a.state.x.partial_cmp(&b.state.x).unwrap_or(std::cmp::Ordering::Equal))
    }

    pub(crate) fn entry_clear(&self, lane: i32, ego: Option<&EgoProxy<T>>) -> bool {
        let clearance = T::c(ENTRY_CLEARANCE);
        let blocked_by_traffic = self
            .vehicles
            .iter()
            .any(|v| v.state.lane_id == lane && v.state.x < clearance);
        let blocked_by_ego = ego.is_some_and(|e| lane >= 0 && e.occupies[lane as usize] && e.x < clearance);
        !(blocked_by_traffic || blocked_by_ego)
    }

    fn acceleration(&self, idx: usize, ego: Option<&EgoProxy<T>>) -> T {
        let me = &self.vehicles[idx];
        let two = T::c(2.0);
        let mut leader: Option<(T, T, T)> = None; // (Δx, speed, length)
        for (j, other) in self.vehicles.iter().enumerate() {
            if j == idx || other.state.lane_id != me.state.lane_id {
                continue;
            }
            let dx = other.state.x - me.state.x;
            // equal positions: lower id counts as ahead so every pair has one leader
            let ahead = dx > T::zero() || (dx == T::zero() && other.id < me.id);
            if ahead && leader.is_none_or(|(best, _, _)| dx < best) {
                leader = Some((dx, other.state.v, other.state.length));
            }
        }
        if let Some(e) = ego {
            let lane = me.state.lane_id;
            if lane >= 0 && e.occupies[lane as usize] {
                let dx = e.x - me.state.x;
                if dx > T::zero() && leader.is_none_or(|(best, _, _)| dx < best) {
                    leader = Some((dx, e.v, e.length));
                }
            }
        }
        match leader {
            None => no_leader_acceleration(me.state.v, &me.idm),
            Some((dx, v_lead, len)) => {
                let spacing = dx - (me.state.length + len) / two;
                idm_acceleration(me.state.v, me.state.v - v_lead, spacing, &me.idm)
                    .unwrap_or(-T::c(EMERGENCY_DECEL))
            }
        }
    }

    fn spawn(&mut self, cfg: &ScenarioConfig<T>, lane: i32, rng: &mut ChaCha8Rng) {
        let v = sample(rng, cfg.init_speed_range);
        let v0 = sample(rng, cfg.speed_limit_range);
        let u: f64 = rng.random();
        let style = if u < cfg.aggressive_fraction {
            DriverStyle::Aggressive
        } else if u < cfg.aggressive_fraction + cfg.defensive_fraction {
            DriverStyle::Defensive
        } else {
            DriverStyle::Normal
        };
        let state = VehicleState::on_axis(T::zero(), cfg.lane_center(lane), v, lane, cfg.vehicle_length);
        self.vehicles.push(BackgroundVehicle {
            id: self.next_id,
            state,
            idm: style.idm_params(v0),
            style,
        });
        self.next_id += 1;
    }

    /// Advances every background vehicle by one `dt`, then despawns vehicles past
    /// `despawn_x` and admits new departures.
    pub(crate) fn step(
        &mut self,
        cfg: &ScenarioConfig<T>,
        rng: &mut ChaCha8Rng,
        ego: Option<&EgoProxy<T>>,
        despawn_x: T,
    ) {
        let accels: Vec<T> = (0..self.vehicles.len()).map(|i| self.acceleration(i, ego)).collect();
        for (v, a) in self.vehicles.iter_mut().zip(accels) {
            v.state = step_kinematics(&v.state, a, T::zero(), cfg.dt);
        }
        self.vehicles.retain(|v| v.state.x <= despawn_x);
        self.time = self.time + cfg.dt;

        for lane in 0..cfg.lane_count {
            if self.time >= self.next_departure[lane] && self.entry_clear(lane as i32, ego) {
                self.spawn(cfg, lane as i32, rng);
                self.next_departure[lane] = self.time + sample(rng, cfg.departure_interval_range);
            }
        }
    }

    /// Pairs of background vehicles whose footprints intersect.
    pub fn overlapping_pairs(&self, width: T) -> Vec<(u32, u32)> {
        let boxes: Vec<_> = self.vehicles.iter().map(|v| Footprint::of(&v.state, width)).collect();
        let mut out = Vec::new();
        for i in 0..boxes.len() {
            for j in i + 1..boxes.len() {
                if boxes[i].overlaps(&boxes[j]) {
                    out.push((self.vehicles[i].id, self.vehicles[j].id));
                }
            }
        }
        out
    }
}

/// Stand-alone background traffic with no ego vehicle.
#[derive(Debug, Clone)]
pub struct TrafficSim<T> {
    config: ScenarioConfig<T>,
    rng: ChaCha8Rng,
    traffic: Traffic<T>,
}

impl<T: Real> TrafficSim<T> {
    pub fn new(config: ScenarioConfig<T>, seed: u64) -> Self {
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let traffic = Traffic::new(&config, &mut rng);
        Self { config, rng, traffic }
    }

    pub fn step(&mut self) {
        let despawn = self.config.segment_length;
        self.traffic.step(&self.config, &mut self.rng, None, despawn);
    }

    pub fn traffic(&self) -> &Traffic<T> {
        &self.traffic
    }

    pub fn overlapping_pairs(&self) -> Vec<(u32, u32)> {
        self.traffic.overlapping_pairs(self.config.vehicle_width)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::Scenario;

    #[test]
    fn footprint_overlap() {
        let a = VehicleState::on_axis(0.0f64, 0.0, 0.0, 0, 4.5);
        let b = VehicleState::on_axis(4.0, 1.0, 0.0, 0, 4.5);
        let c = VehicleState::on_axis(4.6, 0.0, 0.0, 0, 4.5);
        let fa = Footprint::of(&a, 1.8);
        assert!(fa.overlaps(&Footprint::of(&b, 1.8)));
        assert!(!fa.overlaps(&Footprint::of(&c, 1.8)));
        assert!((fa.lateral_fraction_in(0.0, 3.7) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn traffic_fills_the_road() {
        let cfg = ScenarioConfig::<f64>::for_scenario(Scenario::LaneChange);
        let mut sim = TrafficSim::new(cfg.clone(), 4);
        for _ in 0..600 {
            sim.step();
        }
        let n = sim.traffic().vehicles.len();
        assert!(n >= 3, "only {n} vehicles after warm-up");
        for v in &sim.traffic().vehicles {
            assert!(v.state.v >= 0.0);
            assert_eq!(v.state.y, cfg.lane_center(v.state.lane_id));
        }
    }

    #[test]
    fn same_seed_same_traffic() {
        let cfg = ScenarioConfig::<f64>::for_scenario(Scenario::RampMerge);
        let mut a = TrafficSim::new(cfg.clone(), 77);
        let mut b = TrafficSim::new(cfg, 77);
        for _ in 0..300 {
            a.step();
            b.step();
        }
        assert_eq!(a.traffic(), b.traffic());
    }
}

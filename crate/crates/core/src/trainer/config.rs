use crate::qnet::NetShape;
use crate::scalar::Real;
use crate::scenario::Scenario;
use crate::world::ScenarioConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig<T> {
    pub episodes: usize,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub gamma: T,
    /// Gradient steps between target-network copies.
    pub target_sync: u64,
    pub learning_rate: T,
    pub updates_per_step: usize,
    /// Episodes at the start during which the action networks are frozen.
    pub pretrain_episodes: usize,
    /// Exploration noise standard deviation at episode 0.
    pub sigma0: T,
    /// Decay constant of the noise, in episodes. `None` means a third of `episodes`.
    pub noise_tau: Option<T>,
    pub checkpoints: usize,
    pub eval_episodes: usize,
    pub shape: NetShape,
    /// Starting transition time of the action law (s). `None` keeps the plain
    /// initialization.
    pub initial_t_trs: Option<T>,
}

impl<T: Real> TrainConfig<T> {
    pub fn for_scenario(scenario: &ScenarioConfig<T>) -> Self {
        // Lane-change returns barely depend on a single step's yaw acceleration, so the
        // curvature of Q needs strong excitation to be identified, and the action law
        // starts slow enough to be stable.
        let (episodes, lr, noise_fraction, initial_t_trs) = match scenario.scenario {
            Scenario::LaneChange => (6000, 0.0005, 1.0, Some(T::c(5.0))),
            Scenario::RampMerge => (4000, 0.001, 0.2, None),
        };
        Self {
            episodes,
            batch_size: 64,
            buffer_capacity: 2000,
            gamma: T::c(0.95),
            target_sync: 1000,
            learning_rate: T::c(lr),
            updates_per_step: 1,
            pretrain_episodes: 50,
            sigma0: T::c(noise_fraction) * scenario.action_range().half_width(),
            noise_tau: None,
            checkpoints: 12,
            eval_episodes: 100,
            shape: NetShape::default(),
            initial_t_trs,
        }
    }

    pub fn tau(&self) -> T {
        self.noise_tau
            .unwrap_or_else(|| T::c(self.episodes as f64 / 3.0))
    }

    /// `σ₀·exp(−episode/τ)`.
    pub fn sigma(&self, episode: usize) -> T {
        let tau = self.tau();
        if tau <= T::zero() {
            return T::zero();
        }
        self.sigma0 * (-T::c(episode as f64) / tau).exp()
    }

    /// Episode count after which checkpoint `k` (1-based) is taken.
    pub fn checkpoint_episode(&self, k: usize) -> usize {
        (k * self.episodes).div_ceil(self.checkpoints)
    }

    pub fn validate(&self) -> Result<(), String> {
        let positive = [
            ("episodes", self.episodes),
            ("batch_size", self.batch_size),
            ("buffer_capacity", self.buffer_capacity),
            ("updates_per_step", self.updates_per_step),
            ("checkpoints", self.checkpoints),
            ("eval_episodes", self.eval_episodes),
            ("value_hidden", self.shape.value_hidden),
            ("action_hidden", self.shape.action_hidden),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(format!("{name} must be positive"));
            }
        }
        if self.target_sync == 0 {
            return Err("target_sync must be positive".into());
        }
        if !(self.gamma >= T::zero() && self.gamma <= T::one()) {
            return Err("gamma must lie in [0, 1]".into());
        }
        if !(self.learning_rate > T::zero()) || !self.learning_rate.is_finite() {
            return Err("learning_rate must be positive".into());
        }
        if !(self.sigma0 >= T::zero()) || !self.sigma0.is_finite() {
            return Err("sigma0 must be non-negative".into());
        }
        if let Some(tau) = self.noise_tau {
            if !(tau > T::zero()) {
                return Err("noise_tau must be positive".into());
            }
        }
        if let Some(t) = self.initial_t_trs {
            if !(t > T::c(crate::qnet::T_MIN)) || !t.is_finite() {
                return Err(format!("initial_t_trs must exceed {}", crate::qnet::T_MIN));
            }
        }
        if self.batch_size > self.buffer_capacity {
            return Err("batch_size cannot exceed buffer_capacity".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let lc = TrainConfig::<f64>::for_scenario(&ScenarioConfig::for_scenario(Scenario::LaneChange));
        assert_eq!(lc.episodes, 6000);
        assert_eq!(lc.learning_rate, 0.0005);
        assert!((lc.sigma0 - 0.4).abs() < 1e-15);
        assert_eq!(lc.initial_t_trs, Some(5.0));
        let rm = TrainConfig::<f64>::for_scenario(&ScenarioConfig::for_scenario(Scenario::RampMerge));
        assert_eq!(rm.episodes, 4000);
        assert!((rm.sigma0 - 0.7).abs() < 1e-12);
        lc.validate().unwrap();
        rm.validate().unwrap();
    }

    #[test]
    fn noise_decays_by_e_each_tau() {
        let mut c = TrainConfig::<f64>::for_scenario(&ScenarioConfig::for_scenario(Scenario::LaneChange));
        c.episodes = 300;
        assert_eq!(c.sigma(0), c.sigma0);
        assert!((c.sigma(100) - c.sigma0 / std::f64::consts::E).abs() < 1e-15);
    }

    #[test]
    fn checkpoints_are_evenly_spaced() {
        let mut c = TrainConfig::<f64>::for_scenario(&ScenarioConfig::for_scenario(Scenario::LaneChange));
        c.episodes = 1200;
        let eps: Vec<usize> = (1..=12).map(|k| c.checkpoint_episode(k)).collect();
        assert_eq!(eps, (1..=12).map(|k| 100 * k).collect::<Vec<_>>());
        c.episodes = 1;
        assert!((1..=12).all(|k| c.checkpoint_episode(k) == 1));
        c.episodes = 13;
        assert_eq!(c.checkpoint_episode(1), 2);
        assert_eq!(c.checkpoint_episode(12), 13);
    }
}

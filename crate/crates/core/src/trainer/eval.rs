use rayon::prelude::*;

use super::TrainError;
use crate::qnet::{Checkpoint, QuadraticQNet};
use crate::reward::RewardConfig;
use crate::scalar::Real;
use crate::scenario::Scenario;
use crate::seed::{episode_seed, STREAM_EVAL_ENV};
use crate::world::{Outcome, ScenarioConfig, WorldState};

/// One row of a greedy trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPoint<T> {
    pub t: T,
    pub x: T,
    pub y: T,
    pub v: T,
    pub theta: T,
    pub omega: T,
    pub action: T,
    pub reward: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rollout<T> {
    pub points: Vec<TrajectoryPoint<T>>,
    pub outcome: Outcome,
    pub total_reward: T,
    pub discounted_reward: T,
    /// Lane change: mean `|ω|`. Ramp merge: mean `|Δa|/dt` between consecutive steps.
    pub roughness: T,
    /// Lateral distance to the target centerline at the last step.
    pub final_offset: T,
}

/// Runs one episode with the greedy action `μ(s)`.
pub fn greedy_rollout<T: Real>(
    qnet: &QuadraticQNet<T>,
    scenario: &ScenarioConfig<T>,
    reward: &RewardConfig<T>,
    gamma: T,
    world_seed: u64,
) -> Result<Rollout<T>, TrainError> {
    let (mut world, mut obs) = WorldState::reset(scenario.clone(), *reward, world_seed)?;
    let dt = scenario.dt;
    let mut points = Vec::new();
    let (mut total, mut discounted, mut discount) = (T::zero(), T::zero(), T::one());
    let mut rough = T::zero();
    let mut prev_action: Option<T> = None;
    loop {
        let res = world.step(qnet.mu(&obs)?)?;
        let ego = world.ego();
        points.push(TrajectoryPoint {
            t: T::c(world.steps() as f64) * dt,
            x: ego.x,
            y: ego.y,
            v: ego.v,
            theta: ego.theta,
            omega: ego.omega,
            action: res.applied_action,
            reward: res.reward,
        });
        total = total + res.reward;
        discounted = discounted + discount * res.reward;
        discount = discount * gamma;
        rough = rough
            + match scenario.scenario {
                Scenario::LaneChange => ego.omega.abs(),
                Scenario::RampMerge => prev_action.map_or(T::zero(), |p| (res.applied_action - p).abs() / dt),
            };
        prev_action = Some(res.applied_action);
        obs = res.next_obs;
        if res.terminal {
            let n = match scenario.scenario {
                Scenario::LaneChange => points.len(),
                Scenario::RampMerge => points.len().saturating_sub(1).max(1),
            };
            return Ok(Rollout {
                outcome: res.outcome,
                total_reward: total,
                discounted_reward: discounted,
                roughness: rough / T::c(n as f64),
                final_offset: world.lateral_offset(),
                points,
            });
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalSummary<T> {
    pub episodes: usize,
    pub mean_reward: T,
    /// Sample standard deviation of the episode rewards.
    pub std_reward: T,
    pub mean_discounted_reward: T,
    pub success_rate: T,
    pub collision_rate: T,
    pub timeout_rate: T,
    pub mean_roughness: T,
    pub mean_steps: T,
}

impl<T: Real> EvalSummary<T> {
    pub fn standard_error(&self) -> T {
        self.std_reward / T::c(self.episodes as f64).sqrt()
    }
}

/// Greedy evaluation over `episodes` worlds seeded from `seed`.
///
/// Episodes run in parallel; the summary is reduced in episode order, so it does not
/// depend on the thread count.
pub fn evaluate<T: Real>(
    qnet: &QuadraticQNet<T>,
    scenario: &ScenarioConfig<T>,
    reward: &RewardConfig<T>,
    gamma: T,
    episodes: usize,
    seed: u64,
) -> Result<EvalSummary<T>, TrainError> {
    if episodes == 0 {
        return Err(TrainError::NoEpisodes);
    }
    if qnet.scenario != scenario.scenario {
        return Err(TrainError::ScenarioMismatch {
            expected: scenario.scenario,
            found: qnet.scenario,
        });
    }
    let rollouts: Vec<Rollout<T>> = (0..episodes)
        .into_par_iter()
        .map(|i| {
            let s = episode_seed(seed, STREAM_EVAL_ENV, i as u64);
            greedy_rollout(qnet, scenario, reward, gamma, s)
        })
        .collect::<Result<_, _>>()?;

    let n = T::c(episodes as f64);
    let mean = |f: &dyn Fn(&Rollout<T>) -> T| rollouts.iter().fold(T::zero(), |a, r| a + f(r)) / n;
    let rate = |o: Outcome| mean(&|r| if r.outcome == o { T::one() } else { T::zero() });
    let mean_reward = mean(&|r| r.total_reward);
    let var = if episodes > 1 {
        rollouts
            .iter()
            .fold(T::zero(), |a, r| a + (r.total_reward - mean_reward).powi(2))
            / T::c((episodes - 1) as f64)
    } else {
        T::zero()
    };
    Ok(EvalSummary {
        episodes,
        mean_reward,
        std_reward: var.sqrt(),
        mean_discounted_reward: mean(&|r| r.discounted_reward),
        success_rate: rate(Outcome::Success),
        collision_rate: rate(Outcome::Collision),
        timeout_rate: rate(Outcome::Timeout),
        mean_roughness: mean(&|r| r.roughness),
        mean_steps: mean(&|r| T::c(r.points.len() as f64)),
    })
}

/// [`evaluate`] for a checkpoint, after checking its scenario tag.
pub fn evaluate_checkpoint<T: Real>(
    checkpoint: &Checkpoint<T>,
    scenario: &ScenarioConfig<T>,
    reward: &RewardConfig<T>,
    gamma: T,
    episodes: usize,
    seed: u64,
) -> Result<EvalSummary<T>, TrainError> {
    evaluate(&checkpoint.qnet, scenario, reward, gamma, episodes, seed)
}

use std::io::Write;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::replay::{ReplayBuffer, Transition};
use super::{TrainConfig, TrainError};
use crate::nn::AdamState;
use crate::qnet::{Checkpoint, Head, QuadraticQNet, RngSnapshot};
use crate::reward::RewardConfig;
use crate::scalar::Real;
use crate::seed::{episode_seed, rng_for, STREAM_EXPLORE, STREAM_INIT, STREAM_REPLAY, STREAM_TRAIN_ENV};
use crate::world::{Observation, Outcome, Range, ScenarioConfig, WorldState};

/// `μ(s) + n` with `n ~ N(0, σ²)`, clamped to `range`.
pub fn explore_action<T: Real, R: Rng + ?Sized>(
    qnet: &QuadraticQNet<T>,
    obs: &Observation<T>,
    sigma: T,
    range: Range<T>,
    rng: &mut R,
) -> Result<T, TrainError> {
    let mu = qnet.mu(obs)?;
    let z: f64 = rng.sample(StandardNormal);
    Ok(range.clamp(mu + sigma * T::c(z)))
}

pub const TRAIN_LOG_HEADER: [&str; 8] = [
    "episode",
    "steps",
    "total_reward",
    "mean_loss",
    "sigma",
    "outcome",
    "gradient_steps",
    "pretraining",
];

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog<T> {
    /// Zero-based episode index.
    pub episode: usize,
    pub steps: usize,
    pub total_reward: T,
    /// Mean TD loss over this episode's updates; `None` when no update ran.
    pub mean_loss: Option<T>,
    pub sigma: T,
    pub outcome: Outcome,
    /// Cumulative gradient steps at the end of the episode.
    pub gradient_steps: u64,
    pub pretraining: bool,
}

/// Writes the training log as CSV with [`TRAIN_LOG_HEADER`].
pub fn write_train_log<T: Real, W: Write>(w: W, log: &[EpisodeLog<T>]) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(TRAIN_LOG_HEADER)?;
    for r in log {
        out.write_record([
            r.episode.to_string(),
            r.steps.to_string(),
            format!("{:?}", r.total_reward),
            r.mean_loss.map(|l| format!("{l:?}")).unwrap_or_default(),
            format!("{:?}", r.sigma),
            r.outcome.to_string(),
            r.gradient_steps.to_string(),
            (r.pretraining as u8).to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// What one environment step did.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport<T> {
    pub updates: usize,
    pub synced: bool,
    /// Set when this step ended the episode.
    pub finished: Option<EpisodeLog<T>>,
}

#[derive(Debug, Clone)]
struct Active<T> {
    world: WorldState<T>,
    obs: Observation<T>,
    steps: usize,
    reward: T,
    loss_sum: T,
    updates: usize,
}

/// Quadratic Q-learning with replay, a target network and a μ-frozen pretraining phase.
///
/// Drive it one environment step at a time with [`Trainer::step`], one episode at a time
/// with [`Trainer::run_episode`], or to completion with [`Trainer::run`].
#[derive(Debug, Clone)]
pub struct Trainer<T> {
    config: TrainConfig<T>,
    scenario: ScenarioConfig<T>,
    reward: RewardConfig<T>,
    seed: u64,
    online: QuadraticQNet<T>,
    target: QuadraticQNet<T>,
    adam: Vec<AdamState<T>>,
    buffer: ReplayBuffer<T>,
    explore_rng: ChaCha8Rng,
    replay_rng: ChaCha8Rng,
    episode: usize,
    gradient_steps: u64,
    checkpoints: Vec<Checkpoint<T>>,
    log: Vec<EpisodeLog<T>>,
    active: Option<Active<T>>,
}

impl<T: Real> Trainer<T> {
    pub fn new(
        config: TrainConfig<T>,
        scenario: ScenarioConfig<T>,
        reward: RewardConfig<T>,
        seed: u64,
    ) -> Result<Self, TrainError> {
        config.validate().map_err(TrainError::Config)?;
        scenario.validate().map_err(|e| TrainError::Config(e.0))?;
        reward.validate().map_err(TrainError::Config)?;
        if reward.scenario != scenario.scenario {
            return Err(TrainError::Config("reward config is for a different scenario".into()));
        }
        let mut init_rng = rng_for(seed, STREAM_INIT);
        let mut online = QuadraticQNet::new(scenario.scenario, scenario.action_bound(), config.shape, &mut init_rng);
        if let Some(t) = config.initial_t_trs {
            online.set_initial_transition_time(t);
        }
        let adam = Head::ALL
            .iter()
            .map(|&h| AdamState::new(online.net(h).param_count(), config.learning_rate))
            .collect();
        Ok(Self {
            target: online.clone(),
            online,
            adam,
            buffer: ReplayBuffer::new(config.buffer_capacity),
            explore_rng: rng_for(seed, STREAM_EXPLORE),
            replay_rng: rng_for(seed, STREAM_REPLAY),
            episode: 0,
            gradient_steps: 0,
            checkpoints: Vec::with_capacity(config.checkpoints),
            log: Vec::with_capacity(config.episodes),
            active: None,
            config,
            scenario,
            reward,
            seed,
        })
    }

    pub fn config(&self) -> &TrainConfig<T> {
        &self.config
    }

    pub fn scenario_config(&self) -> &ScenarioConfig<T> {
        &self.scenario
    }

    pub fn reward_config(&self) -> &RewardConfig<T> {
        &self.reward
    }

    pub fn online(&self) -> &QuadraticQNet<T> {
        &self.online
    }

    pub fn target(&self) -> &QuadraticQNet<T> {
        &self.target
    }

    pub fn buffer(&self) -> &ReplayBuffer<T> {
        &self.buffer
    }

    /// Completed episodes.
    pub fn episode(&self) -> usize {
        self.episode
    }

    pub fn gradient_steps(&self) -> u64 {
        self.gradient_steps
    }

    pub fn checkpoints(&self) -> &[Checkpoint<T>] {
        &self.checkpoints
    }

    pub fn log(&self) -> &[EpisodeLog<T>] {
        &self.log
    }

    pub fn is_finished(&self) -> bool {
        self.episode >= self.config.episodes
    }

    pub fn is_pretraining(&self) -> bool {
        self.episode < self.config.pretrain_episodes
    }

    pub fn snapshot(&self) -> Checkpoint<T> {
        Checkpoint {
            qnet: self.online.clone(),
            episode: self.episode,
            gradient_steps: self.gradient_steps,
            rng: RngSnapshot::capture(&self.explore_rng),
        }
    }

    fn begin_episode(&mut self) -> Result<Active<T>, TrainError> {
        let seed = episode_seed(self.seed, STREAM_TRAIN_ENV, self.episode as u64);
        let (world, obs) = WorldState::reset(self.scenario.clone(), self.reward, seed)?;
        Ok(Active {
            world,
            obs,
            steps: 0,
            reward: T::zero(),
            loss_sum: T::zero(),
            updates: 0,
        })
    }

    fn diverged(&self, what: &str) -> TrainError {
        TrainError::Divergence {
            episode: self.episode,
            gradient_step: self.gradient_steps,
            what: what.to_string(),
        }
    }

    /// One gradient step on a uniformly sampled batch; returns the batch loss.
    fn update(&mut self, freeze_mu: bool) -> Result<T, TrainError> {
        let k = self.config.batch_size;
        let idx = self.buffer.sample_indices(k, &mut self.replay_rng)?;
        let dim = self.online.obs_dim();
        let mut states = Vec::with_capacity(k * dim);
        let mut next_states = Vec::with_capacity(k * dim);
        let mut actions = Vec::with_capacity(k);
        for &i in &idx {
            let t = self.buffer.get(i).expect("sampled index in range");
            states.extend_from_slice(t.s.as_slice());
            next_states.extend_from_slice(t.s_next.as_slice());
            actions.push(t.a);
        }
        // batched form of td_target
        let v_next = self.target.net_v.predict_batch(&next_states, k)?;
        let targets: Vec<T> = idx
            .iter()
            .zip(&v_next)
            .map(|(&i, &v)| {
                let t = self.buffer.get(i).expect("sampled index in range");
                if t.terminal {
                    t.r
                } else {
                    t.r + self.config.gamma * v
                }
            })
            .collect();

        let out = self.online.loss_and_gradients(&states, &actions, &targets, freeze_mu)?;
        if !out.loss.is_finite() {
            return Err(self.diverged("non-finite TD loss"));
        }
        for (slot, head) in Head::ALL.into_iter().enumerate() {
            if freeze_mu && head.is_action_head() {
                continue;
            }
            let grads = out.grads.get(head);
            self.online.net_mut(head).apply_adam(grads, &mut self.adam[slot])?;
        }
        if !self.online.all_finite() {
            return Err(self.diverged("non-finite network parameter"));
        }
        self.gradient_steps += 1;
        Ok(out.loss)
    }

    /// Advances the current episode (starting one if needed) by one environment step,
    /// followed by the scheduled gradient updates.
    pub fn step(&mut self) -> Result<StepReport<T>, TrainError> {
        if self.is_finished() {
            return Err(TrainError::Finished);
        }
        let mut act = match self.active.take() {
            Some(a) => a,
            None => self.begin_episode()?,
        };
        let sigma = self.config.sigma(self.episode);
        let action = explore_action(
            &self.online,
            &act.obs,
            sigma,
            self.scenario.action_range(),
            &mut self.explore_rng,
        )?;
        let res = act.world.step(action)?;
        if !res.reward.is_finite() || !res.next_obs.all_finite() {
            return Err(self.diverged("non-finite observation or reward"));
        }
        self.buffer.push(Transition {
            s: std::mem::replace(&mut act.obs, res.next_obs.clone()),
            a: res.applied_action,
            s_next: res.next_obs,
            r: res.reward,
            // a time limit is not part of the state, so timeouts still bootstrap
            terminal: matches!(res.outcome, Outcome::Collision | Outcome::Success),
        });
        act.steps += 1;
        act.reward = act.reward + res.reward;

        let mut report = StepReport {
            updates: 0,
            synced: false,
            finished: None,
        };
        if self.buffer.len() >= self.config.batch_size {
            let freeze = self.is_pretraining();
            for _ in 0..self.config.updates_per_step {
                let loss = self.update(freeze)?;
                act.loss_sum = act.loss_sum + loss;
                act.updates += 1;
                report.updates += 1;
                if self.gradient_steps.is_multiple_of(self.config.target_sync) {
                    self.target.clone_from(&self.online);
                    report.synced = true;
                }
            }
        }

        if res.terminal {
            let entry = EpisodeLog {
                episode: self.episode,
                steps: act.steps,
                total_reward: act.reward,
                mean_loss: (act.updates > 0).then(|| act.loss_sum / T::c(act.updates as f64)),
                sigma,
                outcome: res.outcome,
                gradient_steps: self.gradient_steps,
                pretraining: self.is_pretraining(),
            };
            self.episode += 1;
            self.log.push(entry.clone());
            while self.checkpoints.len() < self.config.checkpoints
                && self.config.checkpoint_episode(self.checkpoints.len() + 1) <= self.episode
            {
                self.checkpoints.push(self.snapshot());
            }
            report.finished = Some(entry);
        } else {
            self.active = Some(act);
        }
        Ok(report)
    }

    pub fn run_episode(&mut self) -> Result<EpisodeLog<T>, TrainError> {
        loop {
            if let Some(done) = self.step()?.finished {
                return Ok(done);
            }
        }
    }

    /// Runs all remaining episodes.
    pub fn run(&mut self) -> Result<(), TrainError> {
        while !self.is_finished() {
            self.run_episode()?;
        }
        Ok(())
    }

    pub fn into_output(self) -> TrainOutput<T> {
        TrainOutput {
            final_net: self.online,
            checkpoints: self.checkpoints,
            log: self.log,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutput<T> {
    pub final_net: QuadraticQNet<T>,
    pub checkpoints: Vec<Checkpoint<T>>,
    pub log: Vec<EpisodeLog<T>>,
}

/// Trains from scratch for `config.episodes` episodes.
pub fn train<T: Real>(
    config: TrainConfig<T>,
    scenario: ScenarioConfig<T>,
    reward: RewardConfig<T>,
    seed: u64,
) -> Result<TrainOutput<T>, TrainError> {
    let mut t = Trainer::new(config, scenario, reward, seed)?;
    t.run()?;
    Ok(t.into_output())
}

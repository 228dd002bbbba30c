use rand::Rng;

use crate::nn::{Activation, Mlp, NnError};
use crate::scalar::Real;
use crate::scenario::Scenario;
use crate::world::observation::{lane_change as lc, obs_dim, ramp_merge as rm};
use crate::world::Observation;

/// Lower bound of the learned transition time (s).
pub const T_MIN: f64 = 0.1;

/// Tracking error and its rate as seen by the PID-structured action law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PidFeatures<T> {
    pub e: T,
    pub e_dot: T,
}

/// Lane change: lateral offset to the target centerline and its time derivative.
/// Ramp merge: distance and speed difference to the midpoint of the target gap.
pub fn pid_features<T: Real>(obs: &Observation<T>, scenario: Scenario) -> PidFeatures<T> {
    let raw = |i| obs.raw(scenario, i);
    match scenario {
        Scenario::LaneChange => PidFeatures {
            e: raw(lc::DELTA_D_LT),
            e_dot: -raw(lc::SPEED) * raw(lc::THETA).sin(),
        },
        Scenario::RampMerge => {
            let half = T::c(0.5);
            PidFeatures {
                e: half * (raw(rm::GAP_LEAD_DX) + raw(rm::GAP_LAG_DX)),
                e_dot: half * (raw(rm::GAP_LEAD_DV) + raw(rm::GAP_LAG_DV)),
            }
        }
    }
}

/// Hidden widths of the two network groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NetShape {
    /// Hidden width of the M and V networks.
    pub value_hidden: usize,
    /// Hidden width of each of the three action-law networks.
    pub action_hidden: usize,
}

impl Default for NetShape {
    fn default() -> Self {
        Self {
            value_hidden: 64,
            action_hidden: 32,
        }
    }
}

/// Which of the five networks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Head {
    M,
    V,
    AMax,
    Beta,
    TTrs,
}

impl Head {
    pub const ALL: [Head; 5] = [Head::M, Head::V, Head::AMax, Head::Beta, Head::TTrs];

    pub fn name(self) -> &'static str {
        match self {
            Head::M => "M",
            Head::V => "V",
            Head::AMax => "amax",
            Head::Beta => "beta",
            Head::TTrs => "T",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|h| h.name() == name)
    }

    /// Heads forming the action network.
    pub fn is_action_head(self) -> bool {
        matches!(self, Head::AMax | Head::Beta | Head::TTrs)
    }
}

/// Every intermediate quantity of `Q(s, ·)` at one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QHeads<T> {
    pub m_raw: T,
    /// Curvature of Q in the action, never positive.
    pub m: T,
    pub v: T,
    pub amax_raw: T,
    pub beta_raw: T,
    pub t_raw: T,
    pub a_max: T,
    pub beta: T,
    pub t_trs: T,
    pub features: PidFeatures<T>,
    pub a_tmp: T,
    /// Greedy action.
    pub mu: T,
}

/// `Q(s, a) = M(s)·(μ(s) − a)² + V(s)` with `M = −softplus(·) ≤ 0`, so the maximizing
/// action is `μ(s)`. The action law is
/// `μ = a_max·tanh(β·(e/T² + ė/T))` with `a_max`, `β` and `T` produced by three networks.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticQNet<T> {
    pub scenario: Scenario,
    /// Upper bound on `|μ|`.
    pub action_bound: T,
    pub net_m: Mlp<T>,
    pub net_v: Mlp<T>,
    pub net_amax: Mlp<T>,
    pub net_beta: Mlp<T>,
    pub net_t: Mlp<T>,
}

/// Gradients for the five networks in their flat parameter layouts.
#[derive(Debug, Clone, PartialEq)]
pub struct QGrads<T> {
    pub m: Vec<T>,
    pub v: Vec<T>,
    pub amax: Vec<T>,
    pub beta: Vec<T>,
    pub t: Vec<T>,
}

impl<T: Real> QGrads<T> {
    pub fn get(&self, head: Head) -> &[T] {
        match head {
            Head::M => &self.m,
            Head::V => &self.v,
            Head::AMax => &self.amax,
            Head::Beta => &self.beta,
            Head::TTrs => &self.t,
        }
    }

    pub fn norm(&self, head: Head) -> T {
        self.get(head).iter().fold(T::zero(), |a, &g| a + g * g).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossAndGrads<T> {
    pub loss: T,
    pub grads: QGrads<T>,
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum QError {
    #[error("empty batch")]
    EmptyBatch,
    #[error("batch arrays disagree: {states} state values, {actions} actions, {targets} targets")]
    BatchShape {
        states: usize,
        actions: usize,
        targets: usize,
    },
    #[error(transparent)]
    Nn(#[from] NnError),
}

impl<T: Real> QuadraticQNet<T> {
    pub fn new<R: Rng + ?Sized>(scenario: Scenario, action_bound: T, shape: NetShape, rng: &mut R) -> Self {
        let d = obs_dim(scenario);
        let value = [d, shape.value_hidden, shape.value_hidden, 1];
        let action = [d, shape.action_hidden, shape.action_hidden, 1];
        Self {
            scenario,
            action_bound,
            net_m: Mlp::new(value, Activation::Identity, rng),
            net_v: Mlp::new(value, Activation::Identity, rng),
            net_amax: Mlp::new(action, Activation::Identity, rng),
            net_beta: Mlp::new(action, Activation::Identity, rng),
            net_t: Mlp::new(action, Activation::Identity, rng),
        }
    }

    /// Shifts the output bias of the `T` network so that it starts near `t_trs`
    /// seconds (exactly, for an all-zero input). Needs `t_trs > T_MIN`.
    pub fn set_initial_transition_time(&mut self, t_trs: T) {
        let y = t_trs - T::c(T_MIN);
        // inverse of softplus
        let raw = y + (-(-y).exp()).ln_1p();
        self.net_t.set_output_bias(raw);
    }

    pub fn net(&self, head: Head) -> &Mlp<T> {
        match head {
            Head::M => &self.net_m,
            Head::V => &self.net_v,
            Head::AMax => &self.net_amax,
            Head::Beta => &self.net_beta,
            Head::TTrs => &self.net_t,
        }
    }

    pub fn net_mut(&mut self, head: Head) -> &mut Mlp<T> {
        match head {
            Head::M => &mut self.net_m,
            Head::V => &mut self.net_v,
            Head::AMax => &mut self.net_amax,
            Head::Beta => &mut self.net_beta,
            Head::TTrs => &mut self.net_t,
        }
    }

    pub fn obs_dim(&self) -> usize {
        self.net_m.input_dim()
    }

    pub fn all_finite(&self) -> bool {
        Head::ALL.iter().all(|&h| self.net(h).all_finite())
    }

    /// Combines the five raw network outputs for one state.
    pub fn combine(&self, raw: [T; 5], features: PidFeatures<T>) -> QHeads<T> {
        let [m_raw, v, amax_raw, beta_raw, t_raw] = raw;
        let m = -m_raw.softplus();
        let a_max = self.action_bound * amax_raw.sigmoid();
        let beta = beta_raw.softplus();
        let t_trs = T::c(T_MIN) + t_raw.softplus();
        let a_tmp = features.e / (t_trs * t_trs) + features.e_dot / t_trs;
        let mu = a_max * (beta * a_tmp).tanh();
        QHeads {
            m_raw,
            m,
            v,
            amax_raw,
            beta_raw,
            t_raw,
            a_max,
            beta,
            t_trs,
            features,
            a_tmp,
            mu,
        }
    }

    pub fn heads(&self, obs: &Observation<T>) -> Result<QHeads<T>, NnError> {
        let x = obs.as_slice();
        let raw = [
            self.net_m.predict(x)?[0],
            self.net_v.predict(x)?[0],
            self.net_amax.predict(x)?[0],
            self.net_beta.predict(x)?[0],
            self.net_t.predict(x)?[0],
        ];
        Ok(self.combine(raw, pid_features(obs, self.scenario)))
    }

    /// Greedy action `μ(s)`.
    pub fn mu(&self, obs: &Observation<T>) -> Result<T, NnError> {
        let x = obs.as_slice();
        let raw = [
            T::zero(),
            T::zero(),
            self.net_amax.predict(x)?[0],
            self.net_beta.predict(x)?[0],
            self.net_t.predict(x)?[0],
        ];
        Ok(self.combine(raw, pid_features(obs, self.scenario)).mu)
    }

    pub fn q_value(&self, obs: &Observation<T>, action: T) -> Result<T, NnError> {
        let h = self.heads(obs)?;
        let d = h.mu - action;
        Ok(h.m * d * d + h.v)
    }

    /// `max_a Q(s, a)`, which equals `V(s)` because `M ≤ 0`.
    pub fn greedy_value(&self, obs: &Observation<T>) -> Result<T, NnError> {
        Ok(self.net_v.predict(obs.as_slice())?[0])
    }

    /// Mean squared TD error over a batch and its gradient for every network.
    ///
    /// `states` holds `actions.len()` observations back to back. With `freeze_mu` the
    /// action-law networks get exactly zero gradient.
    pub fn loss_and_gradients(
        &self,
        states: &[T],
        actions: &[T],
        targets: &[T],
        freeze_mu: bool,
    ) -> Result<LossAndGrads<T>, QError> {
        let b = actions.len();
        let dim = self.obs_dim();
        if b == 0 {
            return Err(QError::EmptyBatch);
        }
        if targets.len() != b || states.len() != b * dim {
            return Err(QError::BatchShape {
                states: states.len(),
                actions: b,
                targets: targets.len(),
            });
        }
        let (m_out, m_tape) = self.net_m.forward_batch(states, b)?;
        let (v_out, v_tape) = self.net_v.forward_batch(states, b)?;
        let mu_tapes = if freeze_mu {
            None
        } else {
            Some((
                self.net_amax.forward_batch(states, b)?,
                self.net_beta.forward_batch(states, b)?,
                self.net_t.forward_batch(states, b)?,
            ))
        };
        let (amax_out, beta_out, t_out) = match &mu_tapes {
            Some(((a, _), (be, _), (t, _))) => (a.clone(), be.clone(), t.clone()),
            None => (
                self.net_amax.predict_batch(states, b)?,
                self.net_beta.predict_batch(states, b)?,
                self.net_t.predict_batch(states, b)?,
            ),
        };

        let n = T::c(b as f64);
        let two = T::c(2.0);
        let one = T::one();
        let mut loss = T::zero();
        let mut g_m = vec![T::zero(); b];
        let mut g_v = vec![T::zero(); b];
        let mut g_amax = vec![T::zero(); b];
        let mut g_beta = vec![T::zero(); b];
        let mut g_t = vec![T::zero(); b];

        for i in 0..b {
            let obs = Observation(states[i * dim..(i + 1) * dim].to_vec());
            let h = self.combine(
                [m_out[i], v_out[i], amax_out[i], beta_out[i], t_out[i]],
                pid_features(&obs, self.scenario),
            );
            let diff = h.mu - actions[i];
            let q = h.m * diff * diff + h.v;
            let resid = targets[i] - q;
            loss = loss + resid * resid;

            let dq = -two * resid / n;
            g_v[i] = dq;
            // dM/dm_raw = −σ(m_raw)
            g_m[i] = dq * diff * diff * (-h.m_raw.sigmoid());
            if freeze_mu {
                continue;
            }
            let dmu = dq * two * h.m * diff;
            let th = (h.beta * h.a_tmp).tanh();
            let dz = dmu * h.a_max * (one - th * th);
            g_amax[i] = dmu * th * self.action_bound * {
                let s = h.amax_raw.sigmoid();
                s * (one - s)
            };
            g_beta[i] = dz * h.a_tmp * h.beta_raw.sigmoid();
            let t = h.t_trs;
            let da_tmp_dt = -two * h.features.e / (t * t * t) - h.features.e_dot / (t * t);
            g_t[i] = dz * h.beta * da_tmp_dt * h.t_raw.sigmoid();
        }

        let mut grads = QGrads {
            m: vec![T::zero(); self.net_m.param_count()],
            v: vec![T::zero(); self.net_v.param_count()],
            amax: vec![T::zero(); self.net_amax.param_count()],
            beta: vec![T::zero(); self.net_beta.param_count()],
            t: vec![T::zero(); self.net_t.param_count()],
        };
        self.net_m.backward_into(&m_tape, &g_m, &mut grads.m, false)?;
        self.net_v.backward_into(&v_tape, &g_v, &mut grads.v, false)?;
        if let Some(((_, ta), (_, tb), (_, tt))) = &mu_tapes {
            self.net_amax.backward_into(ta, &g_amax, &mut grads.amax, false)?;
            self.net_beta.backward_into(tb, &g_beta, &mut grads.beta, false)?;
            self.net_t.backward_into(tt, &g_t, &mut grads.t, false)?;
        }
        Ok(LossAndGrads { loss: loss / n, grads })
    }
}

/// One-step TD target `r + γ·max_a Q_target(s′, a)`, or `r` at a terminal transition.
pub fn td_target<T: Real>(
    reward: T,
    next_obs: &Observation<T>,
    terminal: bool,
    gamma: T,
    target_net: &QuadraticQNet<T>,
) -> Result<T, NnError> {
    if terminal || gamma == T::zero() {
        return Ok(reward);
    }
    Ok(reward + gamma * target_net.greedy_value(next_obs)?)
}

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::replay::ReplayBuffer;
use super::RlError;
use crate::env::EvaderAction;
use crate::numerics::{
    pack_block, Activation, Adam, DenseNet, NetCheckpoint, LANES,
};

/// Action dimensionality: squashed heading component and speed component.
pub const ACT_DIM: usize = 2;

const LOG_STD_MIN: f64 = -20.0;
const LOG_STD_MAX: f64 = 2.0;
/// Added inside `ln(1 - tanh^2 + eps)` so the squash correction stays finite.
const TANH_EPS: f64 = 1e-6;
const LN_2PI: f64 = 1.837877066409345;

/// Bounds for the learned temperature (`alpha` in `[e^-4, e^2]`).
///
/// The floor matters: when one action dimension saturates against a tanh rail
/// while another stays diffuse, the total entropy can sit above the target,
/// driving the temperature toward zero — which removes the only force that
/// pulls the saturated dimension back off the rail. A small floor keeps that
/// corrective pressure alive without distorting a healthy policy, whose
/// Q-gradients dominate it by orders of magnitude.
const LOG_ALPHA_MIN: f64 = -4.0;
const LOG_ALPHA_MAX: f64 = 2.0;

/// Bottom fraction of the squashed speed range that commands a full stop.
///
/// A tanh squash alone can never emit exactly zero, but a true stop matters
/// here: the detection radius scales with the evader's own speed, so freezing
/// is the only move that breaks an on-top pursuit lock. The deadband makes it
/// reachable; the rest of the range is rescaled to keep top speed.
pub const SPEED_DEADBAND: f64 = 0.15;

/// Map a squashed action `u` in (-1,1)^2 to an environment command:
/// heading `u0 * pi`; speed from `(u1 + 1) / 2` with the deadband applied.
pub fn action_to_command(u: [f64; 2]) -> EvaderAction {
    let raw = (u[1] + 1.0) / 2.0;
    let frac = if raw < SPEED_DEADBAND {
        0.0
    } else {
        (raw - SPEED_DEADBAND) / (1.0 - SPEED_DEADBAND)
    };
    EvaderAction::new(u[0] * std::f64::consts::PI, frac)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SacConfig {
    pub obs_dim: usize,
    pub hidden: Vec<usize>,
    pub gamma: f64,
    /// Fraction of the online weights mixed into the targets per update
    /// (1.0 copies the online network outright).
    pub polyak: f64,
    pub lr: f64,
    pub batch_size: usize,
    pub replay_capacity: usize,
    pub target_entropy: f64,
    pub init_alpha: f64,
}

impl SacConfig {
    pub fn new(obs_dim: usize) -> Self {
        SacConfig {
            obs_dim,
            hidden: vec![64, 64],
            gamma: 0.99,
            polyak: 0.005,
            lr: 3e-4,
            batch_size: 256,
            replay_capacity: 200_000,
            target_entropy: -2.0,
            init_alpha: 0.2,
        }
    }

    fn validate(&self) -> Result<(), RlError> {
        if self.obs_dim == 0 {
            return Err(RlError::Config("obs_dim must be positive".into()));
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(RlError::Config("hidden layers must be non-empty and positive".into()));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(RlError::Config("gamma must lie in [0, 1)".into()));
        }
        if !(self.polyak > 0.0 && self.polyak <= 1.0) {
            return Err(RlError::Config("polyak must lie in (0, 1]".into()));
        }
        if self.lr <= 0.0 || self.batch_size == 0 || self.replay_capacity == 0 {
            return Err(RlError::Config("lr, batch_size, replay_capacity must be positive".into()));
        }
        if self.init_alpha <= 0.0 {
            return Err(RlError::Config("init_alpha must be positive".into()));
        }
        Ok(())
    }
}

/// Diagnostics from one gradient update.
#[derive(Clone, Copy, Debug)]
pub struct UpdateStats {
    pub critic_loss: f64,
    pub actor_loss: f64,
    pub alpha: f64,
    /// Monte-Carlo estimate of the policy entropy, `-mean(log pi)`.
    pub entropy: f64,
}

/// Twin-critic regression gradients for one fixed batch.
#[derive(Clone, Debug)]
pub struct CriticGrads {
    pub g1: Vec<f64>,
    pub g2: Vec<f64>,
    /// Mean over the batch of `(Q1 - y)^2 + (Q2 - y)^2`.
    pub loss: f64,
}

/// Actor-objective gradient for one fixed batch.
#[derive(Clone, Debug)]
pub struct ActorGrads {
    pub grad: Vec<f64>,
    /// Mean over the batch of `alpha log pi(u|s) - min_j Q_j(s, u)`.
    pub loss: f64,
    pub mean_log_pi: f64,
}

/// Per-sample policy evaluation: squashed action, log-density, and the
/// intermediates the analytic gradients need.
struct PolicyEval {
    u: [f64; ACT_DIM],
    log_pi: f64,
    tanh: [f64; ACT_DIM],
    sigma: [f64; ACT_DIM],
    logs_raw: [f64; ACT_DIM],
}

fn eval_policy(out: &[f64], xi: &[f64; ACT_DIM]) -> PolicyEval {
    let mut e = PolicyEval {
        u: [0.0; ACT_DIM],
        log_pi: 0.0,
        tanh: [0.0; ACT_DIM],
        sigma: [0.0; ACT_DIM],
        logs_raw: [0.0; ACT_DIM],
    };
    for k in 0..ACT_DIM {
        let mu = out[k];
        let logs_raw = out[ACT_DIM + k];
        let logs = logs_raw.clamp(LOG_STD_MIN, LOG_STD_MAX);
        let sigma = logs.exp();
        let pre = mu + sigma * xi[k];
        let t = pre.tanh();
        e.u[k] = t;
        e.tanh[k] = t;
        e.sigma[k] = sigma;
        e.logs_raw[k] = logs_raw;
        e.log_pi += -0.5 * xi[k] * xi[k] - logs - 0.5 * LN_2PI - (1.0 - t * t + TANH_EPS).ln();
    }
    e
}

/// Soft actor-critic with twin critics, polyak-averaged targets, and a
/// learned temperature.
#[derive(Clone, Debug)]
pub struct SacAgent {
    pub cfg: SacConfig,
    pub actor: DenseNet,
    pub critic1: DenseNet,
    pub critic2: DenseNet,
    pub target1: DenseNet,
    pub target2: DenseNet,
    pub log_alpha: f64,
    pub opt_actor: Adam,
    pub opt_c1: Adam,
    pub opt_c2: Adam,
    pub opt_alpha: Adam,
    pub updates: u64,
}

fn mlp(input: usize, hidden: &[usize], output: usize, rng: &mut impl Rng) -> DenseNet {
    let mut dims = Vec::with_capacity(hidden.len() + 2);
    dims.push(input);
    dims.extend_from_slice(hidden);
    dims.push(output);
    let mut acts = vec![Activation::Relu; hidden.len()];
    acts.push(Activation::Identity);
    DenseNet::new(&dims, &acts, rng)
}

impl SacAgent {
    pub fn new(cfg: SacConfig, rng: &mut impl Rng) -> Result<Self, RlError> {
        cfg.validate()?;
        let actor = mlp(cfg.obs_dim, &cfg.hidden, 2 * ACT_DIM, rng);
        let critic1 = mlp(cfg.obs_dim + ACT_DIM, &cfg.hidden, 1, rng);
        let critic2 = mlp(cfg.obs_dim + ACT_DIM, &cfg.hidden, 1, rng);
        let target1 = critic1.clone();
        let target2 = critic2.clone();
        let (pa, pc) = (actor.param_count(), critic1.param_count());
        Ok(SacAgent {
            log_alpha: cfg.init_alpha.ln(),
            opt_actor: Adam::new(pa, cfg.lr),
            opt_c1: Adam::new(pc, cfg.lr),
            opt_c2: Adam::new(pc, cfg.lr),
            opt_alpha: Adam::new(1, cfg.lr),
            cfg,
            actor,
            critic1,
            critic2,
            target1,
            target2,
            updates: 0,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.log_alpha.exp()
    }

    /// Select a squashed action for `obs`. Deterministic mode returns
    /// `tanh(mu)`; otherwise the reparameterized sample.
    pub fn act(&self, obs: &[f64], deterministic: bool, rng: &mut ChaCha8Rng) -> [f64; ACT_DIM] {
        assert_eq!(obs.len(), self.cfg.obs_dim, "act: observation size mismatch");
        let out = self.actor.forward(obs);
        if deterministic {
            let mut u = [0.0; ACT_DIM];
            for k in 0..ACT_DIM {
                u[k] = out[k].tanh();
            }
            u
        } else {
            let mut xi = [0.0; ACT_DIM];
            for x in &mut xi {
                *x = rng.sample(StandardNormal);
            }
            eval_policy(&out, &xi).u
        }
    }

    /// One full SAC update on a uniformly sampled batch: both critics, actor,
    /// temperature, then a polyak step on the targets.
    pub fn update(
        &mut self,
        replay: &ReplayBuffer,
        rng: &mut ChaCha8Rng,
    ) -> Result<UpdateStats, RlError> {
        let b = self.cfg.batch_size;
        assert!(replay.len() >= b, "update: replay buffer smaller than one batch");

        // All randomness drawn in sample order, before any lane chunking.
        let idx = replay.sample_indices(b, rng);
        let mut xi_next = vec![[0.0; ACT_DIM]; b];
        let mut xi_act = vec![[0.0; ACT_DIM]; b];
        for s in 0..b {
            for k in 0..ACT_DIM {
                xi_next[s][k] = rng.sample(StandardNormal);
            }
        }
        for s in 0..b {
            for k in 0..ACT_DIM {
                xi_act[s][k] = rng.sample(StandardNormal);
            }
        }

        let cg = self.critic_gradients(replay, &idx, &xi_next);
        self.opt_c1.step_net(&mut self.critic1, &cg.g1)?;
        self.opt_c2.step_net(&mut self.critic2, &cg.g2)?;

        // The actor objective reads the critics just stepped above.
        let ag = self.actor_gradients(replay, &idx, &xi_act);
        self.opt_actor.step_net(&mut self.actor, &ag.grad)?;

        // --- Temperature: d/d(log alpha) of -log_alpha * mean(log pi + H_target).
        let g_alpha = -(ag.mean_log_pi + self.cfg.target_entropy);
        let mut la = [self.log_alpha];
        self.opt_alpha.step(&mut la, &[g_alpha])?;
        self.log_alpha = la[0].clamp(LOG_ALPHA_MIN, LOG_ALPHA_MAX);

        self.polyak_update();
        self.updates += 1;
        Ok(UpdateStats {
            critic_loss: cg.loss,
            actor_loss: ag.loss,
            alpha: self.alpha(),
            entropy: -ag.mean_log_pi,
        })
    }

    /// Gradients of the twin-critic regression on one fixed batch, without
    /// touching any parameters.
    ///
    /// `idx` indexes the replay buffer and `xi_next` holds the standard-normal
    /// draws for the next-state policy sample, so the computation is a pure
    /// deterministic function of the agent state — which is what lets tests
    /// compare these gradients against finite differences of `loss`.
    pub fn critic_gradients(
        &self,
        replay: &ReplayBuffer,
        idx: &[usize],
        xi_next: &[[f64; ACT_DIM]],
    ) -> CriticGrads {
        let b = idx.len();
        assert_eq!(xi_next.len(), b, "critic_gradients: one noise draw per sample");
        let obs_dim = self.cfg.obs_dim;
        let alpha = self.alpha();
        let inv_b = 1.0 / b as f64;
        let chunks: Vec<Vec<usize>> =
            (0..b).collect::<Vec<_>>().chunks(LANES).map(|c| c.to_vec()).collect();

        // --- Critic targets: y = r + gamma (1 - done)(min target Q - alpha log pi').
        let mut targets = vec![0.0; b];
        for chunk in &chunks {
            let next_inputs: Vec<&[f64]> =
                chunk.iter().map(|&s| replay.get(idx[s]).next_obs.as_slice()).collect();
            let actor_out = self.actor.forward_block(&pack_block(&next_inputs));

            let mut qin: Vec<Vec<f64>> = Vec::with_capacity(chunk.len());
            let mut log_pis = Vec::with_capacity(chunk.len());
            for (l, &s) in chunk.iter().enumerate() {
                let mut out = vec![0.0; 2 * ACT_DIM];
                for k in 0..2 * ACT_DIM {
                    out[k] = actor_out[k * LANES + l];
                }
                let e = eval_policy(&out, &xi_next[s]);
                let mut input = Vec::with_capacity(obs_dim + ACT_DIM);
                input.extend_from_slice(&replay.get(idx[s]).next_obs);
                input.extend_from_slice(&e.u);
                qin.push(input);
                log_pis.push(e.log_pi);
            }
            let refs: Vec<&[f64]> = qin.iter().map(|v| v.as_slice()).collect();
            let block = pack_block(&refs);
            let q1 = self.target1.forward_block(&block);
            let q2 = self.target2.forward_block(&block);
            for (l, &s) in chunk.iter().enumerate() {
                let tr = replay.get(idx[s]);
                let qmin = q1[l].min(q2[l]);
                let not_done = if tr.done { 0.0 } else { 1.0 };
                targets[s] = tr.reward
                    + self.cfg.gamma * not_done * (qmin - alpha * log_pis[l]);
            }
        }

        // --- Critic regression toward the targets.
        let mut g1 = vec![0.0; self.critic1.param_count()];
        let mut g2 = vec![0.0; self.critic2.param_count()];
        let mut critic_loss = 0.0;
        for chunk in &chunks {
            let inputs: Vec<Vec<f64>> = chunk
                .iter()
                .map(|&s| {
                    let tr = replay.get(idx[s]);
                    let mut input = Vec::with_capacity(obs_dim + ACT_DIM);
                    input.extend_from_slice(&tr.obs);
                    input.extend_from_slice(&tr.action);
                    input
                })
                .collect();
            let refs: Vec<&[f64]> = inputs.iter().map(|v| v.as_slice()).collect();
            let block = pack_block(&refs);
            let (q1, tape1) = self.critic1.forward_block_traced(&block);
            let (q2, tape2) = self.critic2.forward_block_traced(&block);
            let mut d1 = vec![0.0; LANES];
            let mut d2 = vec![0.0; LANES];
            for (l, &s) in chunk.iter().enumerate() {
                let (e1, e2) = (q1[l] - targets[s], q2[l] - targets[s]);
                critic_loss += (e1 * e1 + e2 * e2) * inv_b;
                d1[l] = 2.0 * e1 * inv_b;
                d2[l] = 2.0 * e2 * inv_b;
            }
            self.critic1.backward_block(&tape1, &d1, &mut g1);
            self.critic2.backward_block(&tape2, &d2, &mut g2);
        }
        CriticGrads { g1, g2, loss: critic_loss }
    }

    /// Gradient of the actor objective `mean(alpha log pi - min_j Q_j(s, u))`
    /// on one fixed batch, read against the critics as they currently stand.
    ///
    /// Like [`SacAgent::critic_gradients`] this touches no parameters and is a
    /// pure deterministic function of the agent state once `idx` and the noise
    /// draws `xi_act` are fixed.
    pub fn actor_gradients(
        &self,
        replay: &ReplayBuffer,
        idx: &[usize],
        xi_act: &[[f64; ACT_DIM]],
    ) -> ActorGrads {
        let b = idx.len();
        assert_eq!(xi_act.len(), b, "actor_gradients: one noise draw per sample");
        let obs_dim = self.cfg.obs_dim;
        let alpha = self.alpha();
        let inv_b = 1.0 / b as f64;
        let chunks: Vec<Vec<usize>> =
            (0..b).collect::<Vec<_>>().chunks(LANES).map(|c| c.to_vec()).collect();

        let mut g_actor = vec![0.0; self.actor.param_count()];
        // Critic gradients from this stage are discarded (only their input
        // gradients matter), so one unzeroed scratch buffer serves both.
        let mut scratch = vec![0.0; self.critic1.param_count()];
        let mut actor_loss = 0.0;
        let mut log_pi_sum = 0.0;
        for chunk in &chunks {
            let obs_refs: Vec<&[f64]> =
                chunk.iter().map(|&s| replay.get(idx[s]).obs.as_slice()).collect();
            let (actor_out, actor_tape) = self.actor.forward_block_traced(&pack_block(&obs_refs));

            let mut evals = Vec::with_capacity(chunk.len());
            let mut qin: Vec<Vec<f64>> = Vec::with_capacity(chunk.len());
            for (l, &s) in chunk.iter().enumerate() {
                let mut out = vec![0.0; 2 * ACT_DIM];
                for k in 0..2 * ACT_DIM {
                    out[k] = actor_out[k * LANES + l];
                }
                let e = eval_policy(&out, &xi_act[s]);
                let mut input = Vec::with_capacity(obs_dim + ACT_DIM);
                input.extend_from_slice(&replay.get(idx[s]).obs);
                input.extend_from_slice(&e.u);
                qin.push(input);
                evals.push(e);
            }
            let refs: Vec<&[f64]> = qin.iter().map(|v| v.as_slice()).collect();
            let block = pack_block(&refs);
            let (q1, tape1) = self.critic1.forward_block_traced(&block);
            let (q2, tape2) = self.critic2.forward_block_traced(&block);

            // Route each lane's unit gradient through its argmin critic only.
            let mut d1 = vec![0.0; LANES];
            let mut d2 = vec![0.0; LANES];
            for (l, _) in chunk.iter().enumerate() {
                if q1[l] <= q2[l] {
                    d1[l] = 1.0;
                } else {
                    d2[l] = 1.0;
                }
            }
            let in1 = self.critic1.backward_block(&tape1, &d1, &mut scratch);
            let in2 = self.critic2.backward_block(&tape2, &d2, &mut scratch);

            let mut dout = vec![0.0; 2 * ACT_DIM * LANES];
            for (l, &s) in chunk.iter().enumerate() {
                let e = &evals[l];
                let qmin = q1[l].min(q2[l]);
                actor_loss += (alpha * e.log_pi - qmin) * inv_b;
                log_pi_sum += e.log_pi;
                let dq_input = if q1[l] <= q2[l] { &in1 } else { &in2 };
                for k in 0..ACT_DIM {
                    let t = e.tanh[k];
                    let one_m_t2 = 1.0 - t * t;
                    let g_pre = 2.0 * t * one_m_t2 / (one_m_t2 + TANH_EPS);
                    let dq_du = dq_input[(obs_dim + k) * LANES + l];
                    let sx = e.sigma[k] * xi_act[s][k];

                    let d_mu = (alpha * g_pre - dq_du * one_m_t2) * inv_b;
                    let mut d_logs = (alpha * (g_pre * sx - 1.0) - dq_du * one_m_t2 * sx) * inv_b;
                    // Straight-through clamp: outside the log-std bounds only
                    // gradients that pull back inside may pass (descent moves
                    // parameters along the negative gradient).
                    if (e.logs_raw[k] <= LOG_STD_MIN && d_logs > 0.0)
                        || (e.logs_raw[k] >= LOG_STD_MAX && d_logs < 0.0)
                    {
                        d_logs = 0.0;
                    }
                    dout[k * LANES + l] = d_mu;
                    dout[(ACT_DIM + k) * LANES + l] = d_logs;
                }
            }
            self.actor.backward_block(&actor_tape, &dout, &mut g_actor);
        }
        ActorGrads { grad: g_actor, loss: actor_loss, mean_log_pi: log_pi_sum * inv_b }
    }

    /// `target <- polyak * online + (1 - polyak) * target` on both critics.
    pub fn polyak_update(&mut self) {
        let rho = self.cfg.polyak;
        let p1 = self.critic1.flat_params();
        self.target1.for_each_param_mut(|i, p| *p = rho * p1[i] + (1.0 - rho) * *p);
        let p2 = self.critic2.flat_params();
        self.target2.for_each_param_mut(|i, p| *p = rho * p2[i] + (1.0 - rho) * *p);
    }
}

/// Serializable container for the full agent (optimizer state included).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SacCheckpoint {
    pub format_version: u32,
    pub cfg: SacConfig,
    pub log_alpha: f64,
    pub updates: u64,
    pub actor: NetCheckpoint,
    pub critic1: NetCheckpoint,
    pub critic2: NetCheckpoint,
    pub target1: NetCheckpoint,
    pub target2: NetCheckpoint,
    pub opt_alpha_m: f64,
    pub opt_alpha_v: f64,
    pub opt_alpha_step: u64,
}

impl SacCheckpoint {
    pub fn capture(agent: &SacAgent) -> Self {
        SacCheckpoint {
            format_version: crate::numerics::CHECKPOINT_FORMAT_VERSION,
            cfg: agent.cfg.clone(),
            log_alpha: agent.log_alpha,
            updates: agent.updates,
            actor: NetCheckpoint::capture(&agent.actor, Some(&agent.opt_actor)),
            critic1: NetCheckpoint::capture(&agent.critic1, Some(&agent.opt_c1)),
            critic2: NetCheckpoint::capture(&agent.critic2, Some(&agent.opt_c2)),
            target1: NetCheckpoint::capture(&agent.target1, None),
            target2: NetCheckpoint::capture(&agent.target2, None),
            opt_alpha_m: agent.opt_alpha.m[0],
            opt_alpha_v: agent.opt_alpha.v[0],
            opt_alpha_step: agent.opt_alpha.step,
        }
    }

    pub fn restore(&self) -> Result<SacAgent, RlError> {
        self.cfg.validate()?;
        let (actor, opt_actor) = self.actor.restore()?;
        let (critic1, opt_c1) = self.critic1.restore()?;
        let (critic2, opt_c2) = self.critic2.restore()?;
        let (target1, _) = self.target1.restore()?;
        let (target2, _) = self.target2.restore()?;
        let missing =
            || RlError::Config("checkpoint is missing optimizer state".into());
        let mut opt_alpha = Adam::new(1, self.cfg.lr);
        opt_alpha.m[0] = self.opt_alpha_m;
        opt_alpha.v[0] = self.opt_alpha_v;
        opt_alpha.step = self.opt_alpha_step;
        let agent = SacAgent {
            cfg: self.cfg.clone(),
            log_alpha: self.log_alpha,
            updates: self.updates,
            opt_actor: opt_actor.ok_or_else(missing)?,
            opt_c1: opt_c1.ok_or_else(missing)?,
            opt_c2: opt_c2.ok_or_else(missing)?,
            opt_alpha,
            actor,
            critic1,
            critic2,
            target1,
            target2,
        };
        if agent.actor.input_dim() != agent.cfg.obs_dim
            || agent.critic1.input_dim() != agent.cfg.obs_dim + ACT_DIM
        {
            return Err(RlError::Config(format!(
                "checkpoint networks do not match obs_dim {}",
                agent.cfg.obs_dim
            )));
        }
        Ok(agent)
    }
}

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::replay::{ReplayBuffer, Transition};
use super::sac::{action_to_command, SacAgent, SacConfig, ACT_DIM};
use super::tracker::WaypointTracker;
use super::RlError;
use crate::diffusion::{DiffusionModel, PathConstraint};
use crate::env::{env_reset, env_step, observe, reward, PursuerKind, WorldConfig};
use crate::pursuit::{detections_from_events, pursuit_step, PursuitMemory, TeamView};
use crate::util::{derive_seed, rng_from_seed};

/// What the evader trains against.
pub enum TrainMode<'a> {
    /// Observation augmented with the current waypoint; waypoint-guidance
    /// reward. One diffusion path is sampled per episode.
    Waypoint { model: &'a DiffusionModel },
    /// Raw observation and the bare episode score as reward (+50 goal,
    /// -50 timeout, -1 per detected step). No waypoints.
    Plain,
}

impl TrainMode<'_> {
    pub fn uses_waypoints(&self) -> bool {
        matches!(self, TrainMode::Waypoint { .. })
    }
}

/// Steps a random exploration heading is held for (see `train_evader`).
const EXPLORE_HOLD: usize = 25;

/// Epsilon-greedy overlay on policy-driven steps, annealed linearly from
/// `EXPLORE_EPS_START` (first episode) to `EXPLORE_EPS_END` (last episode).
///
/// Replay-based actor-critic learning only ranks actions it has seen: once
/// the warmup ends, a policy that has settled into a poor heading would never
/// generate evidence about better ones, and the critic's action-gradient at
/// the states it visits goes stale. A small persistent chance of taking a
/// random-walk step keeps every action direction represented near the
/// agent's own trajectory for the whole run.
const EXPLORE_EPS_START: f64 = 0.30;
const EXPLORE_EPS_END: f64 = 0.10;

/// Training schedule knobs (the agent itself is configured via `SacConfig`).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrainBudget {
    pub episodes: usize,
    /// Steps of uniform random exploration before the policy takes over.
    pub start_steps: usize,
    /// Environment steps between gradient updates.
    pub update_every: usize,
    /// Replay size required before updates begin.
    pub min_replay: usize,
}

impl TrainBudget {
    /// Small budget sized for single-core CI-style runs.
    pub fn smoke() -> Self {
        TrainBudget { episodes: 280, start_steps: 6000, update_every: 1, min_replay: 1024 }
    }

    /// Larger budget for real training runs.
    pub fn full() -> Self {
        TrainBudget { episodes: 600, start_steps: 5000, update_every: 1, min_replay: 2048 }
    }
}

/// Per-episode training diagnostics.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EpisodeStat {
    pub episode: usize,
    pub steps: u32,
    pub ret: f64,
    pub detected_steps: u32,
    pub goal: bool,
    /// True when the episode's diffusion path exhausted sampling retries and
    /// fell back to the projected output.
    pub warned_path: bool,
}

pub struct TrainOutput {
    pub agent: SacAgent,
    pub curve: Vec<EpisodeStat>,
}

/// Observation size the agent needs for a world config and mode.
pub fn obs_dim_for(cfg: &WorldConfig, waypoint_mode: bool) -> usize {
    cfg.obs_dim() + if waypoint_mode { 2 } else { 0 }
}

/// Train an evader against the fixed pursuit team.
///
/// Deterministic in `(cfg, mode, sac_cfg, budget, seed)`: every stream (net
/// init, exploration, episode layouts, waypoint sampling, batch sampling) is
/// derived from `seed`.
pub fn train_evader(
    cfg: &WorldConfig,
    mode: TrainMode<'_>,
    sac_cfg: &SacConfig,
    budget: &TrainBudget,
    seed: u64,
) -> Result<TrainOutput, RlError> {
    let expected = obs_dim_for(cfg, mode.uses_waypoints());
    if sac_cfg.obs_dim != expected {
        return Err(RlError::Config(format!(
            "agent obs_dim {} does not match the world/mode ({expected})",
            sac_cfg.obs_dim
        )));
    }
    if let TrainMode::Waypoint { model } = &mode {
        if model.obstacle_slots != cfg.obstacle_slots {
            return Err(RlError::Config(format!(
                "diffusion model has {} obstacle slots, world has {}",
                model.obstacle_slots, cfg.obstacle_slots
            )));
        }
    }

    let mut init_rng = rng_from_seed(derive_seed(seed, 0));
    let mut act_rng = rng_from_seed(derive_seed(seed, 1));
    let mut upd_rng = rng_from_seed(derive_seed(seed, 2));
    let mut agent = SacAgent::new(sac_cfg.clone(), &mut init_rng)?;
    let mut replay = ReplayBuffer::new(sac_cfg.replay_capacity);

    let mut curve = Vec::with_capacity(budget.episodes);
    let mut total_steps = 0usize;
    // Exploration heading-hold state (see below).
    let mut held_heading = 0.0f64;
    let mut hold_left = 0usize;

    for episode in 0..budget.episodes {
        let ep_seed = derive_seed(seed, 1000 + episode as u64);
        let mut world = env_reset(cfg, ep_seed)?;
        let mut memory = PursuitMemory::new(cfg);

        let mut warned_path = false;
        let mut tracker = match &mode {
            TrainMode::Waypoint { model } => {
                // Condition the path on the active hideout nearest the start;
                // a deterministic target keeps the guidance consistent across
                // episodes with similar layouts.
                let goal = world
                    .hideouts
                    .iter()
                    .copied()
                    .min_by(|a, b| {
                        let (da, db) = (a.dist(world.evader_pos), b.dist(world.evader_pos));
                        da.partial_cmp(&db).expect("finite distances")
                    })
                    .expect("validated configs keep at least one hideout");
                let constraint = PathConstraint {
                    start: world.evader_pos,
                    goal,
                    obstacles: cfg.obstacles.clone(),
                };
                let sample =
                    &model.sample_paths(&constraint, 1, derive_seed(ep_seed, 8), 3)?[0];
                warned_path = sample.warned;
                Some(WaypointTracker::new(sample.path.clone(), cfg.waypoint_radius))
            }
            TrainMode::Plain => None,
        };

        let build_obs = |world: &crate::env::WorldState,
                         tracker: &Option<WaypointTracker>|
         -> Vec<f64> {
            let mut v = observe(world, cfg).to_vector();
            if let Some(tr) = tracker {
                let w = tr.current();
                v.push(w.x);
                v.push(w.y);
            }
            v
        };

        let mut obs = build_obs(&world, &tracker);
        let mut pending = Vec::new();
        let (mut ep_return, mut detected_steps) = (0.0, 0u32);

        // Exploration schedule: alternate guided/random during the warmup,
        // then keep refreshing the buffer with one guided episode in five.
        // Off-policy bootstrapping dilutes old demonstrations (their targets
        // are recomputed under the current policy), so without the refresher
        // the fast-traversal evidence fades before the actor absorbs it.
        // Guidance needs a waypoint path, so plain training skips it.
        let guided = tracker.is_some()
            && ((total_steps < budget.start_steps && episode % 2 == 0)
                || (total_steps >= budget.start_steps && episode % 5 == 0));

        let frac_done = episode as f64 / (budget.episodes - 1).max(1) as f64;
        let eps = EXPLORE_EPS_START + (EXPLORE_EPS_END - EXPLORE_EPS_START) * frac_done;

        while !world.is_terminal() {
            let explore =
                total_steps < budget.start_steps || act_rng.gen_range(0.0..1.0) < eps;
            let u: [f64; ACT_DIM] = if guided {
                // Guided episode: steer roughly at the current waypoint,
                // creeping past nearby threats and sprinting in the open.
                // This seeds the replay buffer with waypoint-reach bonuses,
                // goal terminals, and the speed modulation the detection
                // radius rewards; a pure random walk almost never produces
                // any of those.
                let tr = tracker.as_ref().expect("guided requires a waypoint path");
                let to_wp = tr.current() - world.evader_pos;
                let mut h = to_wp.y.atan2(to_wp.x) / std::f64::consts::PI
                    + act_rng.gen_range(-0.15..0.15);
                if h > 1.0 {
                    h -= 2.0;
                } else if h < -1.0 {
                    h += 2.0;
                }
                let (mut cam_d, mut dyn_d) = (f64::INFINITY, f64::INFINITY);
                for p in &world.pursuers {
                    let d = p.pos.dist(world.evader_pos);
                    if matches!(p.kind, PursuerKind::Camera) {
                        cam_d = cam_d.min(d);
                    } else {
                        dyn_d = dyn_d.min(d);
                    }
                }
                let s = if dyn_d < 0.10 {
                    // Full stop (inside the deadband): the only way to
                    // break an on-top pursuit lock.
                    act_rng.gen_range(-1.0..-0.75)
                } else if dyn_d < 0.20 || cam_d < 0.06 {
                    // Creep: the detection radius shrinks with speed.
                    act_rng.gen_range(-0.6..-0.3)
                } else {
                    act_rng.gen_range(0.2..1.0)
                };
                [h, s]
            } else if explore {
                // Undirected coverage: hold a random heading for a window
                // of steps (per-step uniform headings cancel out and the
                // walk never leaves the start corner). The speed draw is
                // biased toward motion — the stopped region needs no help
                // from exploration, the policy parks there on its own, and
                // what the critic chronically lacks is evidence about
                // moving.
                if hold_left == 0 {
                    held_heading = act_rng.gen_range(-1.0..1.0);
                    hold_left = EXPLORE_HOLD;
                }
                hold_left -= 1;
                [held_heading, act_rng.gen_range(-0.5..1.0)]
            } else {
                agent.act(&obs, false, &mut act_rng)
            };

            let view = TeamView { pursuers: &world.pursuers, detections: &pending, t: world.t };
            let cmds = pursuit_step(&mut memory, &view, cfg);
            let events = env_step(&mut world, cfg, action_to_command(u), &cmds)?;
            pending =
                detections_from_events(events.detection_count > 0, world.evader_pos, world.t);

            let r = match &mut tracker {
                Some(tr) => {
                    let reached = tr.advance(world.evader_pos);
                    reward(&events, world.evader_pos, tr.current(), reached, &cfg.reward)
                }
                None => {
                    let terminal = if events.goal_reached {
                        50.0
                    } else if events.timeout {
                        -50.0
                    } else {
                        0.0
                    };
                    let detected = if events.detection_count > 0 { 1.0 } else { 0.0 };
                    terminal - detected
                }
            };

            let next_obs = build_obs(&world, &tracker);
            replay.push(Transition {
                obs: std::mem::take(&mut obs),
                action: u,
                reward: r,
                next_obs: next_obs.clone(),
                // Time-limit truncation keeps bootstrapping.
                done: events.goal_reached,
            });
            obs = next_obs;

            ep_return += r;
            detected_steps += u32::from(events.detection_count > 0);
            total_steps += 1;

            if replay.len() >= budget.min_replay.max(sac_cfg.batch_size)
                && total_steps % budget.update_every == 0
            {
                agent.update(&replay, &mut upd_rng)?;
            }
        }

        curve.push(EpisodeStat {
            episode,
            steps: world.t,
            ret: ep_return,
            detected_steps,
            goal: matches!(world.outcome, Some(crate::env::Outcome::Goal)),
            warned_path,
        });
    }

    Ok(TrainOutput { agent, curve })
}

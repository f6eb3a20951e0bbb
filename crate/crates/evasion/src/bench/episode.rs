use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::BenchError;
use crate::costmap::{select_path, Costmap};
use crate::diffusion::{DiffusionModel, PathConstraint};
use crate::env::{
    env_reset, env_step, observe, EvaderAction, Outcome, PursuerKind, WorldConfig, WorldState,
};
use crate::geom::Vec2;
use crate::planners::{
    astar_path, rrt_star, ScriptedEvader, ScriptedParams, WaypointPath, ASTAR_GRID_N,
};
use crate::planners::vo_action;
use crate::pursuit::{detections_from_events, pursuit_step, PursuitMemory, TeamView};
use crate::rl::{action_to_command, obs_dim_for, SacAgent, WaypointTracker};
use crate::util::{derive_seed, rng_from_seed};

/// All benchmarked policies, in canonical presentation order.
pub const POLICY_TAGS: [&str; 7] = [
    "astar-heuristic",
    "rrtstar-heuristic",
    "vo",
    "sac-only",
    "diffusion-only",
    "diffusion-rl",
    "diffusion-rl-map",
];

/// RRT* iteration budget for the planning baselines.
pub const RRT_EVAL_ITERATIONS: usize = 3000;
/// Candidate global paths drawn for costmap selection, round-robin across
/// the episode's active hideouts.
pub const N_CANDIDATE_PATHS: usize = 20;

/// An evaluation policy together with the artifacts it needs.
#[derive(Clone, Copy)]
pub enum Policy<'a> {
    AstarHeuristic,
    RrtStarHeuristic,
    Vo,
    SacOnly { agent: &'a SacAgent },
    DiffusionOnly { model: &'a DiffusionModel },
    DiffusionRl { model: &'a DiffusionModel, agent: &'a SacAgent },
    DiffusionRlMap { model: &'a DiffusionModel, agent: &'a SacAgent, map: &'a Costmap },
}

impl Policy<'_> {
    pub fn tag(&self) -> &'static str {
        match self {
            Policy::AstarHeuristic => POLICY_TAGS[0],
            Policy::RrtStarHeuristic => POLICY_TAGS[1],
            Policy::Vo => POLICY_TAGS[2],
            Policy::SacOnly { .. } => POLICY_TAGS[3],
            Policy::DiffusionOnly { .. } => POLICY_TAGS[4],
            Policy::DiffusionRl { .. } => POLICY_TAGS[5],
            Policy::DiffusionRlMap { .. } => POLICY_TAGS[6],
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: u32,
    pub evader: Vec2,
    pub speed: f64,
    /// All pursuer positions, world order (cameras first).
    pub pursuers: Vec<Vec2>,
    pub detections: u32,
    /// Raw-score increment for this step.
    pub reward: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub seed: u64,
    pub policy: String,
    pub pursuer_kinds: Vec<PursuerKind>,
    pub hideouts: Vec<Vec2>,
    pub start: Vec2,
    pub steps: Vec<StepRecord>,
    pub outcome: Outcome,
    pub detected_steps: u32,
    pub length: u32,
    /// The global path the evader followed, when the policy has one.
    pub planned_path: Option<WaypointPath>,
}

/// The per-episode policy execution state.
enum Executor<'a> {
    Scripted(ScriptedEvader),
    Vo { goal: Vec2 },
    Sac { agent: &'a SacAgent },
    FollowWaypoints(WaypointTracker),
    SacWaypoints { agent: &'a SacAgent, tracker: WaypointTracker },
}

fn nearest_hideout(world: &WorldState) -> Vec2 {
    *world
        .hideouts
        .iter()
        .min_by(|a, b| a.dist(world.evader_pos).total_cmp(&b.dist(world.evader_pos)))
        .expect("worlds always have at least one active hideout")
}

fn check_sac(agent: &SacAgent, cfg: &WorldConfig, waypoints: bool) -> Result<(), BenchError> {
    let expected = obs_dim_for(cfg, waypoints);
    if agent.cfg.obs_dim != expected {
        return Err(BenchError::Artifact(format!(
            "agent expects obs_dim {}, this world/mode needs {}",
            agent.cfg.obs_dim, expected
        )));
    }
    Ok(())
}

fn check_model(model: &DiffusionModel, cfg: &WorldConfig) -> Result<(), BenchError> {
    if model.obstacle_slots != cfg.obstacle_slots {
        return Err(BenchError::Artifact(format!(
            "diffusion model has {} obstacle slots, world has {}",
            model.obstacle_slots, cfg.obstacle_slots
        )));
    }
    Ok(())
}

/// Draw candidate paths round-robin over the active hideouts and keep the
/// one the costmap scores lowest.
fn select_global_path(
    model: &DiffusionModel,
    map: &Costmap,
    world: &WorldState,
    cfg: &WorldConfig,
    seed: u64,
) -> Result<WaypointPath, BenchError> {
    let n_h = world.hideouts.len();
    let mut candidates = Vec::with_capacity(N_CANDIDATE_PATHS);
    for (j, &goal) in world.hideouts.iter().enumerate() {
        let share = N_CANDIDATE_PATHS / n_h + usize::from(j < N_CANDIDATE_PATHS % n_h);
        if share == 0 {
            continue;
        }
        let constraint =
            PathConstraint { start: world.evader_pos, goal, obstacles: cfg.obstacles.clone() };
        for s in model.sample_paths(&constraint, share, derive_seed(seed, 40 + j as u64), 3)? {
            candidates.push(s.path);
        }
    }
    let (_, best) = select_path(map, &candidates)?;
    Ok(best)
}

/// Run one full episode of `policy` against the pursuit team.
/// Deterministic in `(cfg, policy artifacts, seed)`.
pub fn run_episode(
    cfg: &WorldConfig,
    policy: &Policy<'_>,
    seed: u64,
) -> Result<EpisodeLog, BenchError> {
    let mut world = env_reset(cfg, seed)?;
    let mut memory = PursuitMemory::new(cfg);
    // Only stochastic policies draw from this; kept for all so the loop is
    // uniform.
    let mut act_rng = rng_from_seed(derive_seed(seed, 9));

    let goal = nearest_hideout(&world);
    let mut planned_path = None;
    let mut exec = match policy {
        Policy::AstarHeuristic => {
            let path = astar_path(&cfg.obstacles, world.evader_pos, goal, ASTAR_GRID_N)?;
            Executor::Scripted(ScriptedEvader::new(path, ScriptedParams::default()))
        }
        Policy::RrtStarHeuristic => {
            let path = rrt_star(
                &cfg.obstacles,
                world.evader_pos,
                goal,
                RRT_EVAL_ITERATIONS,
                derive_seed(seed, 3),
            )?;
            Executor::Scripted(ScriptedEvader::new(path, ScriptedParams::default()))
        }
        Policy::Vo => Executor::Vo { goal },
        Policy::SacOnly { agent } => {
            check_sac(agent, cfg, false)?;
            Executor::Sac { agent }
        }
        Policy::DiffusionOnly { model } => {
            check_model(model, cfg)?;
            let constraint = PathConstraint {
                start: world.evader_pos,
                goal,
                obstacles: cfg.obstacles.clone(),
            };
            let path = model.sample_paths(&constraint, 1, derive_seed(seed, 8), 3)?[0]
                .path
                .clone();
            planned_path = Some(path.clone());
            Executor::FollowWaypoints(WaypointTracker::new(path, cfg.waypoint_radius))
        }
        Policy::DiffusionRl { model, agent } => {
            check_model(model, cfg)?;
            check_sac(agent, cfg, true)?;
            let constraint = PathConstraint {
                start: world.evader_pos,
                goal,
                obstacles: cfg.obstacles.clone(),
            };
            let path = model.sample_paths(&constraint, 1, derive_seed(seed, 8), 3)?[0]
                .path
                .clone();
            planned_path = Some(path.clone());
            Executor::SacWaypoints {
                agent,
                tracker: WaypointTracker::new(path, cfg.waypoint_radius),
            }
        }
        Policy::DiffusionRlMap { model, agent, map } => {
            check_model(model, cfg)?;
            check_sac(agent, cfg, true)?;
            let path = select_global_path(model, map, &world, cfg, seed)?;
            planned_path = Some(path.clone());
            Executor::SacWaypoints {
                agent,
                tracker: WaypointTracker::new(path, cfg.waypoint_radius),
            }
        }
    };

    let start = world.evader_pos;
    let pursuer_kinds: Vec<PursuerKind> = world.pursuers.iter().map(|p| p.kind).collect();
    let hideouts = world.hideouts.clone();
    let mut steps = Vec::new();
    let mut pending = Vec::new();
    let mut detected_steps = 0u32;

    while !world.is_terminal() {
        let obs = observe(&world, cfg);
        let action: EvaderAction = match &mut exec {
            Executor::Scripted(ev) => ev.act(&obs, cfg),
            Executor::Vo { goal } => vo_action(&obs, *goal, cfg),
            Executor::Sac { agent } => {
                action_to_command(agent.act(&obs.to_vector(), true, &mut act_rng))
            }
            Executor::FollowWaypoints(tracker) => {
                let w = tracker.current();
                let d = w - world.evader_pos;
                EvaderAction::new(d.y.atan2(d.x), 1.0)
            }
            Executor::SacWaypoints { agent, tracker } => {
                let mut v = obs.to_vector();
                let w = tracker.current();
                v.push(w.x);
                v.push(w.y);
                action_to_command(agent.act(&v, true, &mut act_rng))
            }
        };

        let view = TeamView { pursuers: &world.pursuers, detections: &pending, t: world.t };
        let cmds = pursuit_step(&mut memory, &view, cfg);
        let events = env_step(&mut world, cfg, action, &cmds)?;
        pending = detections_from_events(events.detection_count > 0, world.evader_pos, world.t);

        match &mut exec {
            Executor::FollowWaypoints(tracker)
            | Executor::SacWaypoints { tracker, .. } => {
                tracker.advance(world.evader_pos);
            }
            _ => {}
        }

        let detected = events.detection_count > 0;
        detected_steps += u32::from(detected);
        let reward = if events.goal_reached {
            50.0
        } else if events.timeout {
            -50.0
        } else {
            0.0
        } - f64::from(u8::from(detected));

        steps.push(StepRecord {
            t: world.t,
            evader: world.evader_pos,
            speed: world.evader_prev_speed,
            pursuers: world.pursuers.iter().map(|p| p.pos).collect(),
            detections: events.detection_count,
            reward,
        });
    }

    Ok(EpisodeLog {
        seed,
        policy: policy.tag().to_string(),
        pursuer_kinds,
        hideouts,
        start,
        steps,
        outcome: world.outcome.expect("loop exits only on a terminal state"),
        detected_steps,
        length: world.t,
        planned_path,
    })
}

/// Run one episode per seed, in parallel, preserving seed order.
pub fn run_episodes(
    cfg: &WorldConfig,
    policy: &Policy<'_>,
    seeds: &[u64],
) -> Result<Vec<EpisodeLog>, BenchError> {
    seeds.par_iter().map(|&s| run_episode(cfg, policy, s)).collect()
}

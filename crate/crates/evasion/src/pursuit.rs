//! The fixed heuristic pursuit-team policy used by every benchmark.
//!
//! All dynamic pursuers share one detection memory (cameras report into it
//! too) and move through four phases keyed on the age of the last detection:
//! intercept, predicted-path extrapolation, spiral vicinity search, and
//! patrol.

use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

use crate::env::{PursuerState, WorldConfig};
use crate::geom::Vec2;

/// Detection age thresholds (in steps) for the mode schedule.
pub const INTERCEPT_AGE: u32 = 5;
pub const PREDICTED_PATH_AGE: u32 = 30;
pub const VICINITY_AGE: u32 = 120;

/// Spiral pitch for the vicinity search: map units of radius gained per turn.
pub const SPIRAL_PITCH: f64 = 0.02;

/// Angular rate of the vicinity spiral in radians per step of detection age.
const SPIRAL_RATE: f64 = 0.35;

/// Distance at which a patrol waypoint counts as visited.
const PATROL_REACH: f64 = 0.02;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PursuitMode {
    Intercept,
    PredictedPath,
    Vicinity,
    Patrol,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub pos: Vec2,
    pub t: u32,
}

/// Shared memory of the pursuit team across one episode.
#[derive(Clone, Debug)]
pub struct PursuitMemory {
    /// Most recent detections, newest last (bounded ring).
    pub history: VecDeque<Detection>,
    /// Behavior mode each dynamic pursuer ran this step (for tracing).
    pub modes: Vec<PursuitMode>,
    /// Next patrol waypoint index per dynamic pursuer.
    patrol_next: Vec<usize>,
}

const HISTORY_CAP: usize = 8;

impl PursuitMemory {
    pub fn new(cfg: &WorldConfig) -> Self {
        let n = cfg.n_dynamic();
        // Stagger patrol start points so the team spreads over the loop.
        let len = cfg.patrol_waypoints.len();
        let patrol_next = (0..n).map(|i| i * len / n.max(1) % len).collect();
        PursuitMemory {
            history: VecDeque::with_capacity(HISTORY_CAP),
            modes: vec![PursuitMode::Patrol; n],
            patrol_next,
        }
    }

    pub fn last_detection(&self) -> Option<Detection> {
        self.history.back().copied()
    }

    fn record(&mut self, d: Detection) {
        if self.history.len() == HISTORY_CAP {
            self.history.pop_front();
        }
        self.history.push_back(d);
    }
}

/// What the pursuit team can see this step: its own agents plus any
/// detections (from cameras or dynamic agents).
pub struct TeamView<'a> {
    /// All pursuers, in world-state order (cameras included).
    pub pursuers: &'a [PursuerState],
    /// Evader positions detected this step.
    pub detections: &'a [Detection],
    pub t: u32,
}

/// Compute one velocity command per dynamic pursuer and update the memory.
///
/// Mode schedule by detection age: `< INTERCEPT_AGE` head straight for the
/// last detection; `< PREDICTED_PATH_AGE` (with at least two detections in
/// history) head for the extrapolated evader position; `< VICINITY_AGE`
/// sweep an Archimedean spiral around the last detection; otherwise patrol.
pub fn pursuit_step(
    memory: &mut PursuitMemory,
    view: &TeamView,
    cfg: &WorldConfig,
) -> Vec<Vec2> {
    for d in view.detections {
        memory.record(*d);
    }

    let mut commands = Vec::with_capacity(cfg.n_dynamic());
    let mut dyn_idx = 0;
    for p in view.pursuers.iter().filter(|p| p.kind.is_dynamic()) {
        let max_speed = cfg.speed_for(p.kind);
        let (mode, target) = select_target(memory, view.t, cfg, dyn_idx, p);
        memory.modes[dyn_idx] = mode;

        let cmd = match mode {
            PursuitMode::Patrol => {
                let next = &mut memory.patrol_next[dyn_idx];
                if p.pos.dist(cfg.patrol_waypoints[*next]) <= PATROL_REACH {
                    *next = (*next + 1) % cfg.patrol_waypoints.len();
                }
                steer(p.pos, cfg.patrol_waypoints[*next], max_speed)
            }
            _ => steer(p.pos, target, max_speed),
        };
        commands.push(cmd);
        dyn_idx += 1;
    }
    commands
}

fn select_target(
    memory: &PursuitMemory,
    t: u32,
    cfg: &WorldConfig,
    dyn_idx: usize,
    p: &PursuerState,
) -> (PursuitMode, Vec2) {
    let Some(last) = memory.last_detection() else {
        return (PursuitMode::Patrol, p.pos);
    };
    let age = t.saturating_sub(last.t);
    if age < INTERCEPT_AGE {
        return (PursuitMode::Intercept, last.pos);
    }
    if age < PREDICTED_PATH_AGE && memory.history.len() >= 2 {
        let prev = memory.history[memory.history.len() - 2];
        let heading = (last.pos - prev.pos).normalized();
        let target = last.pos + heading * (cfg.evader_speed * f64::from(age));
        return (PursuitMode::PredictedPath, target.clamp_unit());
    }
    if age < VICINITY_AGE {
        // Archimedean spiral around the last detection; phase offset per agent
        // so the team fans out.
        let phi = SPIRAL_RATE * f64::from(age)
            + 2.0 * std::f64::consts::PI * dyn_idx as f64 / cfg.n_dynamic().max(1) as f64;
        let r = SPIRAL_PITCH * phi / (2.0 * std::f64::consts::PI);
        let target = last.pos + Vec2::new(phi.cos(), phi.sin()) * r;
        return (PursuitMode::Vicinity, target.clamp_unit());
    }
    (PursuitMode::Patrol, p.pos)
}

/// Max-speed command toward `target`, shortened on final approach so the
/// agent lands exactly on it.
fn steer(from: Vec2, target: Vec2, max_speed: f64) -> Vec2 {
    let delta = target - from;
    let d = delta.norm();
    if d <= max_speed {
        delta
    } else {
        delta * (max_speed / d)
    }
}

/// Convenience used by episode drivers: turn this step's environment events
/// into detection records for the team view.
pub fn detections_from_events(
    detected: bool,
    evader_pos: Vec2,
    t: u32,
) -> Vec<Detection> {
    if detected {
        vec![Detection { pos: evader_pos, t }]
    } else {
        Vec::new()
    }
}

/// One pursuit mode trace entry per step (optional JSON-lines debugging).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModeTrace {
    pub t: u32,
    pub modes: Vec<PursuitMode>,
}

use super::path::DensePath;
use crate::env::{EvaderAction, EvaderObservation, WorldConfig};
use crate::geom::Vec2;

/// Parameters of the scripted path-following evader.
#[derive(Clone, Copy, Debug)]
pub struct ScriptedParams {
    /// A visible pursuer closer than this triggers evasive behavior.
    pub trigger_radius: f64,
    /// Number of steps the evasive behavior lasts once triggered.
    pub evade_steps: u32,
    /// Commanded speed fraction while evading.
    pub slow_frac: f64,
    /// Radius searched for the lowest-visibility nearby point.
    pub lowvis_radius: f64,
}

impl Default for ScriptedParams {
    fn default() -> Self {
        ScriptedParams { trigger_radius: 0.25, evade_steps: 20, slow_frac: 0.5, lowvis_radius: 0.1 }
    }
}

/// Distance at which a dense-path point counts as passed.
const ADVANCE_RADIUS: f64 = 0.02;

/// Pre-scripted adversarial evader: follows a planned path at max speed, and
/// on spotting a pursuer nearby it detours toward low visibility at half
/// speed for a fixed number of steps before rejoining the path.
#[derive(Clone, Debug)]
pub struct ScriptedEvader {
    pub path: DensePath,
    pub params: ScriptedParams,
    next_idx: usize,
    evade_left: u32,
    resync: bool,
}

impl ScriptedEvader {
    pub fn new(path: DensePath, params: ScriptedParams) -> Self {
        ScriptedEvader { path, params, next_idx: 0, evade_left: 0, resync: false }
    }

    pub fn act(&mut self, obs: &EvaderObservation, cfg: &WorldConfig) -> EvaderAction {
        scripted_evader_action(self, obs, cfg)
    }
}

/// One decision of the scripted evader (see [`ScriptedEvader`]).
pub fn scripted_evader_action(
    ev: &mut ScriptedEvader,
    obs: &EvaderObservation,
    cfg: &WorldConfig,
) -> EvaderAction {
    let pos = obs.evader_pos;

    let pursuer_near = obs
        .pursuers
        .iter()
        .any(|p| p.visible && p.pos.dist(pos) <= ev.params.trigger_radius);
    if pursuer_near {
        ev.evade_left = ev.params.evade_steps;
    }

    if ev.evade_left > 0 {
        ev.evade_left -= 1;
        ev.resync = true;
        let target = lowest_visibility_target(pos, ev.params.lowvis_radius, cfg);
        let delta = target - pos;
        let heading = if delta.norm() < 1e-12 { 0.0 } else { delta.y.atan2(delta.x) };
        return EvaderAction::new(heading, ev.params.slow_frac);
    }

    if ev.resync {
        // Rejoin at the nearest not-yet-passed path point.
        ev.resync = false;
        let mut best = ev.next_idx.min(ev.path.points.len() - 1);
        let mut best_d = f64::INFINITY;
        for j in ev.next_idx..ev.path.points.len() {
            let d = ev.path.points[j].dist(pos);
            if d < best_d {
                best_d = d;
                best = j;
            }
        }
        ev.next_idx = best;
    }

    while ev.next_idx + 1 < ev.path.points.len()
        && ev.path.points[ev.next_idx].dist(pos) <= ADVANCE_RADIUS
    {
        ev.next_idx += 1;
    }
    let target = ev.path.points[ev.next_idx.min(ev.path.points.len() - 1)];
    let delta = target - pos;
    let heading = if delta.norm() < 1e-12 { 0.0 } else { delta.y.atan2(delta.x) };
    EvaderAction::new(heading, 1.0)
}

/// The lowest-visibility point among a ring of candidates around `pos`
/// (current position included), skipping points inside obstacles.
fn lowest_visibility_target(pos: Vec2, radius: f64, cfg: &WorldConfig) -> Vec2 {
    let mut candidates = vec![pos];
    for k in 0..16 {
        let ang = 2.0 * std::f64::consts::PI * k as f64 / 16.0;
        let p = (pos + Vec2::from_polar(ang, radius)).clamp_unit();
        if cfg.obstacles.iter().all(|c| !c.contains(p)) {
            candidates.push(p);
        }
    }
    cfg.visibility.lowest_among(&candidates)
}

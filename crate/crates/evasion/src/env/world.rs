use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{DetectionParams, ViewMode, WorldConfig};
use super::EnvError;
use crate::geom::Vec2;
use crate::util::rng_from_seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PursuerKind {
    Camera,
    SearchParty,
    Helicopter,
}

impl PursuerKind {
    pub fn is_dynamic(self) -> bool {
        !matches!(self, PursuerKind::Camera)
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PursuerState {
    pub kind: PursuerKind,
    pub pos: Vec2,
    pub vel: Vec2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Goal,
    Timeout,
}

/// Evader command: heading in `[-pi, pi]`, speed as a fraction of max speed.
/// Both components are clamped into range before use.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaderAction {
    pub heading: f64,
    pub speed_frac: f64,
}

impl EvaderAction {
    pub fn new(heading: f64, speed_frac: f64) -> Self {
        EvaderAction { heading, speed_frac }
    }

    fn clamped(self) -> EvaderAction {
        EvaderAction {
            heading: self.heading.clamp(-std::f64::consts::PI, std::f64::consts::PI),
            speed_frac: self.speed_frac.clamp(0.0, 1.0),
        }
    }
}

/// Everything that happened in one step, as seen by rewards, metrics, and the
/// costmap builder.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StepEvents {
    pub detection_count: u32,
    pub detecting_kinds: Vec<PursuerKind>,
    pub goal_reached: bool,
    pub timeout: bool,
    /// Distance from the evader to the nearest dynamic pursuer.
    pub nearest_dynamic_dist: f64,
    /// Whether that nearest dynamic pursuer lies within the evader's
    /// field of view this step.
    pub nearest_in_fov: bool,
}

/// Full ground-truth simulation state.
#[derive(Clone, Debug)]
pub struct WorldState {
    pub t: u32,
    pub evader_pos: Vec2,
    /// Commanded evader speed on the previous step (map units/step).
    pub evader_prev_speed: f64,
    /// Cameras first (never move), then search parties, then helicopters.
    pub pursuers: Vec<PursuerState>,
    /// Active hideouts drawn for this episode.
    pub hideouts: Vec<Vec2>,
    pub outcome: Option<Outcome>,
    /// Environment RNG stream (consumed by reset; kept with the state so
    /// future stochastic dynamics stay reproducible).
    pub rng: ChaCha8Rng,
}

impl WorldState {
    pub fn is_terminal(&self) -> bool {
        self.outcome.is_some()
    }

    pub fn dynamic_pursuers(&self) -> impl Iterator<Item = &PursuerState> {
        self.pursuers.iter().filter(|p| p.kind.is_dynamic())
    }
}

/// Detection/FOV range `alpha * (beta_kind * c_v * target_speed + eta)`.
///
/// Used in both directions: the pursuit side detects the evader with
/// `target_speed` = evader speed, and the evader's field of view toward a
/// pursuer uses `target_speed` = that pursuer's speed.
pub fn detection_range(
    kind: PursuerKind,
    c_v: f64,
    target_speed: f64,
    params: &DetectionParams,
) -> f64 {
    assert!(target_speed >= 0.0, "detection_range: negative speed");
    assert!(c_v > 0.0 && c_v <= 1.0, "detection_range: c_v must lie in (0, 1]");
    params.alpha * (params.beta_for(kind) * c_v * target_speed + params.eta)
}

fn sample_free_point(
    rng: &mut ChaCha8Rng,
    cfg: &WorldConfig,
    min: Vec2,
    max: Vec2,
    what: &'static str,
) -> Result<Vec2, EnvError> {
    const ATTEMPTS: usize = 1000;
    for _ in 0..ATTEMPTS {
        let p = Vec2::new(rng.gen_range(min.x..=max.x), rng.gen_range(min.y..=max.y));
        if cfg.obstacles.iter().all(|c| !c.contains(p)) {
            return Ok(p);
        }
    }
    Err(EnvError::NoFreeSpace(what, ATTEMPTS))
}

/// Draw the initial world state for an episode. Deterministic in
/// `(config, seed)`: hideouts are drawn without replacement, the evader starts
/// uniformly in the corner region, and dynamic pursuers start uniformly in
/// free space.
pub fn env_reset(cfg: &WorldConfig, seed: u64) -> Result<WorldState, EnvError> {
    let mut rng = rng_from_seed(seed);

    let idx =
        rand::seq::index::sample(&mut rng, cfg.hideout_candidates.len(), cfg.hideouts_per_episode);
    let hideouts: Vec<Vec2> = idx.iter().map(|i| cfg.hideout_candidates[i]).collect();

    let evader_pos =
        sample_free_point(&mut rng, cfg, cfg.corner_start.min, cfg.corner_start.max, "evader")?;

    let mut pursuers = Vec::with_capacity(cfg.cameras.len() + cfg.n_dynamic());
    for &cam in &cfg.cameras {
        pursuers.push(PursuerState { kind: PursuerKind::Camera, pos: cam, vel: Vec2::ZERO });
    }
    for _ in 0..cfg.n_search_parties {
        let pos =
            sample_free_point(&mut rng, cfg, Vec2::ZERO, Vec2::new(1.0, 1.0), "search party")?;
        pursuers.push(PursuerState { kind: PursuerKind::SearchParty, pos, vel: Vec2::ZERO });
    }
    for _ in 0..cfg.n_helicopters {
        let pos = sample_free_point(&mut rng, cfg, Vec2::ZERO, Vec2::new(1.0, 1.0), "helicopter")?;
        pursuers.push(PursuerState { kind: PursuerKind::Helicopter, pos, vel: Vec2::ZERO });
    }

    Ok(WorldState {
        t: 0,
        evader_pos,
        evader_prev_speed: 0.0,
        pursuers,
        hideouts,
        outcome: None,
        rng,
    })
}

/// Move the evader while keeping it outside every obstacle and inside the map.
/// The blocked normal component is removed by radial push-out (the tangential
/// component survives, i.e. the evader slides along obstacle boundaries).
fn resolve_evader_move(cfg: &WorldConfig, from: Vec2, desired: Vec2) -> Vec2 {
    let mut p = desired.clamp_unit();
    for _ in 0..3 {
        let mut any = false;
        for c in &cfg.obstacles {
            if c.contains(p) {
                let out = (p - c.center).normalized();
                let dir = if out == Vec2::ZERO {
                    (from - c.center).normalized()
                } else {
                    out
                };
                let dir = if dir == Vec2::ZERO { Vec2::new(1.0, 0.0) } else { dir };
                p = c.center + dir * (c.radius + 1e-9);
                any = true;
            }
        }
        if !any {
            break;
        }
    }
    p = p.clamp_unit();
    if cfg.obstacles.iter().any(|c| c.contains(p)) {
        // Pathological corner case: give up on the move rather than violate
        // the obstacle-safety invariant.
        return from;
    }
    p
}

/// Advance the world by one step.
///
/// `pursuit_commands` holds one velocity command per dynamic pursuer, in state
/// order; commands are clamped to the per-type max speed. Detection is
/// deterministic: any pursuer (cameras included) strictly closer than its
/// detection range perceives the evader.
pub fn env_step(
    state: &mut WorldState,
    cfg: &WorldConfig,
    action: EvaderAction,
    pursuit_commands: &[Vec2],
) -> Result<StepEvents, EnvError> {
    if let Some(outcome) = state.outcome {
        return Err(EnvError::Terminal(outcome));
    }
    assert_eq!(
        pursuit_commands.len(),
        cfg.n_dynamic(),
        "env_step: one command per dynamic pursuer required"
    );

    let action = action.clamped();
    let speed = action.speed_frac * cfg.evader_speed;
    let desired = state.evader_pos + Vec2::from_polar(action.heading, speed);
    state.evader_pos = resolve_evader_move(cfg, state.evader_pos, desired);
    state.evader_prev_speed = speed;

    let mut cmd_iter = pursuit_commands.iter();
    for p in &mut state.pursuers {
        if !p.kind.is_dynamic() {
            continue;
        }
        let cmd = *cmd_iter.next().expect("command count checked above");
        let max = cfg.speed_for(p.kind);
        let n = cmd.norm();
        let vel = if n > max && n > 0.0 { cmd * (max / n) } else { cmd };
        p.vel = vel;
        p.pos = (p.pos + vel).clamp_unit();
    }

    state.t += 1;

    // Detection sweep. Visibility is evaluated at the evader's position: how
    // exposed the evader's surroundings are governs how far out it can be seen.
    let c_v = cfg.visibility.value(state.evader_pos);
    let mut detecting_kinds = Vec::new();
    for p in &state.pursuers {
        let d_s = detection_range(p.kind, c_v, speed, &cfg.detection);
        if p.pos.dist(state.evader_pos) < d_s {
            detecting_kinds.push(p.kind);
        }
    }

    let mut nearest_dynamic_dist = f64::INFINITY;
    let mut nearest: Option<&PursuerState> = None;
    for p in state.dynamic_pursuers() {
        let d = p.pos.dist(state.evader_pos);
        if d < nearest_dynamic_dist {
            nearest_dynamic_dist = d;
            nearest = Some(p);
        }
    }
    let nearest_in_fov = nearest
        .map(|p| {
            let d_e =
                detection_range(p.kind, cfg.visibility.value(p.pos), p.vel.norm(), &cfg.detection);
            nearest_dynamic_dist <= d_e
        })
        .unwrap_or(false);

    let goal_reached =
        state.hideouts.iter().any(|h| h.dist(state.evader_pos) <= cfg.capture_radius);
    let timeout = !goal_reached && state.t >= cfg.t_max;
    if goal_reached {
        state.outcome = Some(Outcome::Goal);
    } else if timeout {
        state.outcome = Some(Outcome::Timeout);
    }

    Ok(StepEvents {
        detection_count: detecting_kinds.len() as u32,
        detecting_kinds,
        goal_reached,
        timeout,
        nearest_dynamic_dist,
        nearest_in_fov,
    })
}

/// One dynamic pursuer as it appears to the evader.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ObservedPursuer {
    pub kind: PursuerKind,
    pub visible: bool,
    /// Zeroed when not visible.
    pub pos: Vec2,
    /// Zeroed when not visible.
    pub vel: Vec2,
}

/// The evader's (possibly partial) view of the world. Cameras never appear.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EvaderObservation {
    pub t_frac: f64,
    pub hideouts: Vec<Vec2>,
    /// Zero-padded to the config's obstacle slot count.
    pub obstacles: Vec<crate::geom::Circle>,
    pub evader_pos: Vec2,
    pub prev_speed: f64,
    pub pursuers: Vec<ObservedPursuer>,
}

impl EvaderObservation {
    /// Fixed-layout flat vector: `[t_frac, hideouts..., obstacles (cx,cy,r)...,
    /// evader x, evader y, prev_speed, per pursuer (flag, px, py, vx, vy)]`.
    pub fn to_vector(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(
            1 + 2 * self.hideouts.len() + 3 * self.obstacles.len() + 3 + 5 * self.pursuers.len(),
        );
        v.push(self.t_frac);
        for h in &self.hideouts {
            v.extend_from_slice(&[h.x, h.y]);
        }
        for c in &self.obstacles {
            v.extend_from_slice(&[c.center.x, c.center.y, c.radius]);
        }
        v.extend_from_slice(&[self.evader_pos.x, self.evader_pos.y, self.prev_speed]);
        for p in &self.pursuers {
            let flag = if p.visible { 1.0 } else { 0.0 };
            v.extend_from_slice(&[flag, p.pos.x, p.pos.y, p.vel.x, p.vel.y]);
        }
        v
    }
}

/// Build the evader's observation of `state`.
///
/// In local view a dynamic pursuer is visible iff its distance is at most the
/// evader's field-of-view range toward it (boundary inclusive), computed from
/// that pursuer's current speed and the visibility at the pursuer's position.
pub fn observe(state: &WorldState, cfg: &WorldConfig) -> EvaderObservation {
    let mut obstacles = Vec::with_capacity(cfg.obstacle_slots);
    for slot in 0..cfg.obstacle_slots {
        obstacles.push(
            cfg.obstacles
                .get(slot)
                .copied()
                .unwrap_or(crate::geom::Circle::new(Vec2::ZERO, 0.0)),
        );
    }

    let pursuers = state
        .dynamic_pursuers()
        .map(|p| {
            let visible = match cfg.view {
                ViewMode::Global => true,
                ViewMode::Local => {
                    let d_e = detection_range(
                        p.kind,
                        cfg.visibility.value(p.pos),
                        p.vel.norm(),
                        &cfg.detection,
                    );
                    p.pos.dist(state.evader_pos) <= d_e
                }
            };
            ObservedPursuer {
                kind: p.kind,
                visible,
                pos: if visible { p.pos } else { Vec2::ZERO },
                vel: if visible { p.vel } else { Vec2::ZERO },
            }
        })
        .collect();

    EvaderObservation {
        t_frac: f64::from(state.t) / f64::from(cfg.t_max),
        hideouts: state.hideouts.clone(),
        obstacles,
        evader_pos: state.evader_pos,
        prev_speed: state.evader_prev_speed,
        pursuers,
    }
}

/// Per-step evader reward
/// `r = r_g * [waypoint reached] - k_d * dist(evader, waypoint) - p_adv * detections`.
///
/// `waypoint_reached` comes from the waypoint tracker (it fires exactly once
/// per waypoint), so distance alone never triggers the bonus.
pub fn reward(
    events: &StepEvents,
    evader_pos: Vec2,
    waypoint: Vec2,
    waypoint_reached: bool,
    c: &super::config::RewardConstants,
) -> f64 {
    let reach = if waypoint_reached { c.r_g } else { 0.0 };
    reach - c.k_d * evader_pos.dist(waypoint) - c.p_adv * f64::from(events.detection_count)
}

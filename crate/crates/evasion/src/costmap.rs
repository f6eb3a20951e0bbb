//! Posterior detection-risk costmap.
//!
//! The map is built from rollouts of the learned hierarchy: whenever the
//! evader comes close to a dynamic pursuer it can see, a Gaussian bump is
//! deposited at the evader's position. The normalized grid then scores
//! candidate global paths by line integral, with ad-hoc zone overlays
//! (extra-cost or forbidden regions) painted on top.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diffusion::{DiffusionModel, PathConstraint};
use crate::env::{
    detection_range, env_reset, env_step, observe, EnvError, PursuerKind, WorldConfig,
};
use crate::geom::Vec2;
use crate::planners::WaypointPath;
use crate::pursuit::{detections_from_events, pursuit_step, PursuitMemory, TeamView};
use crate::rl::{action_to_command, SacAgent};
use crate::util::{derive_seed, rng_from_seed};

/// Default grid resolution (cells per side).
pub const COSTMAP_RESOLUTION: usize = 128;
/// Default deposit standard deviation in map units.
pub const COSTMAP_SIGMA: f64 = 0.02;
/// Default number of construction episodes.
pub const COSTMAP_EPISODES: usize = 200;
/// Deposits are truncated at this many standard deviations.
const DEPOSIT_TRUNCATION: f64 = 4.0;

#[derive(Debug, Error)]
pub enum CostmapError {
    #[error("zone lies outside the map extent: {0}")]
    ZoneOutsideExtent(String),
    #[error("every candidate path crosses a forbidden zone")]
    AllForbidden,
    #[error("costmap file is malformed: {0}")]
    Malformed(String),
    #[error("environment error: {0}")]
    Env(#[from] EnvError),
    #[error("diffusion error: {0}")]
    Diffusion(#[from] crate::diffusion::DiffusionError),
    #[error("rl error: {0}")]
    Rl(#[from] crate::rl::RlError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ZoneShape {
    Circle { center: Vec2, radius: f64 },
    Rect { min: Vec2, max: Vec2 },
}

impl ZoneShape {
    pub fn contains(&self, p: Vec2) -> bool {
        match *self {
            ZoneShape::Circle { center, radius } => center.dist(p) <= radius,
            ZoneShape::Rect { min, max } => {
                p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y
            }
        }
    }

    fn within_unit_square(&self) -> bool {
        match *self {
            ZoneShape::Circle { center, radius } => {
                radius > 0.0
                    && center.x - radius >= 0.0
                    && center.y - radius >= 0.0
                    && center.x + radius <= 1.0
                    && center.y + radius <= 1.0
            }
            ZoneShape::Rect { min, max } => {
                min.x <= max.x
                    && min.y <= max.y
                    && min.x >= 0.0
                    && min.y >= 0.0
                    && max.x <= 1.0
                    && max.y <= 1.0
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum ZoneEffect {
    /// Painted cost value (replaces the base value inside the zone).
    Value { value: f64 },
    /// Impassable: any path sampling the zone scores infinite cost.
    Forbidden,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Zone {
    pub shape: ZoneShape,
    pub effect: ZoneEffect,
}

/// Normalized detection-risk grid over the unit square plus zone overlays.
///
/// `base` stays finite and max-normalized; forbidden zones surface as an
/// infinite sentinel at query time so the serialized form stays portable.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Costmap {
    pub resolution: usize,
    /// Row-major base grid; index `row * resolution + col`, row 0 at y = 0.
    pub base: Vec<f64>,
    /// Deposit std the base was built with (map units).
    pub sigma: f64,
    /// Close-encounter threshold the base was built with (map units).
    pub epsilon_risk: f64,
    /// Overlays, painted in order (later zones win).
    pub zones: Vec<Zone>,
}

impl Costmap {
    pub fn zeros(resolution: usize, sigma: f64, epsilon_risk: f64) -> Self {
        assert!(resolution >= 2, "costmap resolution must be at least 2");
        Costmap {
            resolution,
            base: vec![0.0; resolution * resolution],
            sigma,
            epsilon_risk,
            zones: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<(), CostmapError> {
        if self.resolution < 2 {
            return Err(CostmapError::Malformed("resolution must be at least 2".into()));
        }
        if self.base.len() != self.resolution * self.resolution {
            return Err(CostmapError::Malformed(format!(
                "grid has {} values, expected {}",
                self.base.len(),
                self.resolution * self.resolution
            )));
        }
        if self.base.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(CostmapError::Malformed("base values must be finite and >= 0".into()));
        }
        for z in &self.zones {
            check_zone(z)?;
        }
        Ok(())
    }

    pub fn cell_center(&self, row: usize, col: usize) -> Vec2 {
        let r = self.resolution as f64;
        Vec2::new((col as f64 + 0.5) / r, (row as f64 + 0.5) / r)
    }

    /// Cell value with zone overlays applied at the cell center.
    pub fn cell_value(&self, row: usize, col: usize) -> f64 {
        let mut v = self.base[row * self.resolution + col];
        let c = self.cell_center(row, col);
        for z in &self.zones {
            if z.shape.contains(c) {
                v = match z.effect {
                    ZoneEffect::Value { value } => value,
                    ZoneEffect::Forbidden => f64::INFINITY,
                };
            }
        }
        v
    }

    /// Bilinear sample of the overlaid grid at a map point. Points inside a
    /// forbidden zone (or adjacent to a forbidden cell with nonzero weight)
    /// return infinity.
    pub fn sample(&self, p: Vec2) -> f64 {
        for z in &self.zones {
            if matches!(z.effect, ZoneEffect::Forbidden) && z.shape.contains(p) {
                return f64::INFINITY;
            }
        }
        let r = self.resolution;
        let scale = r as f64;
        // Continuous cell coordinates with cell centers at half-integers.
        let fx = (p.x.clamp(0.0, 1.0) * scale - 0.5).clamp(0.0, scale - 1.0);
        let fy = (p.y.clamp(0.0, 1.0) * scale - 0.5).clamp(0.0, scale - 1.0);
        let (c0, r0) = (fx.floor() as usize, fy.floor() as usize);
        let (c1, r1) = ((c0 + 1).min(r - 1), (r0 + 1).min(r - 1));
        let (tx, ty) = (fx - c0 as f64, fy - r0 as f64);

        let mut acc = 0.0;
        for (row, col, w) in [
            (r0, c0, (1.0 - tx) * (1.0 - ty)),
            (r0, c1, tx * (1.0 - ty)),
            (r1, c0, (1.0 - tx) * ty),
            (r1, c1, tx * ty),
        ] {
            if w == 0.0 {
                continue;
            }
            let v = self.cell_value(row, col);
            if v.is_infinite() {
                return f64::INFINITY;
            }
            acc += w * v;
        }
        acc
    }

    /// Total grid mass within `radius` of any of `centers` divided by total
    /// mass (cell centers, base grid only). Zero-mass maps return 0.
    pub fn mass_fraction_near(&self, centers: &[Vec2], radius: f64) -> f64 {
        let mut total = 0.0;
        let mut near = 0.0;
        for row in 0..self.resolution {
            for col in 0..self.resolution {
                let v = self.base[row * self.resolution + col];
                total += v;
                let c = self.cell_center(row, col);
                if centers.iter().any(|&h| h.dist(c) <= radius) {
                    near += v;
                }
            }
        }
        if total > 0.0 {
            near / total
        } else {
            0.0
        }
    }
}

fn check_zone(z: &Zone) -> Result<(), CostmapError> {
    if !z.shape.within_unit_square() {
        return Err(CostmapError::ZoneOutsideExtent(format!("{:?}", z.shape)));
    }
    if let ZoneEffect::Value { value } = z.effect {
        if !value.is_finite() || value < 0.0 {
            return Err(CostmapError::ZoneOutsideExtent(format!(
                "zone value must be finite and >= 0, got {value}"
            )));
        }
    }
    Ok(())
}

/// Overlay `zones` on `map` (appended after any existing zones).
pub fn adjust(map: &Costmap, zones: &[Zone]) -> Result<Costmap, CostmapError> {
    for z in zones {
        check_zone(z)?;
    }
    let mut out = map.clone();
    out.zones.extend_from_slice(zones);
    Ok(out)
}

/// Line integral of the map along a piecewise-linear path: trapezoid rule
/// over fixed arc-length steps of half a grid cell, bilinearly interpolated.
/// Any forbidden sample makes the whole cost infinite.
pub fn path_cost(map: &Costmap, path: &WaypointPath) -> f64 {
    let step = 0.5 / map.resolution as f64;
    let mut cost = 0.0;
    for seg in path.points.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let len = a.dist(b);
        if len == 0.0 {
            continue;
        }
        let n = (len / step).ceil().max(1.0) as usize;
        let ds = len / n as f64;
        let mut prev = map.sample(a);
        if prev.is_infinite() {
            return f64::INFINITY;
        }
        for k in 1..=n {
            let p = a + (b - a) * (k as f64 / n as f64);
            let v = map.sample(p);
            if v.is_infinite() {
                return f64::INFINITY;
            }
            cost += 0.5 * (prev + v) * ds;
            prev = v;
        }
    }
    cost
}

/// Minimum-cost candidate (ties broken by lowest index).
pub fn select_path(
    map: &Costmap,
    candidates: &[WaypointPath],
) -> Result<(usize, WaypointPath), CostmapError> {
    assert!(!candidates.is_empty(), "select_path requires at least one candidate");
    let mut best: Option<(usize, f64)> = None;
    for (i, p) in candidates.iter().enumerate() {
        let c = path_cost(map, p);
        if c.is_finite() && best.map_or(true, |(_, bc)| c < bc) {
            best = Some((i, c));
        }
    }
    match best {
        Some((i, _)) => Ok((i, candidates[i].clone())),
        None => Err(CostmapError::AllForbidden),
    }
}

/// Build parameters; `defaults` derives the close-encounter threshold from
/// the world's search-party detection radius at nominal visibility and full
/// evader speed, scaled by 1.5.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BuildParams {
    pub episodes: usize,
    pub resolution: usize,
    pub sigma: f64,
    pub epsilon_risk: f64,
    /// Stochastic low-level actions during construction rollouts.
    pub stochastic: bool,
}

impl BuildParams {
    pub fn defaults(cfg: &WorldConfig) -> Self {
        let base_radius =
            detection_range(PursuerKind::SearchParty, 1.0, cfg.evader_speed, &cfg.detection);
        BuildParams {
            episodes: COSTMAP_EPISODES,
            resolution: COSTMAP_RESOLUTION,
            sigma: COSTMAP_SIGMA,
            epsilon_risk: 1.5 * base_radius,
            stochastic: true,
        }
    }
}

/// Diagnostics from a build run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BuildReport {
    pub episodes: usize,
    pub deposits: usize,
    pub goal_episodes: usize,
    /// True when no deposit occurred (the map is identically zero).
    pub empty: bool,
}

fn deposit(grid: &mut [f64], resolution: usize, sigma: f64, x: Vec2) -> usize {
    let scale = resolution as f64;
    let radius = DEPOSIT_TRUNCATION * sigma;
    let row_lo = ((x.y - radius) * scale).floor().max(0.0) as usize;
    let row_hi = (((x.y + radius) * scale).ceil() as usize).min(resolution);
    let col_lo = ((x.x - radius) * scale).floor().max(0.0) as usize;
    let col_hi = (((x.x + radius) * scale).ceil() as usize).min(resolution);
    let inv_two_sigma2 = 1.0 / (2.0 * sigma * sigma);
    let mut touched = 0;
    for row in row_lo..row_hi {
        for col in col_lo..col_hi {
            let c = Vec2::new((col as f64 + 0.5) / scale, (row as f64 + 0.5) / scale);
            let d = c.dist(x);
            if d <= radius {
                grid[row * resolution + col] += (-d * d * inv_two_sigma2).exp();
                touched += 1;
            }
        }
    }
    touched
}

/// Run construction episodes with the learned hierarchy and accumulate
/// close-encounter deposits, then max-normalize.
///
/// Each episode samples one diffusion path toward the hideout nearest the
/// start and follows it with the trained agent against the full pursuit
/// team. A deposit lands at the evader position on every step where the
/// nearest dynamic pursuer is closer than `epsilon_risk` and inside the
/// evader's field of view. Deterministic in `(cfg, model, agent, params,
/// seed)`.
pub fn build_costmap(
    cfg: &WorldConfig,
    model: &DiffusionModel,
    agent: &SacAgent,
    params: &BuildParams,
    seed: u64,
) -> Result<(Costmap, BuildReport), CostmapError> {
    assert!(params.resolution >= 2 && params.sigma > 0.0 && params.epsilon_risk > 0.0);
    let cells = params.resolution * params.resolution;

    // Episodes are independent; deposits merge by summation in episode order.
    let episode_grids: Vec<Result<(Vec<f64>, usize, bool), CostmapError>> = (0..params.episodes)
        .into_par_iter()
        .map(|e| {
            let mut grid = vec![0.0; cells];
            let (deposits, goal) =
                run_construction_episode(cfg, model, agent, params, derive_seed(seed, e as u64), &mut grid)?;
            Ok((grid, deposits, goal))
        })
        .collect();

    let mut base = vec![0.0; cells];
    let mut deposits = 0;
    let mut goal_episodes = 0;
    for res in episode_grids {
        let (grid, d, goal) = res?;
        for (acc, v) in base.iter_mut().zip(&grid) {
            *acc += v;
        }
        deposits += d;
        goal_episodes += usize::from(goal);
    }

    let max = base.iter().cloned().fold(0.0, f64::max);
    if max > 0.0 {
        for v in &mut base {
            *v /= max;
        }
    }

    let map = Costmap {
        resolution: params.resolution,
        base,
        sigma: params.sigma,
        epsilon_risk: params.epsilon_risk,
        zones: Vec::new(),
    };
    let report = BuildReport {
        episodes: params.episodes,
        deposits,
        goal_episodes,
        empty: deposits == 0,
    };
    Ok((map, report))
}

fn run_construction_episode(
    cfg: &WorldConfig,
    model: &DiffusionModel,
    agent: &SacAgent,
    params: &BuildParams,
    ep_seed: u64,
    grid: &mut [f64],
) -> Result<(usize, bool), CostmapError> {
    let mut world = env_reset(cfg, ep_seed)?;
    let mut memory = PursuitMemory::new(cfg);
    let mut act_rng = rng_from_seed(derive_seed(ep_seed, 9));

    let goal = *world
        .hideouts
        .iter()
        .min_by(|a, b| {
            a.dist(world.evader_pos).total_cmp(&b.dist(world.evader_pos))
        })
        .expect("worlds always have at least one active hideout");
    let constraint =
        PathConstraint { start: world.evader_pos, goal, obstacles: cfg.obstacles.clone() };
    let sample = &model.sample_paths(&constraint, 1, derive_seed(ep_seed, 8), 3)?[0];
    let mut tracker =
        crate::rl::WaypointTracker::new(sample.path.clone(), cfg.waypoint_radius);

    let mut obs = {
        let mut v = observe(&world, cfg).to_vector();
        let w = tracker.current();
        v.push(w.x);
        v.push(w.y);
        v
    };
    let mut pending = Vec::new();
    let mut deposits = 0;

    while !world.is_terminal() {
        let u = agent.act(&obs, !params.stochastic, &mut act_rng);
        let view = TeamView { pursuers: &world.pursuers, detections: &pending, t: world.t };
        let cmds = pursuit_step(&mut memory, &view, cfg);
        let events = env_step(&mut world, cfg, action_to_command(u), &cmds)?;
        pending = detections_from_events(events.detection_count > 0, world.evader_pos, world.t);

        if events.nearest_dynamic_dist < params.epsilon_risk && events.nearest_in_fov {
            deposit(grid, params.resolution, params.sigma, world.evader_pos);
            deposits += 1;
        }

        tracker.advance(world.evader_pos);
        obs = {
            let mut v = observe(&world, cfg).to_vector();
            let w = tracker.current();
            v.push(w.x);
            v.push(w.y);
            v
        };
    }

    Ok((deposits, matches!(world.outcome, Some(crate::env::Outcome::Goal))))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat_map(v: f64) -> Costmap {
        let mut m = Costmap::zeros(16, COSTMAP_SIGMA, 0.1);
        m.base.iter_mut().for_each(|x| *x = v);
        m
    }

    #[test]
    fn constant_map_integrates_to_value_times_length() {
        let m = flat_map(1.0);
        let path = WaypointPath::from_flat(&[0.1, 0.2, 0.9, 0.2]);
        let cost = path_cost(&m, &path);
        assert!((cost - 0.8).abs() < 0.008, "cost = {cost}");
    }

    #[test]
    fn zero_map_costs_zero_and_ties_break_low() {
        let m = flat_map(0.0);
        let a = WaypointPath::from_flat(&[0.1, 0.1, 0.9, 0.9]);
        let b = WaypointPath::from_flat(&[0.1, 0.1, 0.1, 0.9]);
        assert_eq!(path_cost(&m, &a), 0.0);
        let (i, _) = select_path(&m, &[a, b]).unwrap();
        assert_eq!(i, 0);
    }

    #[test]
    fn forbidden_zone_dominates_and_all_forbidden_errors() {
        let m = flat_map(0.0);
        let zones = [Zone {
            shape: ZoneShape::Rect { min: Vec2::new(0.4, 0.0), max: Vec2::new(0.6, 1.0) },
            effect: ZoneEffect::Forbidden,
        }];
        let m = adjust(&m, &zones).unwrap();
        let crossing = WaypointPath::from_flat(&[0.1, 0.5, 0.9, 0.5]);
        assert!(path_cost(&m, &crossing).is_infinite());
        let err = select_path(&m, &[crossing]).unwrap_err();
        assert!(matches!(err, CostmapError::AllForbidden));
    }

    #[test]
    fn value_zone_paints_cells() {
        let m = flat_map(0.0);
        let zones = [Zone {
            shape: ZoneShape::Circle { center: Vec2::new(0.5, 0.5), radius: 0.2 },
            effect: ZoneEffect::Value { value: 1.0 },
        }];
        let m = adjust(&m, &zones).unwrap();
        assert_eq!(m.cell_value(8, 8), 1.0);
        assert_eq!(m.cell_value(0, 0), 0.0);
    }

    #[test]
    fn zone_outside_extent_is_rejected() {
        let m = flat_map(0.0);
        let zones = [Zone {
            shape: ZoneShape::Circle { center: Vec2::new(0.95, 0.5), radius: 0.2 },
            effect: ZoneEffect::Forbidden,
        }];
        assert!(matches!(adjust(&m, &zones), Err(CostmapError::ZoneOutsideExtent(_))));
    }

    #[test]
    fn single_deposit_normalizes_to_one_with_gaussian_profile() {
        let resolution = 128;
        let mut grid = vec![0.0; resolution * resolution];
        let x = Vec2::new(0.5, 0.5);
        deposit(&mut grid, resolution, COSTMAP_SIGMA, x);
        let max = grid.iter().cloned().fold(0.0, f64::max);
        for v in &mut grid {
            *v /= max;
        }
        let m = Costmap {
            resolution,
            base: grid,
            sigma: COSTMAP_SIGMA,
            epsilon_risk: 0.1,
            zones: Vec::new(),
        };
        // Peak cell is the deposit cell.
        let (mut best, mut best_v) = ((0, 0), -1.0);
        for row in 0..resolution {
            for col in 0..resolution {
                let v = m.base[row * resolution + col];
                if v > best_v {
                    best_v = v;
                    best = (row, col);
                }
            }
        }
        assert!(m.cell_center(best.0, best.1).dist(x) < 1.0 / resolution as f64);
        assert_eq!(best_v, 1.0);
        // Value one sigma away ~ exp(-1/2), within grid discretization.
        let probe = Vec2::new(0.5 + COSTMAP_SIGMA, 0.5);
        let v = m.sample(probe);
        assert!((v - (-0.5f64).exp()).abs() < 0.1, "v = {v}");
        // Locality: nothing beyond the truncation radius.
        let far = m.mass_fraction_near(&[x], DEPOSIT_TRUNCATION * COSTMAP_SIGMA + 0.02);
        assert!(far > 0.99);
    }
}

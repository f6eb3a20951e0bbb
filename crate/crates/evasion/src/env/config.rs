use serde::{Deserialize, Serialize};
use std::path::Path;

use super::world::PursuerKind;
use super::EnvError;
use crate::geom::{Circle, Rect, Vec2};

/// Clearance margin used when projecting points out of obstacles; configs are
/// validated so that the inflated circles still fit inside the map.
pub const OBSTACLE_PROJECTION_MARGIN: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ViewMode {
    Global,
    Local,
}

/// Display names for the three agent types, so domain variants (e.g. the
/// maritime interdiction preset) can rename agents without touching mechanics.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AgentLabels {
    pub camera: String,
    pub search_party: String,
    pub helicopter: String,
}

impl Default for AgentLabels {
    fn default() -> Self {
        AgentLabels {
            camera: "camera".into(),
            search_party: "search-party".into(),
            helicopter: "helicopter".into(),
        }
    }
}

/// Parameters of the linear detection model
/// `range = alpha * (beta_kind * c_v * speed + eta)`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct DetectionParams {
    pub alpha: f64,
    pub eta: f64,
    pub beta_camera: f64,
    pub beta_search_party: f64,
    pub beta_helicopter: f64,
}

impl DetectionParams {
    pub fn beta_for(&self, kind: PursuerKind) -> f64 {
        match kind {
            PursuerKind::Camera => self.beta_camera,
            PursuerKind::SearchParty => self.beta_search_party,
            PursuerKind::Helicopter => self.beta_helicopter,
        }
    }
}

/// One smooth dip in the visibility field (e.g. a forest patch).
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct VisibilityBump {
    pub center: Vec2,
    pub amplitude: f64,
    pub sigma: f64,
}

/// Smooth visibility field `c_v(p) = clamp(1 - sum of Gaussian dips, floor, 1)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VisibilityField {
    pub bumps: Vec<VisibilityBump>,
    #[serde(default = "default_visibility_floor")]
    pub floor: f64,
}

fn default_visibility_floor() -> f64 {
    0.3
}

impl VisibilityField {
    pub fn value(&self, p: Vec2) -> f64 {
        let mut dip = 0.0;
        for b in &self.bumps {
            let d2 = (p - b.center).norm2();
            dip += b.amplitude * (-d2 / (2.0 * b.sigma * b.sigma)).exp();
        }
        (1.0 - dip).clamp(self.floor, 1.0)
    }

    /// Position of minimum visibility among `candidates`.
    pub fn lowest_among(&self, candidates: &[Vec2]) -> Vec2 {
        let mut best = candidates[0];
        let mut best_v = self.value(best);
        for &c in &candidates[1..] {
            let v = self.value(c);
            if v < best_v {
                best_v = v;
                best = c;
            }
        }
        best
    }
}

/// Constants of the per-step reward
/// `r = r_g * [waypoint reached] - k_d * dist(evader, waypoint) - p_adv * detections`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct RewardConstants {
    pub r_g: f64,
    pub k_d: f64,
    pub p_adv: f64,
}

impl Default for RewardConstants {
    fn default() -> Self {
        RewardConstants { r_g: 5.0, k_d: 0.1, p_adv: 1.0 }
    }
}

/// Full description of a world: terrain, agents, detection model, episode
/// rules. Loaded from JSON; two presets ship under `configs/`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WorldConfig {
    pub name: String,
    #[serde(default)]
    pub labels: AgentLabels,
    pub obstacles: Vec<Circle>,
    pub cameras: Vec<Vec2>,
    pub hideout_candidates: Vec<Vec2>,
    #[serde(default = "default_hideouts_per_episode")]
    pub hideouts_per_episode: usize,
    /// Evader max speed in map units per step.
    pub evader_speed: f64,
    pub search_party_speed: f64,
    pub helicopter_speed: f64,
    pub n_search_parties: usize,
    pub n_helicopters: usize,
    pub detection: DetectionParams,
    pub visibility: VisibilityField,
    #[serde(default = "default_t_max")]
    pub t_max: u32,
    #[serde(default = "default_view")]
    pub view: ViewMode,
    #[serde(default = "default_capture_radius")]
    pub capture_radius: f64,
    #[serde(default = "default_waypoint_radius")]
    pub waypoint_radius: f64,
    /// The evader's start region (a small square in one map corner).
    pub corner_start: Rect,
    #[serde(default)]
    pub reward: RewardConstants,
    #[serde(default = "default_patrol_waypoints")]
    pub patrol_waypoints: Vec<Vec2>,
    /// Fixed number of obstacle slots in observations and conditioning
    /// vectors (zero-padded).
    #[serde(default = "default_obstacle_slots")]
    pub obstacle_slots: usize,
}

fn default_hideouts_per_episode() -> usize {
    3
}
fn default_t_max() -> u32 {
    500
}
fn default_view() -> ViewMode {
    ViewMode::Global
}
fn default_capture_radius() -> f64 {
    0.03
}
fn default_waypoint_radius() -> f64 {
    0.04
}
fn default_obstacle_slots() -> usize {
    8
}

/// Default patrol loop: a rectangle through the four quadrant centers.
fn default_patrol_waypoints() -> Vec<Vec2> {
    vec![
        Vec2::new(0.25, 0.25),
        Vec2::new(0.75, 0.25),
        Vec2::new(0.75, 0.75),
        Vec2::new(0.25, 0.75),
    ]
}

impl WorldConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<WorldConfig, EnvError> {
        let text = std::fs::read_to_string(path)?;
        let cfg: WorldConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn n_dynamic(&self) -> usize {
        self.n_search_parties + self.n_helicopters
    }

    /// Length of the observation vector produced by `observe`.
    pub fn obs_dim(&self) -> usize {
        1 + 2 * self.hideouts_per_episode + 3 * self.obstacle_slots + 3 + 5 * self.n_dynamic()
    }

    pub fn speed_for(&self, kind: PursuerKind) -> f64 {
        match kind {
            PursuerKind::Camera => 0.0,
            PursuerKind::SearchParty => self.search_party_speed,
            PursuerKind::Helicopter => self.helicopter_speed,
        }
    }

    pub fn label_for(&self, kind: PursuerKind) -> &str {
        match kind {
            PursuerKind::Camera => &self.labels.camera,
            PursuerKind::SearchParty => &self.labels.search_party,
            PursuerKind::Helicopter => &self.labels.helicopter,
        }
    }

    /// Flattened obstacle conditioning digest `[cx, cy, r] * obstacle_slots`,
    /// zero-padded past the real obstacles.
    pub fn obstacle_digest(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(3 * self.obstacle_slots);
        for slot in 0..self.obstacle_slots {
            if let Some(c) = self.obstacles.get(slot) {
                out.extend_from_slice(&[c.center.x, c.center.y, c.radius]);
            } else {
                out.extend_from_slice(&[0.0, 0.0, 0.0]);
            }
        }
        out
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        let fail = |msg: String| Err(EnvError::InvalidConfig(msg));
        let in_map = |p: Vec2| (0.0..=1.0).contains(&p.x) && (0.0..=1.0).contains(&p.y);

        if self.hideouts_per_episode == 0
            || self.hideouts_per_episode > self.hideout_candidates.len()
        {
            return fail(format!(
                "hideouts_per_episode {} must be in 1..={}",
                self.hideouts_per_episode,
                self.hideout_candidates.len()
            ));
        }
        if self.evader_speed <= 0.0 {
            return fail("evader_speed must be positive".into());
        }
        for (label, speed) in [
            ("search_party_speed", self.search_party_speed),
            ("helicopter_speed", self.helicopter_speed),
        ] {
            if speed <= self.evader_speed {
                return fail(format!(
                    "{label} ({speed}) must strictly exceed evader_speed ({})",
                    self.evader_speed
                ));
            }
        }
        if self.t_max == 0 {
            return fail("t_max must be at least 1".into());
        }
        if self.capture_radius <= 0.0 || self.waypoint_radius <= 0.0 {
            return fail("capture and waypoint radii must be positive".into());
        }
        if self.detection.alpha <= 0.0 || self.detection.eta < 0.0 {
            return fail("detection alpha must be positive and eta non-negative".into());
        }
        for (label, beta) in [
            ("beta_camera", self.detection.beta_camera),
            ("beta_search_party", self.detection.beta_search_party),
            ("beta_helicopter", self.detection.beta_helicopter),
        ] {
            if beta <= 0.0 {
                return fail(format!("{label} must be positive"));
            }
        }
        if !(0.0 < self.visibility.floor && self.visibility.floor <= 1.0) {
            return fail("visibility floor must lie in (0, 1]".into());
        }
        if self.obstacle_slots < self.obstacles.len() {
            return fail(format!(
                "obstacle_slots {} smaller than obstacle count {}",
                self.obstacle_slots,
                self.obstacles.len()
            ));
        }
        for (i, c) in self.obstacles.iter().enumerate() {
            if c.radius <= 0.0 {
                return fail(format!("obstacle {i} has non-positive radius"));
            }
            // The inflated circle (projection margin) must stay inside the map
            // so constraint projection never interacts with the map boundary.
            let rr = c.radius * (1.0 + OBSTACLE_PROJECTION_MARGIN) + 1e-6;
            if c.center.x - rr < 0.0
                || c.center.x + rr > 1.0
                || c.center.y - rr < 0.0
                || c.center.y + rr > 1.0
            {
                return fail(format!("obstacle {i} (inflated by the projection margin) leaves the map"));
            }
        }
        for (i, a) in self.obstacles.iter().enumerate() {
            for (j, b) in self.obstacles.iter().enumerate().skip(i + 1) {
                let need = (a.radius + b.radius) * (1.0 + OBSTACLE_PROJECTION_MARGIN);
                if a.center.dist(b.center) < need {
                    return fail(format!("obstacles {i} and {j} overlap within the projection margin"));
                }
            }
        }
        for (what, pts) in [
            ("camera", &self.cameras),
            ("hideout candidate", &self.hideout_candidates),
            ("patrol waypoint", &self.patrol_waypoints),
        ] {
            for (i, &p) in pts.iter().enumerate() {
                if !in_map(p) {
                    return fail(format!("{what} {i} lies outside the unit square"));
                }
            }
        }
        for (i, &h) in self.hideout_candidates.iter().enumerate() {
            if self.obstacles.iter().any(|c| c.contains(h)) {
                return fail(format!("hideout candidate {i} is inside an obstacle"));
            }
        }
        if !in_map(self.corner_start.min)
            || !in_map(self.corner_start.max)
            || self.corner_start.min.x >= self.corner_start.max.x
            || self.corner_start.min.y >= self.corner_start.max.y
        {
            return fail("corner_start must be a non-empty rectangle inside the map".into());
        }
        if self.patrol_waypoints.len() < 2 {
            return fail("need at least 2 patrol waypoints".into());
        }
        if self.n_dynamic() == 0 {
            return fail("need at least one dynamic pursuer".into());
        }
        Ok(())
    }
}

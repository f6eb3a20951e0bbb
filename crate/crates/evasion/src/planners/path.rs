use serde::{Deserialize, Serialize};

use crate::geom::{polyline_length, Vec2};

/// A dense, ordered polyline in map coordinates (e.g. a raw planner output).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensePath {
    pub points: Vec<Vec2>,
}

impl DensePath {
    pub fn new(points: Vec<Vec2>) -> Self {
        assert!(!points.is_empty(), "DensePath needs at least one point");
        DensePath { points }
    }

    pub fn length(&self) -> f64 {
        polyline_length(&self.points)
    }

    pub fn start(&self) -> Vec2 {
        self.points[0]
    }

    pub fn goal(&self) -> Vec2 {
        *self.points.last().expect("non-empty")
    }
}

/// A fixed-length waypoint sequence (the diffusion variable). The first point
/// is the start and the last is the goal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaypointPath {
    pub points: Vec<Vec2>,
}

impl WaypointPath {
    pub fn new(points: Vec<Vec2>) -> Self {
        assert!(points.len() >= 2, "WaypointPath needs at least 2 points");
        WaypointPath { points }
    }

    pub fn n_w(&self) -> usize {
        self.points.len()
    }

    pub fn start(&self) -> Vec2 {
        self.points[0]
    }

    pub fn goal(&self) -> Vec2 {
        *self.points.last().expect("non-empty")
    }

    /// Flatten to `[x0, y0, x1, y1, ...]`.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * self.points.len());
        for p in &self.points {
            out.extend_from_slice(&[p.x, p.y]);
        }
        out
    }

    pub fn from_flat(flat: &[f64]) -> Self {
        assert!(flat.len() % 2 == 0 && flat.len() >= 4, "flat waypoint buffer malformed");
        WaypointPath::new(flat.chunks_exact(2).map(|c| Vec2::new(c[0], c[1])).collect())
    }
}

/// Resample a dense path at uniform arc-length fractions `0, 1/(N_w-1), ..., 1`.
/// Endpoints are preserved exactly; a zero-length path repeats its point.
pub fn downsample(path: &DensePath, n_w: usize) -> WaypointPath {
    assert!(n_w >= 2, "downsample requires at least 2 waypoints");
    let pts = &path.points;
    let total = path.length();
    if pts.len() == 1 || total < 1e-15 {
        return WaypointPath { points: vec![pts[0]; n_w] };
    }

    // Cumulative arc length per vertex.
    let mut cum = Vec::with_capacity(pts.len());
    cum.push(0.0);
    for w in pts.windows(2) {
        cum.push(cum.last().unwrap() + w[0].dist(w[1]));
    }

    let mut out = Vec::with_capacity(n_w);
    out.push(pts[0]);
    let mut seg = 0usize;
    for k in 1..n_w - 1 {
        let target = total * k as f64 / (n_w - 1) as f64;
        while seg + 1 < cum.len() - 1 && cum[seg + 1] < target {
            seg += 1;
        }
        let seg_len = cum[seg + 1] - cum[seg];
        let t = if seg_len < 1e-15 { 0.0 } else { (target - cum[seg]) / seg_len };
        out.push(pts[seg].lerp(pts[seg + 1], t));
    }
    out.push(*pts.last().unwrap());
    WaypointPath { points: out }
}

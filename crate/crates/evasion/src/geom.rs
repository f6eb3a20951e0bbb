//! Planar geometry primitives shared across the workspace: points, circles,
//! segment/circle queries, and the unit-square map extent.

use serde::{Deserialize, Serialize};
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

/// A 2-D point or vector in map coordinates. Serialized compactly as `[x, y]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn dot(self, rhs: Vec2) -> f64 {
        self.x * rhs.x + self.y * rhs.y
    }

    pub fn norm2(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm2().sqrt()
    }

    pub fn dist(self, rhs: Vec2) -> f64 {
        (self - rhs).norm()
    }

    /// Unit vector in the same direction, or `Vec2::ZERO` for (near-)zero input.
    pub fn normalized(self) -> Vec2 {
        let n = self.norm();
        if n < 1e-12 {
            Vec2::ZERO
        } else {
            self * (1.0 / n)
        }
    }

    pub fn lerp(self, rhs: Vec2, t: f64) -> Vec2 {
        self + (rhs - self) * t
    }

    pub fn from_polar(heading: f64, speed: f64) -> Vec2 {
        Vec2::new(heading.cos() * speed, heading.sin() * speed)
    }

    /// Clamp both coordinates into the unit-square map extent.
    pub fn clamp_unit(self) -> Vec2 {
        Vec2::new(self.x.clamp(0.0, 1.0), self.y.clamp(0.0, 1.0))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl From<[f64; 2]> for Vec2 {
    fn from(a: [f64; 2]) -> Self {
        Vec2::new(a[0], a[1])
    }
}

impl From<Vec2> for [f64; 2] {
    fn from(v: Vec2) -> Self {
        [v.x, v.y]
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, rhs: Vec2) {
        self.x += rhs.x;
        self.y += rhs.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, rhs: f64) -> Vec2 {
        Vec2::new(self.x * rhs, self.y * rhs)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// A circular obstacle ("mountain") or zone footprint.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Circle {
    pub center: Vec2,
    pub radius: f64,
}

impl Circle {
    pub fn new(center: Vec2, radius: f64) -> Self {
        Circle { center, radius }
    }

    /// Strict interior test (boundary counts as outside).
    pub fn contains(&self, p: Vec2) -> bool {
        p.dist(self.center) < self.radius
    }
}

/// Axis-aligned rectangle, used for zones and patrol regions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: Vec2,
    pub max: Vec2,
}

impl Rect {
    pub fn new(min: Vec2, max: Vec2) -> Self {
        Rect { min, max }
    }

    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn center(&self) -> Vec2 {
        (self.min + self.max) * 0.5
    }
}

/// Distance from point `p` to the closed segment `a..b`.
pub fn point_segment_dist(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let len2 = ab.norm2();
    if len2 < 1e-24 {
        return p.dist(a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.dist(a + ab * t)
}

/// Whether the closed segment `a..b` passes through the interior of `c`.
pub fn segment_intersects_circle(a: Vec2, b: Vec2, c: &Circle) -> bool {
    point_segment_dist(c.center, a, b) < c.radius
}

/// Whether a polyline stays clear of every circle in `obstacles`.
pub fn polyline_is_clear(points: &[Vec2], obstacles: &[Circle]) -> bool {
    if points.len() == 1 {
        return obstacles.iter().all(|c| !c.contains(points[0]));
    }
    points
        .windows(2)
        .all(|w| obstacles.iter().all(|c| !segment_intersects_circle(w[0], w[1], c)))
}

/// Total arc length of a polyline.
pub fn polyline_length(points: &[Vec2]) -> f64 {
    points.windows(2).map(|w| w[0].dist(w[1])).sum()
}

/// First time `t >= 0` at which the moving point `p + v t` enters the disc
/// `(center, radius)`, or `None` if it never does. Returns `Some(0.0)` when
/// the point starts inside.
pub fn ray_disc_entry_time(p: Vec2, v: Vec2, center: Vec2, radius: f64) -> Option<f64> {
    let d = p - center;
    if d.norm() <= radius {
        return Some(0.0);
    }
    let a = v.norm2();
    if a < 1e-24 {
        return None;
    }
    let b = 2.0 * d.dot(v);
    let c = d.norm2() - radius * radius;
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return None;
    }
    let t = (-b - disc.sqrt()) / (2.0 * a);
    if t >= 0.0 {
        Some(t)
    } else {
        None
    }
}

use crate::costmap::Costmap;
use crate::env::{PursuerKind, WorldConfig};
use crate::geom::Vec2;
use crate::planners::WaypointPath;

use super::episode::EpisodeLog;

/// Raster dimensions. Rendering is pure integer/fixed-expression math, so
/// output bytes are identical across runs and machines for equal inputs.
#[derive(Clone, Copy, Debug)]
pub struct RenderStyle {
    pub width: usize,
    pub height: usize,
}

impl Default for RenderStyle {
    fn default() -> Self {
        RenderStyle { width: 512, height: 512 }
    }
}

/// What to draw: a world, plus any of a costmap base layer, an episode log,
/// and candidate global paths.
#[derive(Clone, Copy)]
pub struct RenderScene<'a> {
    pub cfg: &'a WorldConfig,
    pub costmap: Option<&'a Costmap>,
    pub log: Option<&'a EpisodeLog>,
    pub paths: &'a [WaypointPath],
}

const OBSTACLE: [u8; 3] = [70, 70, 82];
const HIDEOUT: [u8; 3] = [46, 160, 67];
const CANDIDATE: [u8; 3] = [148, 87, 235];
const PLANNED: [u8; 3] = [64, 180, 170];
const TRAIL: [u8; 3] = [31, 119, 240];
const TRAIL_DETECTED: [u8; 3] = [250, 140, 40];
const START: [u8; 3] = [240, 180, 40];
const CAMERA: [u8; 3] = [210, 60, 60];
const PURSUER: [u8; 3] = [200, 90, 60];
const FORBIDDEN: [u8; 3] = [170, 40, 40];

struct Canvas {
    w: usize,
    h: usize,
    px: Vec<u8>,
}

impl Canvas {
    fn new(w: usize, h: usize) -> Self {
        Canvas { w, h, px: vec![0; 3 * w * h] }
    }

    fn put(&mut self, x: i64, y: i64, c: [u8; 3]) {
        if x >= 0 && y >= 0 && (x as usize) < self.w && (y as usize) < self.h {
            let i = 3 * (y as usize * self.w + x as usize);
            self.px[i..i + 3].copy_from_slice(&c);
        }
    }

    fn to_map(&self, p: Vec2) -> (i64, i64) {
        let x = (p.x * (self.w as f64 - 1.0)).round() as i64;
        let y = (self.h as f64 - 1.0 - p.y * (self.h as f64 - 1.0)).round() as i64;
        (x, y)
    }

    fn line(&mut self, a: Vec2, b: Vec2, c: [u8; 3]) {
        let (x0, y0) = self.to_map(a);
        let (x1, y1) = self.to_map(b);
        let (dx, dy) = ((x1 - x0).abs(), -(y1 - y0).abs());
        let (sx, sy) = (if x0 < x1 { 1 } else { -1 }, if y0 < y1 { 1 } else { -1 });
        let (mut x, mut y, mut err) = (x0, y0, dx + dy);
        loop {
            self.put(x, y, c);
            if x == x1 && y == y1 {
                break;
            }
            let e2 = 2 * err;
            if e2 >= dy {
                err += dy;
                x += sx;
            }
            if e2 <= dx {
                err += dx;
                y += sy;
            }
        }
    }

    fn fill_circle(&mut self, center: Vec2, r_px: i64, c: [u8; 3]) {
        let (cx, cy) = self.to_map(center);
        for dy in -r_px..=r_px {
            for dx in -r_px..=r_px {
                if dx * dx + dy * dy <= r_px * r_px {
                    self.put(cx + dx, cy + dy, c);
                }
            }
        }
    }

    fn fill_square(&mut self, center: Vec2, half: i64, c: [u8; 3]) {
        let (cx, cy) = self.to_map(center);
        for dy in -half..=half {
            for dx in -half..=half {
                self.put(cx + dx, cy + dy, c);
            }
        }
    }

    fn fill_diamond(&mut self, center: Vec2, r_px: i64, c: [u8; 3]) {
        let (cx, cy) = self.to_map(center);
        for dy in -r_px..=r_px {
            for dx in -r_px..=r_px {
                if dx.abs() + dy.abs() <= r_px {
                    self.put(cx + dx, cy + dy, c);
                }
            }
        }
    }
}

fn background(canvas: &mut Canvas, scene: &RenderScene<'_>) {
    let (w, h) = (canvas.w, canvas.h);
    for row in 0..h {
        for col in 0..w {
            // Map point at this pixel's center (y axis flipped).
            let p = Vec2::new(
                col as f64 / (w as f64 - 1.0),
                1.0 - row as f64 / (h as f64 - 1.0),
            );
            let c = match scene.costmap {
                Some(m) => {
                    let r = m.resolution;
                    let cell_row = ((p.y * r as f64) as usize).min(r - 1);
                    let cell_col = ((p.x * r as f64) as usize).min(r - 1);
                    let v = m.cell_value(cell_row, cell_col);
                    if v.is_infinite() {
                        FORBIDDEN
                    } else {
                        let g = (v.clamp(0.0, 1.0) * 255.0) as u8;
                        [g, g, g]
                    }
                }
                None => {
                    // Terrain shading from the visibility field: open ground
                    // bright, dips dark, with a slight green cast.
                    let v = scene.cfg.visibility.value(p);
                    let s = 40.0 + 190.0 * v;
                    [(s * 0.93) as u8, s as u8, (s * 0.88) as u8]
                }
            };
            let i = 3 * (row * w + col);
            canvas.px[i..i + 3].copy_from_slice(&c);
        }
    }
}

/// Render the scene to a binary PPM (P6) image.
pub fn render_ppm(scene: &RenderScene<'_>, style: &RenderStyle) -> Vec<u8> {
    assert!(style.width >= 16 && style.height >= 16, "render target too small");
    let mut canvas = Canvas::new(style.width, style.height);
    background(&mut canvas, scene);

    let px_per_unit = style.width as f64;
    for o in &scene.cfg.obstacles {
        canvas.fill_circle(o.center, (o.radius * px_per_unit).round() as i64, OBSTACLE);
    }

    let hideouts: &[Vec2] = match scene.log {
        Some(log) => &log.hideouts,
        None => &scene.cfg.hideout_candidates,
    };
    let hideout_r = ((scene.cfg.capture_radius * px_per_unit).round() as i64).max(3);
    for &hh in hideouts {
        canvas.fill_circle(hh, hideout_r, HIDEOUT);
    }

    for path in scene.paths {
        for seg in path.points.windows(2) {
            canvas.line(seg[0], seg[1], CANDIDATE);
        }
        for &p in &path.points {
            canvas.fill_circle(p, 2, CANDIDATE);
        }
    }

    if let Some(log) = scene.log {
        if let Some(path) = &log.planned_path {
            for seg in path.points.windows(2) {
                canvas.line(seg[0], seg[1], PLANNED);
            }
            for &p in &path.points {
                canvas.fill_circle(p, 2, PLANNED);
            }
        }

        // Pursuer trails (dynamic agents) and camera markers.
        for (i, kind) in log.pursuer_kinds.iter().enumerate() {
            match kind {
                PursuerKind::Camera => {
                    if let Some(first) = log.steps.first() {
                        canvas.fill_diamond(first.pursuers[i], 5, CAMERA);
                    }
                }
                _ => {
                    for step in &log.steps {
                        let (x, y) = canvas.to_map(step.pursuers[i]);
                        canvas.put(x, y, PURSUER);
                    }
                    if let Some(last) = log.steps.last() {
                        canvas.fill_circle(last.pursuers[i], 3, PURSUER);
                    }
                }
            }
        }

        // Evader trail, orange where detected.
        let mut prev = log.start;
        for step in &log.steps {
            let color = if step.detections > 0 { TRAIL_DETECTED } else { TRAIL };
            canvas.line(prev, step.evader, color);
            prev = step.evader;
        }
        canvas.fill_square(log.start, 3, START);
    }

    let mut out = format!("P6\n{} {}\n255\n", style.width, style.height).into_bytes();
    out.extend_from_slice(&canvas.px);
    out
}

fn hex(c: [u8; 3]) -> String {
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

/// Render a vector overlay of the scene (no costmap raster layer; pair with
/// the PPM render when the grid matters).
pub fn render_svg(scene: &RenderScene<'_>, style: &RenderStyle) -> String {
    let (w, h) = (style.width as f64, style.height as f64);
    let px = |p: Vec2| (p.x * w, (1.0 - p.y) * h);
    let mut s = String::new();
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" \
         viewBox=\"0 0 {} {}\">\n",
        style.width, style.height, style.width, style.height
    ));
    s.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"#f5f5f2\"/>\n",
        style.width, style.height
    ));

    for o in &scene.cfg.obstacles {
        let (cx, cy) = px(o.center);
        s.push_str(&format!(
            "<circle cx=\"{cx:.2}\" cy=\"{cy:.2}\" r=\"{:.2}\" fill=\"{}\"/>\n",
            o.radius * w,
            hex(OBSTACLE)
        ));
    }

    let hideouts: &[Vec2] = match scene.log {
        Some(log) => &log.hideouts,
        None => &scene.cfg.hideout_candidates,
    };
    for &hh in hideouts {
        let (cx, cy) = px(hh);
        s.push_str(&format!(
            "<circle cx=\"{cx:.2}\" cy=\"{cy:.2}\" r=\"{:.2}\" fill=\"{}\"/>\n",
            (scene.cfg.capture_radius * w).max(3.0),
            hex(HIDEOUT)
        ));
    }

    let polyline = |points: &[Vec2], color: [u8; 3], dash: bool| -> String {
        let mut attr = String::new();
        for &p in points {
            let (x, y) = px(p);
            attr.push_str(&format!("{x:.2},{y:.2} "));
        }
        format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"{}/>\n",
            attr.trim_end(),
            hex(color),
            if dash { " stroke-dasharray=\"4 3\"" } else { "" }
        )
    };

    for path in scene.paths {
        s.push_str(&polyline(&path.points, CANDIDATE, false));
    }

    if let Some(log) = scene.log {
        if let Some(path) = &log.planned_path {
            s.push_str(&polyline(&path.points, PLANNED, true));
        }
        for (i, kind) in log.pursuer_kinds.iter().enumerate() {
            if *kind == PursuerKind::Camera {
                if let Some(first) = log.steps.first() {
                    let (cx, cy) = px(first.pursuers[i]);
                    s.push_str(&format!(
                        "<path d=\"M {cx:.2} {:.2} L {:.2} {cy:.2} L {cx:.2} {:.2} \
                         L {:.2} {cy:.2} Z\" fill=\"{}\"/>\n",
                        cy - 6.0,
                        cx + 6.0,
                        cy + 6.0,
                        cx - 6.0,
                        hex(CAMERA)
                    ));
                }
            } else {
                let trail: Vec<Vec2> = log.steps.iter().map(|st| st.pursuers[i]).collect();
                s.push_str(&polyline(&trail, PURSUER, false));
            }
        }

        let mut trail = Vec::with_capacity(log.steps.len() + 1);
        trail.push(log.start);
        trail.extend(log.steps.iter().map(|st| st.evader));
        s.push_str(&polyline(&trail, TRAIL, false));
        let (sx, sy) = px(log.start);
        s.push_str(&format!(
            "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"8\" height=\"8\" fill=\"{}\"/>\n",
            sx - 4.0,
            sy - 4.0,
            hex(START)
        ));
    }

    s.push_str("</svg>\n");
    s
}

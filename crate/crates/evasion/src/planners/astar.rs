use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::path::DensePath;
use super::PlanError;
use crate::geom::{Circle, Vec2};

/// Default grid resolution for rasterized planning.
pub const ASTAR_GRID_N: usize = 64;

/// A square occupancy grid over the unit map. Cell `(ix, iy)` covers
/// `[ix/n, (ix+1)/n] x [iy/n, (iy+1)/n]`.
#[derive(Clone, Debug)]
pub struct GridMap {
    pub n: usize,
    blocked: Vec<bool>,
}

impl GridMap {
    pub fn new(n: usize, blocked: Vec<bool>) -> Self {
        assert_eq!(blocked.len(), n * n, "GridMap: blocked mask size mismatch");
        GridMap { n, blocked }
    }

    #[inline]
    pub fn is_blocked(&self, ix: usize, iy: usize) -> bool {
        self.blocked[iy * self.n + ix]
    }

    pub fn cell_center(&self, ix: usize, iy: usize) -> Vec2 {
        let n = self.n as f64;
        Vec2::new((ix as f64 + 0.5) / n, (iy as f64 + 0.5) / n)
    }

    pub fn cell_of(&self, p: Vec2) -> (usize, usize) {
        let n = self.n as f64;
        let ix = ((p.x * n) as usize).min(self.n - 1);
        let iy = ((p.y * n) as usize).min(self.n - 1);
        (ix, iy)
    }
}

/// Conservative rasterization: a cell is blocked when any obstacle circle
/// overlaps the cell rectangle at all.
pub fn rasterize(obstacles: &[Circle], n: usize) -> GridMap {
    let mut blocked = vec![false; n * n];
    let cell = 1.0 / n as f64;
    for iy in 0..n {
        for ix in 0..n {
            let (x0, y0) = (ix as f64 * cell, iy as f64 * cell);
            let (x1, y1) = (x0 + cell, y0 + cell);
            for c in obstacles {
                // Distance from the circle center to the cell rectangle.
                let dx = (x0 - c.center.x).max(0.0).max(c.center.x - x1);
                let dy = (y0 - c.center.y).max(0.0).max(c.center.y - y1);
                if (dx * dx + dy * dy).sqrt() <= c.radius {
                    blocked[iy * n + ix] = true;
                    break;
                }
            }
        }
    }
    GridMap { n, blocked }
}

/// An 8-connected grid path with its exact cost decomposition: `straight`
/// axis-aligned moves (cost 1 each) and `diag` diagonal moves (cost sqrt(2)).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridPath {
    pub cells: Vec<(usize, usize)>,
    pub straight: u32,
    pub diag: u32,
}

impl GridPath {
    /// Total cost `straight + diag * sqrt(2)`, evaluated in one fixed
    /// expression so equal move-count decompositions give bit-equal values.
    pub fn cost(&self) -> f64 {
        f64::from(self.straight) + f64::from(self.diag) * std::f64::consts::SQRT_2
    }
}

#[derive(Clone, Copy, PartialEq)]
struct HeapEntry {
    f: f64,
    cell: u32,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on (f, cell); cell index breaks ties deterministically.
        other
            .f
            .partial_cmp(&self.f)
            .expect("A*: non-finite priority")
            .then_with(|| other.cell.cmp(&self.cell))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

const SQRT_2: f64 = std::f64::consts::SQRT_2;

fn octile(a: (usize, usize), b: (usize, usize)) -> f64 {
    let dx = a.0.abs_diff(b.0) as f64;
    let dy = a.1.abs_diff(b.1) as f64;
    let (hi, lo) = if dx > dy { (dx, dy) } else { (dy, dx) };
    (hi - lo) + lo * SQRT_2
}

/// Cost-optimal 8-connected A* (diagonal cost sqrt(2), corner cutting
/// forbidden). Move counts are tracked as integers so costs are exact.
pub fn astar(
    grid: &GridMap,
    start: (usize, usize),
    goal: (usize, usize),
) -> Result<GridPath, PlanError> {
    let n = grid.n;
    let index = |c: (usize, usize)| c.1 * n + c.0;
    if start.0 >= n || start.1 >= n || goal.0 >= n || goal.1 >= n {
        return Err(PlanError::InvalidQuery("start or goal outside the grid".into()));
    }
    if grid.is_blocked(start.0, start.1) || grid.is_blocked(goal.0, goal.1) {
        return Err(PlanError::InvalidQuery("start or goal cell is blocked".into()));
    }
    if start == goal {
        return Ok(GridPath { cells: vec![start], straight: 0, diag: 0 });
    }

    // g achieved per cell, as (straight, diag) move counts.
    let mut best_g: Vec<Option<(u32, u32)>> = vec![None; n * n];
    let mut parent: Vec<u32> = vec![u32::MAX; n * n];
    let mut heap = BinaryHeap::new();
    best_g[index(start)] = Some((0, 0));
    heap.push(HeapEntry { f: octile(start, goal), cell: index(start) as u32 });

    let g_value = |(s, d): (u32, u32)| f64::from(s) + f64::from(d) * SQRT_2;

    while let Some(HeapEntry { cell, .. }) = heap.pop() {
        let cell = cell as usize;
        let cur = (cell % n, cell / n);
        let g_cur = best_g[cell].expect("popped cell must have g");
        if cur == goal {
            let mut cells = vec![cur];
            let mut c = cell;
            while parent[c] != u32::MAX {
                c = parent[c] as usize;
                cells.push((c % n, c / n));
            }
            cells.reverse();
            return Ok(GridPath { cells, straight: g_cur.0, diag: g_cur.1 });
        }

        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                if dx == 0 && dy == 0 {
                    continue;
                }
                let nx = cur.0 as i64 + dx;
                let ny = cur.1 as i64 + dy;
                if nx < 0 || ny < 0 || nx >= n as i64 || ny >= n as i64 {
                    continue;
                }
                let next = (nx as usize, ny as usize);
                if grid.is_blocked(next.0, next.1) {
                    continue;
                }
                let diagonal = dx != 0 && dy != 0;
                if diagonal {
                    // No corner cutting: both orthogonal neighbors must be free.
                    if grid.is_blocked(next.0, cur.1) || grid.is_blocked(cur.0, next.1) {
                        continue;
                    }
                }
                let g_next =
                    if diagonal { (g_cur.0, g_cur.1 + 1) } else { (g_cur.0 + 1, g_cur.1) };
                let ni = index(next);
                let improved = match best_g[ni] {
                    None => true,
                    Some(old) => g_value(g_next) < g_value(old),
                };
                if improved {
                    best_g[ni] = Some(g_next);
                    parent[ni] = cell as u32;
                    heap.push(HeapEntry {
                        f: g_value(g_next) + octile(next, goal),
                        cell: ni as u32,
                    });
                }
            }
        }
    }
    Err(PlanError::NoPath)
}

/// Find the free cell nearest to `cell` (the cell itself when free), searching
/// outward ring by ring. Conservative rasterization can block the cell of a
/// point that is itself in free space; this recovers a usable query cell.
fn nearest_free_cell(grid: &GridMap, cell: (usize, usize)) -> Option<(usize, usize)> {
    if !grid.is_blocked(cell.0, cell.1) {
        return Some(cell);
    }
    let n = grid.n as i64;
    for ring in 1..=4i64 {
        let mut best: Option<((usize, usize), f64)> = None;
        for dy in -ring..=ring {
            for dx in -ring..=ring {
                if dx.abs() != ring && dy.abs() != ring {
                    continue;
                }
                let (x, y) = (cell.0 as i64 + dx, cell.1 as i64 + dy);
                if x < 0 || y < 0 || x >= n || y >= n {
                    continue;
                }
                let cand = (x as usize, y as usize);
                if grid.is_blocked(cand.0, cand.1) {
                    continue;
                }
                let d = ((dx * dx + dy * dy) as f64).sqrt();
                if best.map_or(true, |(_, bd)| d < bd) {
                    best = Some((cand, d));
                }
            }
        }
        if let Some((c, _)) = best {
            return Some(c);
        }
    }
    None
}

/// Plan in map coordinates: rasterize, snap the endpoints to free cells, run
/// A*, and return `[start, cell centers..., goal]`.
pub fn astar_path(
    obstacles: &[Circle],
    start: Vec2,
    goal: Vec2,
    n: usize,
) -> Result<DensePath, PlanError> {
    if obstacles.iter().any(|c| c.contains(start) || c.contains(goal)) {
        return Err(PlanError::InvalidQuery("start or goal inside an obstacle".into()));
    }
    let grid = rasterize(obstacles, n);
    let sc = nearest_free_cell(&grid, grid.cell_of(start))
        .ok_or_else(|| PlanError::InvalidQuery("no free cell near start".into()))?;
    let gc = nearest_free_cell(&grid, grid.cell_of(goal))
        .ok_or_else(|| PlanError::InvalidQuery("no free cell near goal".into()))?;
    let gp = astar(&grid, sc, gc)?;

    let mut points = Vec::with_capacity(gp.cells.len() + 2);
    points.push(start);
    for &(ix, iy) in &gp.cells {
        points.push(grid.cell_center(ix, iy));
    }
    points.push(goal);
    points.dedup_by(|a, b| a.dist(*b) < 1e-12);
    Ok(DensePath::new(points))
}

use rand::Rng;

use super::path::DensePath;
use super::PlanError;
use crate::geom::{segment_intersects_circle, Circle, Vec2};
use crate::util::rng_from_seed;

/// RRT* parameters. The rewiring radius is `gamma * sqrt(ln n / n)`, capped at
/// twice the steering step.
#[derive(Clone, Copy, Debug)]
pub struct RrtParams {
    pub step: f64,
    pub goal_bias: f64,
    pub gamma: f64,
}

impl Default for RrtParams {
    fn default() -> Self {
        RrtParams { step: 0.05, goal_bias: 0.05, gamma: 0.4 }
    }
}

struct Node {
    pos: Vec2,
    parent: u32,
    cost: f64,
    children: Vec<u32>,
}

/// Uniform-grid spatial index over the unit square.
struct SpatialGrid {
    cell: f64,
    n: usize,
    buckets: Vec<Vec<u32>>,
}

impl SpatialGrid {
    fn new(cell: f64) -> Self {
        let n = (1.0 / cell).ceil() as usize;
        SpatialGrid { cell, n, buckets: vec![Vec::new(); n * n] }
    }

    fn bucket_of(&self, p: Vec2) -> (usize, usize) {
        let bx = ((p.x / self.cell) as usize).min(self.n - 1);
        let by = ((p.y / self.cell) as usize).min(self.n - 1);
        (bx, by)
    }

    fn insert(&mut self, p: Vec2, id: u32) {
        let (bx, by) = self.bucket_of(p);
        self.buckets[by * self.n + bx].push(id);
    }

    /// Nearest node to `p`, searching outward ring by ring until the best
    /// found distance is certain.
    fn nearest(&self, nodes: &[Node], p: Vec2) -> u32 {
        let (bx, by) = self.bucket_of(p);
        let mut best: Option<(u32, f64)> = None;
        let max_ring = self.n as i64;
        for ring in 0..=max_ring {
            if let Some((_, bd)) = best {
                // Everything in farther rings is at least (ring-1) cells away.
                if (ring - 1).max(0) as f64 * self.cell > bd {
                    break;
                }
            }
            for dy in -ring..=ring {
                for dx in -ring..=ring {
                    if dx.abs() != ring && dy.abs() != ring {
                        continue;
                    }
                    let (x, y) = (bx as i64 + dx, by as i64 + dy);
                    if x < 0 || y < 0 || x >= self.n as i64 || y >= self.n as i64 {
                        continue;
                    }
                    for &id in &self.buckets[y as usize * self.n + x as usize] {
                        let d = nodes[id as usize].pos.dist(p);
                        if best.map_or(true, |(_, bd)| d < bd) {
                            best = Some((id, d));
                        }
                    }
                }
            }
        }
        best.expect("spatial grid always holds the root").0
    }

    /// All node ids within `radius` of `p`.
    fn within(&self, nodes: &[Node], p: Vec2, radius: f64, out: &mut Vec<u32>) {
        out.clear();
        let (bx, by) = self.bucket_of(p);
        let ring = (radius / self.cell).ceil() as i64 + 1;
        for dy in -ring..=ring {
            for dx in -ring..=ring {
                let (x, y) = (bx as i64 + dx, by as i64 + dy);
                if x < 0 || y < 0 || x >= self.n as i64 || y >= self.n as i64 {
                    continue;
                }
                for &id in &self.buckets[y as usize * self.n + x as usize] {
                    if nodes[id as usize].pos.dist(p) <= radius {
                        out.push(id);
                    }
                }
            }
        }
    }
}

fn segment_clear(a: Vec2, b: Vec2, obstacles: &[Circle]) -> bool {
    obstacles.iter().all(|c| !segment_intersects_circle(a, b, c))
}

/// Sample-based near-optimal planning with default parameters.
pub fn rrt_star(
    obstacles: &[Circle],
    start: Vec2,
    goal: Vec2,
    iterations: usize,
    seed: u64,
) -> Result<DensePath, PlanError> {
    rrt_star_with(RrtParams::default(), obstacles, start, goal, iterations, seed)
}

/// RRT* with explicit parameters. Deterministic in `seed`; distinct seeds
/// explore differently and so yield varied paths for the same query.
pub fn rrt_star_with(
    params: RrtParams,
    obstacles: &[Circle],
    start: Vec2,
    goal: Vec2,
    iterations: usize,
    seed: u64,
) -> Result<DensePath, PlanError> {
    let in_map = |p: Vec2| (0.0..=1.0).contains(&p.x) && (0.0..=1.0).contains(&p.y);
    if !in_map(start) || !in_map(goal) {
        return Err(PlanError::InvalidQuery("start or goal outside the unit square".into()));
    }
    if obstacles.iter().any(|c| c.contains(start) || c.contains(goal)) {
        return Err(PlanError::InvalidQuery("start or goal inside an obstacle".into()));
    }
    if iterations == 0 {
        return Err(PlanError::InvalidQuery("iterations must be >= 1".into()));
    }
    if start.dist(goal) < 1e-12 {
        return Ok(DensePath::new(vec![start]));
    }

    let mut rng = rng_from_seed(seed);
    let mut nodes = vec![Node { pos: start, parent: u32::MAX, cost: 0.0, children: Vec::new() }];
    let mut grid = SpatialGrid::new(params.step);
    grid.insert(start, 0);
    let mut near_buf: Vec<u32> = Vec::new();

    for _ in 0..iterations {
        let sample = if rng.gen::<f64>() < params.goal_bias {
            goal
        } else {
            Vec2::new(rng.gen::<f64>(), rng.gen::<f64>())
        };

        let nearest_id = grid.nearest(&nodes, sample);
        let nearest_pos = nodes[nearest_id as usize].pos;
        let to_sample = sample - nearest_pos;
        let d = to_sample.norm();
        if d < 1e-12 {
            continue;
        }
        let new_pos = if d <= params.step {
            sample
        } else {
            nearest_pos + to_sample * (params.step / d)
        };
        if obstacles.iter().any(|c| c.contains(new_pos)) {
            continue;
        }

        // Choose the lowest-cost collision-free parent among nearby nodes.
        let n = nodes.len() as f64;
        let radius = (params.gamma * (n.ln().max(1.0) / n).sqrt()).min(2.0 * params.step);
        grid.within(&nodes, new_pos, radius.max(params.step), &mut near_buf);
        if !near_buf.contains(&nearest_id) {
            near_buf.push(nearest_id);
        }

        let mut best_parent = None;
        let mut best_cost = f64::INFINITY;
        for &cand in &near_buf {
            let cpos = nodes[cand as usize].pos;
            let c = nodes[cand as usize].cost + cpos.dist(new_pos);
            if c < best_cost && segment_clear(cpos, new_pos, obstacles) {
                best_cost = c;
                best_parent = Some(cand);
            }
        }
        let Some(parent) = best_parent else { continue };

        let new_id = nodes.len() as u32;
        nodes.push(Node { pos: new_pos, parent, cost: best_cost, children: Vec::new() });
        nodes[parent as usize].children.push(new_id);
        grid.insert(new_pos, new_id);

        // Rewire: route nearby nodes through the new node when cheaper.
        for &cand in &near_buf {
            if cand == parent {
                continue;
            }
            let cpos = nodes[cand as usize].pos;
            let through = best_cost + new_pos.dist(cpos);
            if through + 1e-12 < nodes[cand as usize].cost
                && segment_clear(new_pos, cpos, obstacles)
            {
                let old_parent = nodes[cand as usize].parent;
                if old_parent != u32::MAX {
                    let ch = &mut nodes[old_parent as usize].children;
                    if let Some(k) = ch.iter().position(|&c| c == cand) {
                        ch.swap_remove(k);
                    }
                }
                nodes[cand as usize].parent = new_id;
                nodes[new_id as usize].children.push(cand);
                let delta = through - nodes[cand as usize].cost;
                propagate_cost(&mut nodes, cand, delta);
            }
        }
    }

    // Best connectable node to the goal (scanned at the end so rewired costs
    // are final).
    let mut best: Option<(u32, f64)> = None;
    for (id, node) in nodes.iter().enumerate() {
        let d = node.pos.dist(goal);
        if d <= params.step && segment_clear(node.pos, goal, obstacles) {
            let total = node.cost + d;
            if best.map_or(true, |(_, bc)| total < bc) {
                best = Some((id as u32, total));
            }
        }
    }
    let Some((goal_parent, _)) = best else {
        return Err(PlanError::NoPath);
    };

    let mut rev = vec![goal];
    let mut cur = goal_parent;
    loop {
        rev.push(nodes[cur as usize].pos);
        if nodes[cur as usize].parent == u32::MAX {
            break;
        }
        cur = nodes[cur as usize].parent;
    }
    rev.reverse();
    rev.dedup_by(|a, b| a.dist(*b) < 1e-12);
    Ok(DensePath::new(rev))
}

/// Apply a cost delta to a subtree after rewiring (iterative DFS).
fn propagate_cost(nodes: &mut Vec<Node>, root: u32, delta: f64) {
    let mut stack = vec![root];
    while let Some(id) = stack.pop() {
        nodes[id as usize].cost += delta;
        stack.extend(nodes[id as usize].children.iter().copied());
    }
}

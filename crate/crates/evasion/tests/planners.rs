//! Planner oracles. The central one: A* must return exactly the optimal cost,
//! verified against an independent Dijkstra implemented here from scratch
//! (no heuristic, plain relaxation) under the same movement rules.

use evasion::geom::{segment_intersects_circle, Circle, Vec2};
use evasion::planners::{
    astar, astar_path, downsample, generate_dataset, rasterize, rrt_star, vo_action, DensePath,
    GridMap, PlanError, ScriptedEvader, ScriptedParams,
};
use evasion::env::{EvaderObservation, ObservedPursuer, PursuerKind, WorldConfig};
use evasion::util::rng_from_seed;
use rand::Rng;

// ---------------------------------------------------------------------------
// Independent oracle: textbook Dijkstra over the same 8-connected grid with
// sqrt(2) diagonals and no corner cutting. Costs are tracked as integer move
// counts so the comparison with A* is exact, not approximate.
// ---------------------------------------------------------------------------

fn dijkstra_cost(grid: &GridMap, start: (usize, usize), goal: (usize, usize)) -> Option<f64> {
    let n = grid.n;
    let idx = |c: (usize, usize)| c.1 * n + c.0;
    if grid.is_blocked(start.0, start.1) || grid.is_blocked(goal.0, goal.1) {
        return None;
    }
    // (straight, diag) move counts per cell; value = s + d * sqrt(2).
    let mut best: Vec<Option<(u32, u32)>> = vec![None; n * n];
    let g = |(s, d): (u32, u32)| f64::from(s) + f64::from(d) * std::f64::consts::SQRT_2;
    let mut heap = std::collections::BinaryHeap::new();
    best[idx(start)] = Some((0, 0));
    // Min-heap via Reverse on an ordered (cost-bits, cell) key. f64 costs here
    // are sums of exact integer combinations, all non-negative and finite, so
    // the bit pattern of the cost orders identically to the value.
    heap.push(std::cmp::Reverse((g((0, 0)).to_bits(), idx(start))));

    while let Some(std::cmp::Reverse((cost_bits, cell))) = heap.pop() {
        let cur = (cell % n, cell / n);
        let counts = best[cell].expect("queued cells have counts");
        if f64::from_bits(cost_bits) > g(counts) {
            continue; // stale entry
        }
        if cur == goal {
            return Some(g(counts));
        }
        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                if dx == 0 && dy == 0 {
                    continue;
                }
                let (nx, ny) = (cur.0 as i64 + dx, cur.1 as i64 + dy);
                if nx < 0 || ny < 0 || nx >= n as i64 || ny >= n as i64 {
                    continue;
                }
                let next = (nx as usize, ny as usize);
                if grid.is_blocked(next.0, next.1) {
                    continue;
                }
                let diagonal = dx != 0 && dy != 0;
                if diagonal
                    && (grid.is_blocked(next.0, cur.1) || grid.is_blocked(cur.0, next.1))
                {
                    continue;
                }
                let cand =
                    if diagonal { (counts.0, counts.1 + 1) } else { (counts.0 + 1, counts.1) };
                let target = idx(next);
                if best[target].map_or(true, |old| g(cand) < g(old)) {
                    best[target] = Some(cand);
                    heap.push(std::cmp::Reverse((g(cand).to_bits(), target)));
                }
            }
        }
    }
    None
}

fn random_grid(rng: &mut impl Rng, n: usize) -> GridMap {
    let obstacles: Vec<Circle> = (0..rng.gen_range(2..6))
        .map(|_| {
            Circle::new(
                Vec2::new(rng.gen_range(0.15..0.85), rng.gen_range(0.15..0.85)),
                rng.gen_range(0.05..0.18),
            )
        })
        .collect();
    rasterize(&obstacles, n)
}

fn random_free_cell(rng: &mut impl Rng, grid: &GridMap) -> (usize, usize) {
    loop {
        let c = (rng.gen_range(0..grid.n), rng.gen_range(0..grid.n));
        if !grid.is_blocked(c.0, c.1) {
            return c;
        }
    }
}

#[test]
fn astar_cost_equals_independent_dijkstra_on_random_grids() {
    let mut rng = rng_from_seed(4242);
    for case in 0..25 {
        let grid = random_grid(&mut rng, 48);
        let start = random_free_cell(&mut rng, &grid);
        let goal = random_free_cell(&mut rng, &grid);
        let oracle = dijkstra_cost(&grid, start, goal);
        match astar(&grid, start, goal) {
            Ok(path) => {
                let want = oracle.expect("A* found a path, Dijkstra must too");
                assert_eq!(
                    path.cost(),
                    want,
                    "case {case}: A* cost {} != Dijkstra cost {want}",
                    path.cost()
                );
            }
            Err(PlanError::NoPath) => {
                assert!(oracle.is_none(), "case {case}: A* claims no path, Dijkstra found one");
            }
            Err(e) => panic!("case {case}: unexpected A* error {e:?}"),
        }
    }
}

#[test]
fn astar_handles_hand_checkable_grids() {
    // Empty 10x10: cost equals the octile distance.
    let empty = GridMap::new(10, vec![false; 100]);
    let p = astar(&empty, (0, 0), (9, 4)).unwrap();
    assert_eq!(p.diag, 4);
    assert_eq!(p.straight, 5);

    // Vertical wall with one gap forces the path through the gap.
    let n = 9;
    let mut blocked = vec![false; n * n];
    for y in 0..n {
        if y != 4 {
            blocked[y * n + 4] = true;
        }
    }
    let walled = GridMap::new(n, blocked);
    let p = astar(&walled, (0, 0), (8, 0)).unwrap();
    assert!(p.cells.contains(&(4, 4)), "must pass through the single gap");
    // Entering/leaving the gap diagonally would cut corners past the wall
    // cells, so the crossing is orthogonal: 3 diagonals up, 3 straights
    // through, 3 diagonals down, and 1 straight to the goal row.
    assert_eq!(p.cost(), 4.0 + 6.0 * std::f64::consts::SQRT_2);
    assert_eq!(p.cost(), dijkstra_cost(&walled, (0, 0), (8, 0)).unwrap());

    // Start == goal.
    let p = astar(&empty, (3, 3), (3, 3)).unwrap();
    assert_eq!(p.cost(), 0.0);
    assert_eq!(p.cells, vec![(3, 3)]);

    // Fully separated halves: no path.
    let mut split = vec![false; n * n];
    for y in 0..n {
        split[y * n + 4] = true;
    }
    assert!(matches!(astar(&GridMap::new(n, split), (0, 0), (8, 0)), Err(PlanError::NoPath)));
}

#[test]
fn astar_never_cuts_corners() {
    // Two blocked cells meeting at a corner: the diagonal between them is
    // forbidden, so the path must go around.
    let n = 5;
    let mut blocked = vec![false; n * n];
    blocked[2 * n + 2] = true; // (2,2)
    blocked[1 * n + 3] = true; // (3,1)
    let grid = GridMap::new(n, blocked);
    let p = astar(&grid, (3, 2), (2, 1)).unwrap();
    // Direct diagonal (3,2)->(2,1) squeezes between (2,2) and (3,1): illegal.
    assert!(p.cost() > std::f64::consts::SQRT_2 + 1e-9);
    for w in p.cells.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a.0 != b.0 && a.1 != b.1 {
            assert!(!grid.is_blocked(a.0, b.1) && !grid.is_blocked(b.0, a.1));
        }
    }
}

#[test]
fn astar_is_deterministic() {
    let mut rng = rng_from_seed(99);
    let grid = random_grid(&mut rng, 32);
    let start = random_free_cell(&mut rng, &grid);
    let goal = random_free_cell(&mut rng, &grid);
    let a = astar(&grid, start, goal);
    let b = astar(&grid, start, goal);
    match (a, b) {
        (Ok(x), Ok(y)) => assert_eq!(x, y),
        (Err(PlanError::NoPath), Err(PlanError::NoPath)) => {}
        other => panic!("nondeterministic outcomes: {other:?}"),
    }
}

#[test]
fn astar_path_keeps_exact_endpoints() {
    let obstacles = vec![Circle::new(Vec2::new(0.5, 0.5), 0.15)];
    let start = Vec2::new(0.1, 0.1);
    let goal = Vec2::new(0.9, 0.9);
    let path = astar_path(&obstacles, start, goal, 64).unwrap();
    assert_eq!(path.start(), start);
    assert_eq!(path.goal(), goal);
    assert!(path.points.len() > 2);

    // Start inside an obstacle is rejected up front.
    assert!(matches!(
        astar_path(&obstacles, Vec2::new(0.5, 0.5), goal, 64),
        Err(PlanError::InvalidQuery(_))
    ));
}

#[test]
fn rrt_star_paths_are_deterministic_valid_and_improve_with_budget() {
    let obstacles = vec![
        Circle::new(Vec2::new(0.45, 0.5), 0.1),
        Circle::new(Vec2::new(0.7, 0.3), 0.08),
    ];
    let start = Vec2::new(0.1, 0.1);
    let goal = Vec2::new(0.9, 0.9);

    let a = rrt_star(&obstacles, start, goal, 1500, 3).unwrap();
    let b = rrt_star(&obstacles, start, goal, 1500, 3).unwrap();
    assert_eq!(a.points, b.points, "same seed must rebuild the same tree");

    let c = rrt_star(&obstacles, start, goal, 1500, 4).unwrap();
    assert_ne!(a.points, c.points, "distinct seeds should explore differently");

    for path in [&a, &c] {
        assert_eq!(path.start(), start);
        assert_eq!(path.goal(), goal);
        for w in path.points.windows(2) {
            for o in &obstacles {
                assert!(
                    !segment_intersects_circle(w[0], w[1], o),
                    "path segment crosses an obstacle"
                );
            }
        }
    }

    // More samples should not make the planner worse on average.
    let short: f64 = (0..5)
        .map(|s| rrt_star(&obstacles, start, goal, 400, s).unwrap().length())
        .sum::<f64>()
        / 5.0;
    let long: f64 = (0..5)
        .map(|s| rrt_star(&obstacles, start, goal, 4000, s).unwrap().length())
        .sum::<f64>()
        / 5.0;
    assert!(long <= short + 1e-9, "mean length grew with budget: {short} -> {long}");

    // Near-optimality sanity on an empty map.
    let open = rrt_star(&[], start, goal, 3000, 1).unwrap();
    let straight = start.dist(goal);
    assert!(
        open.length() < straight * 1.15,
        "empty-map path {:.3} is far from straight-line {straight:.3}",
        open.length()
    );
}

#[test]
fn downsample_spaces_points_uniformly_and_pins_endpoints() {
    let dense = DensePath::new(vec![
        Vec2::new(0.0, 0.0),
        Vec2::new(0.3, 0.0),
        Vec2::new(1.0, 0.0),
    ]);
    let wp = downsample(&dense, 6);
    assert_eq!(wp.n_w(), 6);
    assert_eq!(wp.start(), dense.start());
    assert_eq!(wp.goal(), dense.goal());
    for (k, p) in wp.points.iter().enumerate() {
        assert!((p.x - k as f64 / 5.0).abs() < 1e-12, "uneven arc spacing at {k}");
        assert_eq!(p.y, 0.0);
    }

    // Degenerate zero-length path: the point is repeated.
    let stub = DensePath::new(vec![Vec2::new(0.5, 0.5)]);
    let wp = downsample(&stub, 4);
    assert!(wp.points.iter().all(|p| *p == Vec2::new(0.5, 0.5)));
}

fn test_config() -> WorldConfig {
    WorldConfig::load(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/prisoner.json"))
        .expect("bundled config must load")
}

#[test]
fn dataset_generation_is_seeded_and_well_formed() {
    let cfg = test_config();
    let (recs, stats) = generate_dataset(&cfg, 24, 10, 700, 5).unwrap();
    let (recs2, _) = generate_dataset(&cfg, 24, 10, 700, 5).unwrap();
    assert_eq!(stats.requested, 24);
    assert_eq!(stats.produced + stats.planner_failures, 24);
    assert_eq!(recs.len(), recs2.len());
    for (a, b) in recs.iter().zip(&recs2) {
        assert_eq!(a.waypoints, b.waypoints, "dataset must be byte-stable per seed");
    }

    for (i, r) in recs.iter().enumerate() {
        assert_eq!(r.waypoints.len(), 10);
        assert_eq!(r.waypoints[0], r.p_s);
        assert_eq!(*r.waypoints.last().unwrap(), r.p_g);
        assert_eq!(r.obstacles.len(), cfg.obstacles.len());
        if i % 2 == 0 {
            // Evaluation-distribution half: corner start, hideout goal.
            assert!(r.p_s.x >= cfg.corner_start.min.x && r.p_s.x <= cfg.corner_start.max.x);
            assert!(r.p_s.y >= cfg.corner_start.min.y && r.p_s.y <= cfg.corner_start.max.y);
            assert!(cfg.hideout_candidates.contains(&r.p_g));
        }
    }
}

fn bare_observation(pos: Vec2, pursuers: Vec<ObservedPursuer>) -> EvaderObservation {
    EvaderObservation {
        t_frac: 0.0,
        hideouts: vec![],
        obstacles: vec![],
        evader_pos: pos,
        prev_speed: 0.0,
        pursuers,
    }
}

#[test]
fn vo_heads_to_goal_when_clear_and_dodges_a_blocker() {
    let cfg = test_config();
    let goal = Vec2::new(0.9, 0.5);
    let pos = Vec2::new(0.1, 0.5);

    // No pursuers: straight at the goal, full speed.
    let a = vo_action(&bare_observation(pos, vec![]), goal, &cfg);
    assert!((a.heading - 0.0).abs() < 1e-12);
    assert_eq!(a.speed_frac, 1.0);

    // A pursuer parked dead ahead: the straight-at-goal velocity conflicts,
    // so the choice must deviate in heading or stay clear for the horizon.
    let blocker = ObservedPursuer {
        kind: PursuerKind::SearchParty,
        visible: true,
        pos: Vec2::new(0.3, 0.5),
        vel: Vec2::ZERO,
    };
    let a = vo_action(&bare_observation(pos, vec![blocker]), goal, &cfg);
    let v = Vec2::from_polar(a.heading, a.speed_frac * cfg.evader_speed);
    let entry = evasion::geom::ray_disc_entry_time(
        pos,
        v,
        blocker.pos,
        evasion::env::detection_range(
            blocker.kind,
            cfg.visibility.value(pos),
            a.speed_frac * cfg.evader_speed,
            &cfg.detection,
        ),
    );
    assert!(
        entry.map_or(true, |t| t > 50.0),
        "chosen velocity still enters the blocker's disc at t = {entry:?}"
    );
}

#[test]
fn scripted_evader_follows_path_and_slows_on_contact() {
    let cfg = test_config();
    let path = DensePath::new(vec![Vec2::new(0.1, 0.1), Vec2::new(0.5, 0.1), Vec2::new(0.9, 0.1)]);
    let mut ev = ScriptedEvader::new(path, ScriptedParams::default());

    // Clear view: full speed along the path (heading east).
    let a = ev.act(&bare_observation(Vec2::new(0.1, 0.1), vec![]), &cfg);
    assert_eq!(a.speed_frac, 1.0);
    assert!(a.heading.abs() < 0.3);

    // Pursuer in trigger range: evasive half-speed behavior kicks in.
    let threat = ObservedPursuer {
        kind: PursuerKind::Helicopter,
        visible: true,
        pos: Vec2::new(0.25, 0.12),
        vel: Vec2::new(-0.001, 0.0),
    };
    let mut ev = ScriptedEvader::new(
        DensePath::new(vec![Vec2::new(0.1, 0.1), Vec2::new(0.9, 0.1)]),
        ScriptedParams::default(),
    );
    let a = ev.act(&bare_observation(Vec2::new(0.2, 0.1), vec![threat]), &cfg);
    assert_eq!(a.speed_frac, ScriptedParams::default().slow_frac);
}

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::path::{downsample, WaypointPath};
use super::rrt::rrt_star;
use super::PlanError;
use crate::env::WorldConfig;
use crate::geom::{Circle, Vec2};
use crate::util::{derive_seed, rng_from_seed};

/// One diffusion-corpus record: endpoints, the obstacle digest the path was
/// planned against, and the downsampled waypoints.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PathRecord {
    pub p_s: Vec2,
    pub p_g: Vec2,
    pub obstacles: Vec<Circle>,
    pub waypoints: Vec<Vec2>,
}

impl PathRecord {
    pub fn waypoint_path(&self) -> WaypointPath {
        WaypointPath::new(self.waypoints.clone())
    }
}

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct DatasetStats {
    pub requested: usize,
    pub produced: usize,
    pub planner_failures: usize,
}

const RETRIES_PER_RECORD: u64 = 20;
/// Minimum endpoint separation for the uniformly drawn half of the corpus.
const MIN_SEPARATION: f64 = 0.2;

fn sample_free(rng: &mut impl Rng, cfg: &WorldConfig, min: Vec2, max: Vec2) -> Vec2 {
    loop {
        let p = Vec2::new(rng.gen_range(min.x..=max.x), rng.gen_range(min.y..=max.y));
        if cfg.obstacles.iter().all(|c| !c.contains(p)) {
            return p;
        }
    }
}

/// Draw one (start, goal) pair. Even records mirror the evaluation
/// distribution (corner start, hideout goal); odd records cover the map
/// uniformly for generalization.
fn sample_endpoints(rng: &mut impl Rng, cfg: &WorldConfig, index: usize) -> (Vec2, Vec2) {
    if index % 2 == 0 {
        let s = sample_free(rng, cfg, cfg.corner_start.min, cfg.corner_start.max);
        let g = cfg.hideout_candidates[rng.gen_range(0..cfg.hideout_candidates.len())];
        (s, g)
    } else {
        loop {
            let s = sample_free(rng, cfg, Vec2::ZERO, Vec2::new(1.0, 1.0));
            let g = sample_free(rng, cfg, Vec2::ZERO, Vec2::new(1.0, 1.0));
            if s.dist(g) >= MIN_SEPARATION {
                return (s, g);
            }
        }
    }
}

/// Generate the RRT* waypoint corpus: `count` records, each a fresh seeded
/// plan downsampled to `n_w` points. Parallel over records and byte-stable:
/// record `i` depends only on `(config, seed, i)`.
///
/// Fails when more than 5% of records exhaust their planner retries.
pub fn generate_dataset(
    cfg: &WorldConfig,
    count: usize,
    n_w: usize,
    rrt_iterations: usize,
    seed: u64,
) -> Result<(Vec<PathRecord>, DatasetStats), PlanError> {
    let results: Vec<Option<PathRecord>> = (0..count)
        .into_par_iter()
        .map(|i| {
            for attempt in 0..RETRIES_PER_RECORD {
                let s = derive_seed(seed, (i as u64) * RETRIES_PER_RECORD + attempt);
                let mut rng = rng_from_seed(s);
                let (p_s, p_g) = sample_endpoints(&mut rng, cfg, i);
                let plan_seed = rng.gen::<u64>();
                match rrt_star(&cfg.obstacles, p_s, p_g, rrt_iterations, plan_seed) {
                    Ok(path) => {
                        let wp = downsample(&path, n_w);
                        return Some(PathRecord {
                            p_s,
                            p_g,
                            obstacles: cfg.obstacles.clone(),
                            waypoints: wp.points,
                        });
                    }
                    Err(_) => continue,
                }
            }
            None
        })
        .collect();

    let produced: Vec<PathRecord> = results.iter().flatten().cloned().collect();
    let stats = DatasetStats {
        requested: count,
        produced: produced.len(),
        planner_failures: count - produced.len(),
    };
    if stats.planner_failures * 20 > count {
        return Err(PlanError::Dataset(format!(
            "planner failed on {} of {} records (> 5%)",
            stats.planner_failures, count
        )));
    }
    Ok((produced, stats))
}

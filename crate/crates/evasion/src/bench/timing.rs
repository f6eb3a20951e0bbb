use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::BenchError;
use crate::diffusion::{DiffusionModel, PathConstraint};
use crate::planners::rrt_star;
use crate::util::{derive_seed, mean_std, median};

/// A fixed planning query shared by both planners under test.
#[derive(Clone, Debug)]
pub struct TimingQuery {
    pub constraint: PathConstraint,
    pub rrt_iterations: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TimingRow {
    pub count: usize,
    pub diffusion_mean_s: f64,
    pub diffusion_std_s: f64,
    pub diffusion_median_s: f64,
    pub rrt_mean_s: f64,
    pub rrt_std_s: f64,
    pub rrt_median_s: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TimingTable {
    pub repeats: usize,
    pub rows: Vec<TimingRow>,
}

impl TimingTable {
    pub fn row(&self, count: usize) -> Option<&TimingRow> {
        self.rows.iter().find(|r| r.count == count)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "count,diffusion_mean_s,diffusion_std_s,diffusion_median_s,\
             rrt_mean_s,rrt_std_s,rrt_median_s\n",
        );
        for r in &self.rows {
            s.push_str(&format!(
                "{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
                r.count,
                r.diffusion_mean_s,
                r.diffusion_std_s,
                r.diffusion_median_s,
                r.rrt_mean_s,
                r.rrt_std_s,
                r.rrt_median_s
            ));
        }
        s
    }
}

/// Wall-clock comparison: batched diffusion sampling vs sequential RRT*
/// planning, for each requested path count.
///
/// Runs single-threaded on warm caches (one untimed warm-up pass per
/// planner). Path counts must be positive.
pub fn timing_study(
    model: &DiffusionModel,
    query: &TimingQuery,
    counts: &[usize],
    repeats: usize,
    seed: u64,
) -> Result<TimingTable, BenchError> {
    if counts.is_empty() || repeats == 0 {
        return Err(BenchError::InvalidRequest("counts and repeats must be non-empty".into()));
    }
    if counts.contains(&0) {
        return Err(BenchError::InvalidRequest("path count 0 is not measurable".into()));
    }
    let c = &query.constraint;

    // Warm-up: touch both code paths once so first-run effects are excluded.
    model.sample_paths(c, 1, derive_seed(seed, 0), 0)?;
    let _ = rrt_star(&c.obstacles, c.start, c.goal, query.rrt_iterations, derive_seed(seed, 1));

    let mut rows = Vec::with_capacity(counts.len());
    for (ci, &count) in counts.iter().enumerate() {
        let mut dif = Vec::with_capacity(repeats);
        let mut rrt = Vec::with_capacity(repeats);
        for rep in 0..repeats {
            let run = derive_seed(seed, 100 + (ci * repeats + rep) as u64);

            let t0 = Instant::now();
            model.sample_paths(c, count, run, 0)?;
            dif.push(t0.elapsed().as_secs_f64());

            let t1 = Instant::now();
            for k in 0..count {
                // NoPath on an individual plan still counts as one attempt;
                // the study measures planner throughput, not success rate.
                let _ = rrt_star(
                    &c.obstacles,
                    c.start,
                    c.goal,
                    query.rrt_iterations,
                    derive_seed(run, k as u64),
                );
            }
            rrt.push(t1.elapsed().as_secs_f64());
        }
        let (diffusion_mean_s, diffusion_std_s) = mean_std(&dif);
        let (rrt_mean_s, rrt_std_s) = mean_std(&rrt);
        rows.push(TimingRow {
            count,
            diffusion_mean_s,
            diffusion_std_s,
            diffusion_median_s: median(&dif),
            rrt_mean_s,
            rrt_std_s,
            rrt_median_s: median(&rrt),
        });
    }
    Ok(TimingTable { repeats, rows })
}

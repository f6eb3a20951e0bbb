//! Geometric planners and scripted evaders: A* on a conservatively rasterized
//! grid, RRT* with rewiring, uniform arc-length downsampling, the
//! velocity-obstacle baseline, and the scripted path-following evader.

mod astar;
mod dataset;
mod path;
mod rrt;
mod scripted;
mod vo;

pub use astar::{astar, astar_path, rasterize, GridMap, GridPath, ASTAR_GRID_N};
pub use dataset::{generate_dataset, DatasetStats, PathRecord};
pub use path::{downsample, DensePath, WaypointPath};
pub use rrt::{rrt_star, rrt_star_with, RrtParams};
pub use scripted::{scripted_evader_action, ScriptedEvader, ScriptedParams};
pub use vo::{vo_action, VO_HEADINGS, VO_HORIZON_STEPS, VO_SPEED_FRACS};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("no path between start and goal")]
    NoPath,
    #[error("invalid planner query: {0}")]
    InvalidQuery(String),
    #[error("dataset generation failed: {0}")]
    Dataset(String),
}

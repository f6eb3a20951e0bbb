//! Benchmark harness: episode runner, metrics, timing studies, rendering.

mod episode;
mod metrics;
mod render;
mod timing;

pub use episode::{
    run_episode, run_episodes, EpisodeLog, Policy, StepRecord, N_CANDIDATE_PATHS, POLICY_TAGS,
    RRT_EVAL_ITERATIONS,
};
pub use metrics::{aggregate, detection_fraction, raw_score, MetricRow, MetricTable};
pub use render::{render_ppm, render_svg, RenderScene, RenderStyle};
pub use timing::{timing_study, TimingQuery, TimingRow, TimingTable};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("environment error: {0}")]
    Env(#[from] crate::env::EnvError),
    #[error("planning error: {0}")]
    Plan(#[from] crate::planners::PlanError),
    #[error("diffusion error: {0}")]
    Diffusion(#[from] crate::diffusion::DiffusionError),
    #[error("rl error: {0}")]
    Rl(#[from] crate::rl::RlError),
    #[error("costmap error: {0}")]
    Costmap(#[from] crate::costmap::CostmapError),
    #[error("artifact does not fit this world: {0}")]
    Artifact(String),
    #[error("invalid benchmark request: {0}")]
    InvalidRequest(String),
}

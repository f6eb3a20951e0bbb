//! Waypoint-conditioned soft actor-critic evader.
//!
//! The agent maps the evader observation (optionally augmented with the
//! current waypoint) to a squashed-Gaussian action over heading and speed.
//! Everything — twin critics, target networks, learned temperature — runs on
//! the crate's own dense kernels with hand-derived gradients.

mod replay;
mod sac;
mod tracker;
mod train;

pub use replay::{ReplayBuffer, Transition};
pub use sac::{
    action_to_command, ActorGrads, CriticGrads, SacAgent, SacCheckpoint, SacConfig, UpdateStats,
    ACT_DIM, SPEED_DEADBAND,
};
pub use tracker::WaypointTracker;
pub use train::{obs_dim_for, train_evader, EpisodeStat, TrainBudget, TrainMode, TrainOutput};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum RlError {
    #[error("environment error: {0}")]
    Env(#[from] crate::env::EnvError),
    #[error("diffusion error: {0}")]
    Diffusion(#[from] crate::diffusion::DiffusionError),
    #[error("numerics error: {0}")]
    Numerics(#[from] crate::numerics::NumericsError),
    #[error("invalid agent configuration: {0}")]
    Config(String),
}

//! The partially observable pursuit-evasion world: configuration, seeded
//! resets, deterministic dynamics, detection, observation, and reward.

mod config;
mod world;

pub use config::{
    AgentLabels, DetectionParams, RewardConstants, ViewMode, VisibilityBump, VisibilityField,
    WorldConfig, OBSTACLE_PROJECTION_MARGIN,
};
pub use world::{
    detection_range, env_reset, env_step, observe, reward, EvaderAction, EvaderObservation,
    ObservedPursuer, Outcome, PursuerKind, PursuerState, StepEvents, WorldState,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("invalid world config: {0}")]
    InvalidConfig(String),
    #[error("could not place {0} in free space after {1} attempts")]
    NoFreeSpace(&'static str, usize),
    #[error("cannot step a terminal episode (outcome already {0:?})")]
    Terminal(Outcome),
    #[error("io error reading config: {0}")]
    Io(#[from] std::io::Error),
    #[error("config parse error: {0}")]
    Parse(#[from] serde_json::Error),
}

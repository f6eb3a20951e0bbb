//! The waypoint diffusion planner: a denoising model over fixed-length
//! waypoint paths trained by noise-prediction MSE on the RRT* corpus and
//! sampled ancestrally with per-step constraint projection.

mod model;
mod schedule;

pub use model::{
    apply_constraints, cond_vector, forward_noise, mse_loss, path_satisfies_constraints,
    timestep_embedding, DiffusionCheckpoint, DiffusionModel, PathConstraint, SampledPath,
    TrainExample, EMB_DIM,
};
pub use schedule::{make_schedule, NoiseSchedule, ScheduleKind};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DiffusionError {
    #[error("invalid schedule: {0}")]
    Schedule(String),
    #[error("model/shape mismatch: {0}")]
    Shape(String),
    #[error("training error: {0}")]
    Training(String),
    #[error(transparent)]
    Numerics(#[from] crate::numerics::NumericsError),
}

//! A desk-scale pursuit-evasion laboratory.
//!
//! The crate is organized bottom-up:
//! - [`geom`] / [`util`]: planar primitives and seed derivation.
//! - [`numerics`]: dense networks, reverse-mode gradients, Adam, checkpoints.
//! - [`env`]: the seeded, partially observable pursuit-evasion world.
//! - [`pursuit`]: the fixed heuristic pursuit-team policy.
//! - [`planners`]: A*, RRT*, path downsampling, velocity obstacles, and the
//!   scripted path-following evader.
//! - [`diffusion`]: the waypoint diffusion planner with constraint-guided
//!   sampling.
//! - [`rl`]: the waypoint-conditioned soft actor-critic evader.
//! - [`costmap`]: posterior detection-risk maps and path selection.
//! - [`bench`]: episode runner, metrics, timing studies, and rendering.

pub mod bench;
pub mod costmap;
pub mod diffusion;
pub mod env;
pub mod geom;
pub mod numerics;
pub mod planners;
pub mod pursuit;
pub mod rl;
pub mod util;

//! Minimal dense-network numerics: feed-forward chains in f64, reverse-mode
//! gradients, an Adam optimizer, and a validated checkpoint container.
//!
//! Networks are evaluated either one sample at a time (`forward`) or in
//! lane-blocks of [`LANES`] samples (`forward_block`). The block kernels keep
//! eight samples resident while traversing the weights once, which is what
//! makes batched inference and training scale sublinearly in sample count on
//! a single core.

mod adam;
mod checkpoint;
mod net;

pub use adam::Adam;
pub use checkpoint::{AdamCheckpoint, LayerSpec, NetCheckpoint, CHECKPOINT_FORMAT_VERSION};
pub use net::{pack_block, unpack_lane, Activation, BlockTape, DenseNet, Layer, LANES};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NumericsError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite gradient encountered at parameter index {0}")]
    NonFiniteGradient(usize),
    #[error("unsupported checkpoint format version {0}")]
    UnsupportedFormatVersion(u32),
}

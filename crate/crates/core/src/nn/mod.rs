//! Minimal dense / 1-D convolution network engine with reverse-mode gradients.

pub mod adam;
pub mod checkpoint;
pub mod init;
pub mod loss;
pub mod network;
pub mod spec;
pub mod tensor;
pub mod train;

use thiserror::Error;

pub use adam::{adam_step, AdamState};
pub use checkpoint::{decode_checkpoint, encode_checkpoint};
pub use init::init_params;
pub use loss::huber_loss;
pub use network::{backward, forward, Gradients, NetParams, Tape};
pub use spec::{conv_output_len, ActShape, LayerSpec, NetSpec};
pub use tensor::{Scalar, Tensor};
pub use train::{split_indices, train, EpochLoss, TrainConfig, TrainOutcome};

#[derive(Debug, Error)]
pub enum NnError {
    #[error("invalid network spec: {0}")]
    InvalidSpec(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("backward called without a cached forward pass")]
    NoForwardState,
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("{0}")]
    InvalidArgument(String),
}

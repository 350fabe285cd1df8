//! Encoder, transition and decoder networks.
//!
//! The encoder turns a stack of frames into a distributed `H' x W' x C`
//! tensor per object plus a concentrated vector `p` (position, or Gaussian
//! parameters). Transitions evolve both; the decoder reads predictions off
//! `p`.

mod config;
mod model;

use thiserror::Error;

pub use config::{ModelConfig, Variant, ENCODER_WIDTHS};
pub use model::{Model, NetState, ObjectOutput, PredictedRollout, Prediction, RolloutOutput};

use crate::gradcore::{CheckpointError, GradError};

#[derive(Debug, Error)]
pub enum PredictorError {
    #[error(transparent)]
    Grad(#[from] GradError),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid model config: {0}")]
    Config(String),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
}

//! Dense `f64` tensors with a reverse-mode tape and the RMSProp optimizer.
//!
//! A [`Tape`] records every operation applied to [`Var`] handles during a
//! forward pass; [`Tape::backward`] replays the record in reverse and
//! returns per-node gradients. Parameters live outside the tape in a
//! [`ParamSet`] and are bound to a fresh tape for each pass.

mod checkpoint;
mod gemm;
pub mod ops;
mod optim;
mod params;
mod tape;
mod tensor;

use thiserror::Error;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, Checkpoint, CheckpointError, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use ops::{
    affine, conv2d, gaussian_nll, pointwise, rotation_covariance, scaled_sigmoid, Pointwise,
    EIGEN_OFFSET, EIGEN_SCALE,
};
pub use optim::{rmsprop_step, RmsPropState};
pub use params::{BoundParams, ParamSet};
pub use tape::{Gradients, Tape, Var};
pub use tensor::Tensor;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GradError {
    #[error("{op}: shape mismatch: {detail}")]
    Shape { op: &'static str, detail: String },
    #[error("{op}: input outside the domain: {detail}")]
    Domain { op: &'static str, detail: String },
    #[error("backward needs a scalar loss, got shape {shape:?}")]
    NotScalar { shape: Vec<usize> },
    #[error("covariance is not symmetric positive definite: {detail}")]
    NotSpd { detail: String },
}

//! Losses, the RMSProp training loop and its plateau schedule.

mod loop_;
mod loss;
mod schedule;

use std::path::PathBuf;

use thiserror::Error;

pub use loop_::{
    batch_gradients, check_compatible, evaluate_loss, fixed_windows, model_input, read_log, run_epochs, train, train_on, window_loss, with_final,
    EpochRecord, TrainOutcome, CHECKPOINT_FILE, LOG_FILE,
};
pub use loss::{compute_loss, LossConfig, Targets};
pub use schedule::{PlateauTracker, TrainSchedule, Verdict};

use crate::datasets::DatasetError;
use crate::gradcore::GradError;
use crate::predictor::PredictorError;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("prediction/target mismatch: {0}")]
    Mismatch(String),
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("dataset incompatible with model: {0}")]
    Incompatible(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Predictor(#[from] PredictorError),
    #[error(transparent)]
    Grad(#[from] GradError),
}

use serde::{Deserialize, Serialize};

use super::TrainError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainSchedule {
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default = "default_lr")]
    pub lr_initial: f64,
    #[serde(default = "default_decay")]
    pub lr_decay_factor: f64,
    #[serde(default = "default_plateau")]
    pub plateau_epochs: usize,
    #[serde(default = "default_stop")]
    pub stop_epochs: usize,
    #[serde(default = "default_max_epochs")]
    pub max_epochs: usize,
    /// Validation loss must drop below `best - tolerance` to count.
    #[serde(default = "default_tolerance")]
    pub improvement_tolerance: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_batch() -> usize {
    8
}
fn default_lr() -> f64 {
    1e-4
}
fn default_decay() -> f64 {
    10.0
}
fn default_plateau() -> usize {
    100
}
fn default_stop() -> usize {
    200
}
fn default_max_epochs() -> usize {
    300
}
fn default_tolerance() -> f64 {
    1e-6
}

impl Default for TrainSchedule {
    fn default() -> Self {
        Self {
            batch_size: default_batch(),
            lr_initial: default_lr(),
            lr_decay_factor: default_decay(),
            plateau_epochs: default_plateau(),
            stop_epochs: default_stop(),
            max_epochs: default_max_epochs(),
            improvement_tolerance: default_tolerance(),
            seed: 0,
        }
    }
}

impl TrainSchedule {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: &str| Err(TrainError::Config(m.to_string()));
        if self.batch_size == 0 || self.max_epochs == 0 {
            return bad("batch_size and max_epochs must be positive");
        }
        if !(self.lr_initial > 0.0) || !(self.lr_decay_factor >= 1.0) {
            return bad("lr_initial must be positive and lr_decay_factor at least 1");
        }
        if self.plateau_epochs == 0 || self.stop_epochs < self.plateau_epochs {
            return bad("need 0 < plateau_epochs <= stop_epochs");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// New best validation loss.
    Improved,
    Continue,
    /// Divide the learning rate before the next epoch.
    Decay,
    Stop,
}

/// Plateau bookkeeping over per-epoch validation losses.
#[derive(Clone, Debug)]
pub struct PlateauTracker {
    plateau: usize,
    stop: usize,
    tolerance: f64,
    best: f64,
    since_best: usize,
}

impl PlateauTracker {
    pub fn new(schedule: &TrainSchedule) -> Self {
        Self {
            plateau: schedule.plateau_epochs,
            stop: schedule.stop_epochs,
            tolerance: schedule.improvement_tolerance,
            best: f64::INFINITY,
            since_best: 0,
        }
    }

    pub fn best(&self) -> f64 {
        self.best
    }

    pub fn epochs_since_best(&self) -> usize {
        self.since_best
    }

    /// Feeds one epoch's validation loss. The learning rate is decayed
    /// every `plateau` epochs without improvement; training stops after
    /// `stop` of them.
    pub fn observe(&mut self, val_loss: f64) -> Verdict {
        if val_loss < self.best - self.tolerance {
            self.best = val_loss;
            self.since_best = 0;
            return Verdict::Improved;
        }
        self.since_best += 1;
        if self.since_best >= self.stop {
            Verdict::Stop
        } else if self.since_best % self.plateau == 0 {
            Verdict::Decay
        } else {
            Verdict::Continue
        }
    }
}

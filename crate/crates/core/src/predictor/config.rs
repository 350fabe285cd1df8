use serde::{Deserialize, Serialize};

use super::PredictorError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Incremental position update, L2 loss.
    Dispnet,
    /// Incremental Gaussian state, NLL loss.
    Probnet,
    /// Position read out afresh each step from the coordinate-augmented state.
    Posnet,
    /// Dispnet that also sees the final frame and predicts the final position.
    Interpnet,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Dispnet, Variant::Probnet, Variant::Posnet, Variant::Interpnet];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Dispnet => "dispnet",
            Variant::Probnet => "probnet",
            Variant::Posnet => "posnet",
            Variant::Interpnet => "interpnet",
        }
    }

    pub fn is_probabilistic(self) -> bool {
        self == Variant::Probnet
    }

    /// Length of the per-object concentrated state `p`.
    pub fn p_len(self) -> usize {
        if self.is_probabilistic() {
            5
        } else {
            2
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = PredictorError;
    fn from_str(s: &str) -> Result<Self, PredictorError> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| PredictorError::Config(format!("unknown variant {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub variant: Variant,
    #[serde(default = "one")]
    pub n_objects: usize,
    #[serde(default = "default_channels")]
    pub channels: usize,
    #[serde(default = "default_t0")]
    pub t0: usize,
    #[serde(default = "yes")]
    pub regress_angular_velocity: bool,
    #[serde(default = "default_image_size")]
    pub image_size: usize,
    #[serde(default = "default_transition_width")]
    pub transition_width: usize,
    #[serde(default = "default_readout_hidden")]
    pub readout_hidden: usize,
}

fn one() -> usize {
    1
}
fn default_channels() -> usize {
    32
}
fn default_t0() -> usize {
    4
}
fn yes() -> bool {
    true
}
fn default_image_size() -> usize {
    64
}
fn default_transition_width() -> usize {
    256
}
fn default_readout_hidden() -> usize {
    128
}

/// Encoder block widths before the per-object output block.
pub const ENCODER_WIDTHS: [usize; 3] = [16, 32, 32];

impl ModelConfig {
    pub fn new(variant: Variant) -> Self {
        Self {
            variant,
            n_objects: 1,
            channels: default_channels(),
            t0: default_t0(),
            regress_angular_velocity: true,
            image_size: default_image_size(),
            transition_width: default_transition_width(),
            readout_hidden: default_readout_hidden(),
        }
    }

    pub fn validate(&self) -> Result<(), PredictorError> {
        let bad = |m: String| Err(PredictorError::Config(m));
        if !(1..=3).contains(&self.n_objects) {
            return bad(format!("n_objects must be 1..=3, got {}", self.n_objects));
        }
        if self.image_size < 8 || self.image_size % 8 != 0 {
            return bad(format!("image_size must be a positive multiple of 8, got {}", self.image_size));
        }
        if self.channels == 0 || self.t0 == 0 || self.transition_width == 0 || self.readout_hidden == 0 {
            return bad("channels, t0 and layer widths must be positive".into());
        }
        Ok(())
    }

    /// Frames stacked into the encoder input.
    pub fn input_frames(&self) -> usize {
        self.t0 + usize::from(self.variant == Variant::Interpnet)
    }

    pub fn input_channels(&self) -> usize {
        3 * self.input_frames()
    }

    /// Side of the distributed state grid.
    pub fn grid(&self) -> usize {
        self.image_size / 8
    }

    /// Input channels of the shared state transition.
    pub fn transition_in(&self) -> usize {
        if self.n_objects > 1 {
            2 * self.channels
        } else {
            self.channels
        }
    }

    /// Pixels per unit of network position output.
    pub fn position_gain(&self) -> f64 {
        self.image_size as f64 / 2.0
    }

    /// Pixel position an all-zero absolute readout maps to.
    pub fn image_center(&self) -> f64 {
        self.image_size as f64 / 2.0
    }

    /// Closed-form parameter count; see `docs/parameters.md`.
    pub fn parameter_count(&self) -> usize {
        let conv = |cin: usize, cout: usize| 9 * cin * cout + cout;
        let dense = |fin: usize, fout: usize| fin * fout + fout;
        let c = self.channels;
        let cells = self.grid() * self.grid();
        let k = self.variant.p_len();
        let mut n = conv(self.input_channels(), ENCODER_WIDTHS[0])
            + conv(ENCODER_WIDTHS[0], ENCODER_WIDTHS[1])
            + conv(ENCODER_WIDTHS[1], ENCODER_WIDTHS[2])
            + conv(ENCODER_WIDTHS[2], c * self.n_objects);
        n += conv(self.transition_in(), self.transition_width) + conv(self.transition_width, c);
        match self.variant {
            Variant::Posnet => {
                n += dense(cells * (c + 2), self.readout_hidden) + dense(self.readout_hidden, 2);
            }
            _ => {
                n += 2 * dense(cells * c, k);
            }
        }
        if self.variant == Variant::Interpnet {
            n += dense(cells * c, 2);
        }
        if self.regress_angular_velocity {
            n += dense(cells * c, 3);
        }
        n
    }
}

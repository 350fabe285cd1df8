//! Training and evaluation windows cut from a record.
//!
//! A window starting at `s` spans frames `s..s+T0+T`. The encoder sees
//! frames `s+1..=s+T0`; target `k` (time `k`) is frame `s+T0+k`, so time 0
//! is the last observed frame.

use rand::Rng;

use super::{DatasetError, SequenceRecord};
use crate::gradcore::Tensor;
use crate::optics::Image;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WindowMode {
    TrainRandom,
    EvalFixed,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainingWindow {
    pub start: usize,
    /// `H x W x 3T0`, values in `[0, 1]`, oldest frame first.
    pub input: Tensor,
    /// `[step][object]` pixel targets.
    pub positions: Vec<Vec<[f64; 2]>>,
    pub angular_velocities: Vec<Vec<[f64; 3]>>,
    /// Frame at the last target time, `H x W x 3`.
    pub final_frame: Option<Tensor>,
}

impl TrainingWindow {
    pub fn horizon(&self) -> usize {
        self.positions.len()
    }
}

/// Number of valid window starts.
pub fn window_starts(len: usize, t0: usize, horizon: usize) -> usize {
    (len + 1).saturating_sub(t0 + horizon)
}

pub fn stack_frames(frames: &[Image]) -> Tensor {
    let (w, h) = (frames[0].width, frames[0].height);
    let c = 3 * frames.len();
    let mut data = vec![0.0; h * w * c];
    for (f, img) in frames.iter().enumerate() {
        for p in 0..h * w {
            for k in 0..3 {
                data[p * c + 3 * f + k] = img.data[p * 3 + k] as f64 / 255.0;
            }
        }
    }
    Tensor::new(&[h, w, c], data).expect("frame stack shape")
}

pub fn sample_window<R: Rng + ?Sized>(
    record: &SequenceRecord,
    t0: usize,
    horizon: usize,
    mode: WindowMode,
    with_final: bool,
    rng: &mut R,
) -> Result<TrainingWindow, DatasetError> {
    let starts = window_starts(record.len(), t0, horizon);
    if starts == 0 || t0 == 0 || horizon == 0 {
        return Err(DatasetError::TooShort { needed: t0 + horizon, available: record.len() });
    }
    let start = match mode {
        WindowMode::EvalFixed => 0,
        WindowMode::TrainRandom => rng.random_range(0..starts),
    };
    Ok(window_at(record, t0, horizon, start, with_final))
}

pub fn window_at(record: &SequenceRecord, t0: usize, horizon: usize, start: usize, with_final: bool) -> TrainingWindow {
    let zero = start + t0;
    let last = zero + horizon - 1;
    TrainingWindow {
        start,
        input: stack_frames(&record.frames[start + 1..=zero]),
        positions: record.positions[zero..=last].to_vec(),
        angular_velocities: record.angular_velocities[zero..=last].to_vec(),
        final_frame: with_final.then(|| stack_frames(std::slice::from_ref(&record.frames[last]))),
    }
}

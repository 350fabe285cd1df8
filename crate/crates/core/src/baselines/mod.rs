//! Least-squares polynomial extrapolation of observed screen positions.
//!
//! The fit sees ground-truth positions of the first `fit_len` frames of a
//! window, starting with the first frame the networks observe. Local time
//! `0` is that frame, so prediction step `k` sits at local time
//! `k + t0 - 1`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::datasets::SequenceRecord;
use crate::predictor::{PredictedRollout, Prediction};

pub const DEFAULT_FIT_LEN: usize = 10;

#[derive(Debug, Error, PartialEq)]
pub enum BaselineError {
    #[error("degree must be 1 or 2, got {0}")]
    Degree(usize),
    #[error("need at least {needed} points for the fit, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("sequence has {available} frames, window needs {needed}")]
    TooShort { needed: usize, available: usize },
}

/// Polynomial in the frame index, one coefficient vector per coordinate,
/// lowest order first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyFit {
    pub degree: usize,
    pub coefficients: Vec<Vec<f64>>,
    pub fit_window: usize,
}

/// Least-squares coefficients of `values` against times `0..n`.
pub fn fit_series(values: &[f64], degree: usize) -> Result<Vec<f64>, BaselineError> {
    if !(1..=2).contains(&degree) {
        return Err(BaselineError::Degree(degree));
    }
    let n = values.len();
    if n < degree + 1 {
        return Err(BaselineError::TooFewPoints { needed: degree + 1, got: n });
    }
    let k = degree + 1;
    let design = DMatrix::from_fn(n, k, |i, j| (i as f64).powi(j as i32));
    let normal = design.transpose() * &design;
    let rhs = design.transpose() * DVector::from_column_slice(values);
    let sol = normal.cholesky().expect("distinct sample times give a full-rank system").solve(&rhs);
    Ok(sol.iter().copied().collect())
}

pub fn eval_poly(coefficients: &[f64], t: f64) -> f64 {
    coefficients.iter().rev().fold(0.0, |acc, c| acc * t + c)
}

/// Fits each coordinate of `points` (sampled at `t = 0, 1, ...`).
pub fn fit<const D: usize>(points: &[[f64; D]], degree: usize) -> Result<PolyFit, BaselineError> {
    let coefficients = (0..D)
        .map(|d| fit_series(&points.iter().map(|p| p[d]).collect::<Vec<_>>(), degree))
        .collect::<Result<_, _>>()?;
    Ok(PolyFit { degree, coefficients, fit_window: points.len() })
}

impl PolyFit {
    pub fn extrapolate(&self, t: f64) -> Vec<f64> {
        self.coefficients.iter().map(|c| eval_poly(c, t)).collect()
    }

    pub fn extrapolate2(&self, t: f64) -> [f64; 2] {
        [eval_poly(&self.coefficients[0], t), eval_poly(&self.coefficients[1], t)]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyBaseline {
    pub degree: usize,
    #[serde(default = "default_fit_len")]
    pub fit_len: usize,
    #[serde(default = "default_t0")]
    pub t0: usize,
    /// Also extrapolate the angular-velocity stream with the same model.
    #[serde(default)]
    pub fit_angular_velocity: bool,
}

fn default_fit_len() -> usize {
    DEFAULT_FIT_LEN
}
fn default_t0() -> usize {
    4
}

impl PolyBaseline {
    pub fn linear() -> Self {
        Self { degree: 1, fit_len: DEFAULT_FIT_LEN, t0: 4, fit_angular_velocity: false }
    }

    pub fn quadratic() -> Self {
        Self { degree: 2, ..Self::linear() }
    }

    pub fn name(&self) -> &'static str {
        match self.degree {
            1 => "linear",
            2 => "quadratic",
            _ => "polynomial",
        }
    }

    /// Frames a window at `start` must have for this baseline.
    pub fn frames_needed(&self, horizon: usize) -> usize {
        (1 + self.fit_len).max(self.t0 + horizon)
    }

    /// Predictions for the window at `start`, aligned with the network
    /// steps `0..horizon`.
    pub fn predict_window(
        &self,
        record: &SequenceRecord,
        start: usize,
        horizon: usize,
    ) -> Result<PredictedRollout, BaselineError> {
        let needed = start + self.frames_needed(horizon);
        if record.len() < needed {
            return Err(BaselineError::TooShort { needed, available: record.len() });
        }
        let obs = start + 1..start + 1 + self.fit_len;
        let n_obj = record.n_objects();
        let mut pos_fits = vec![];
        let mut ang_fits = vec![];
        for o in 0..n_obj {
            let pts: Vec<[f64; 2]> = record.positions[obs.clone()].iter().map(|s| s[o]).collect();
            pos_fits.push(fit(&pts, self.degree)?);
            if self.fit_angular_velocity {
                let w: Vec<[f64; 3]> = record.angular_velocities[obs.clone()].iter().map(|s| s[o]).collect();
                ang_fits.push(fit(&w, self.degree)?);
            }
        }
        let steps = (0..horizon)
            .map(|k| {
                let t = (k + self.t0 - 1) as f64;
                (0..n_obj)
                    .map(|o| Prediction {
                        position: pos_fits[o].extrapolate2(t),
                        covariance: None,
                        angular_velocity: ang_fits.get(o).map(|f| {
                            let v = f.extrapolate(t);
                            [v[0], v[1], v[2]]
                        }),
                    })
                    .collect()
            })
            .collect();
        Ok(PredictedRollout { steps, final_position: None })
    }
}

//! Pixel error, angular-velocity RMSE and perplexity over held-out windows.
//!
//! "Error at horizon T" is the error at prediction step index `T - 1`.
//! Every sequence is rolled out once to the longest horizon; shorter
//! horizons read the prefix.

mod metrics;
mod report;

use rayon::prelude::*;
use thiserror::Error;

pub use metrics::{angvel_rmse, gaussian_log_density, log_perplexity, log_perplexity_from_log, pixel_error};
pub use report::{HorizonMetrics, MetricsReport, Report, SequenceMetrics, SkippedSequence, StepMetrics, REPORT_CSV, REPORT_JSON};

use crate::baselines::{BaselineError, PolyBaseline};
use crate::datasets::{window_at, window_starts, Dataset, DatasetError, SequenceRecord, Split};
use crate::predictor::{Model, PredictedRollout, PredictorError};
use crate::training::{model_input, with_final, TrainError};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("misaligned streams: {0}")]
    Mismatch(String),
    #[error("density must be positive, got {0}")]
    NonPositiveDensity(f64),
    #[error("nothing to evaluate: {0}")]
    Empty(String),
    #[error("{path}: {source}")]
    Io { path: std::path::PathBuf, source: std::io::Error },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Predictor(#[from] PredictorError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error(transparent)]
    Train(#[from] TrainError),
}

/// Anything that predicts a fixed-start window.
#[derive(Clone, Copy, Debug)]
pub enum Method<'a> {
    Network(&'a Model),
    Baseline(&'a PolyBaseline),
}

impl Method<'_> {
    pub fn name(&self) -> String {
        match self {
            Method::Network(m) => m.config.variant.name().to_string(),
            Method::Baseline(b) => b.name().to_string(),
        }
    }

    fn t0(&self) -> usize {
        match self {
            Method::Network(m) => m.config.t0,
            Method::Baseline(b) => b.t0,
        }
    }

    fn frames_needed(&self, horizon: usize) -> usize {
        match self {
            Method::Network(m) => m.config.t0 + horizon,
            Method::Baseline(b) => b.frames_needed(horizon),
        }
    }

    fn config_echo(&self) -> serde_json::Value {
        match self {
            Method::Network(m) => serde_json::to_value(&m.config),
            Method::Baseline(b) => serde_json::to_value(b),
        }
        .expect("config serializes")
    }

    /// Rollout of the window starting at frame 0.
    pub fn predict(&self, record: &SequenceRecord, horizon: usize) -> Result<PredictedRollout, EvalError> {
        match self {
            Method::Network(m) => {
                let w = window_at(record, m.config.t0, horizon, 0, with_final(&m.config));
                Ok(m.predict(&model_input(m, &w)?, horizon)?)
            }
            Method::Baseline(b) => Ok(b.predict_window(record, 0, horizon)?),
        }
    }
}

/// Evaluates `method` on `(index, record)` pairs. `horizons` are 1-based
/// step counts; the rollout runs to the largest.
pub fn evaluate(
    method: Method<'_>,
    records: &[(usize, SequenceRecord)],
    horizons: &[usize],
    split: &str,
) -> Result<MetricsReport, EvalError> {
    let max_h = *horizons.iter().max().ok_or_else(|| EvalError::Empty("no horizons".into()))?;
    if horizons.contains(&0) {
        return Err(EvalError::Empty("horizons are 1-based".into()));
    }
    let t0 = method.t0();
    let mut skipped = vec![];
    let mut usable = vec![];
    for (idx, rec) in records {
        let needed = method.frames_needed(max_h);
        if rec.len() < needed || window_starts(rec.len(), t0, max_h) == 0 {
            skipped.push(SkippedSequence { index: *idx, reason: format!("{} frames, need {needed}", rec.len()) });
        } else {
            usable.push((*idx, rec));
        }
    }
    if usable.is_empty() {
        return Err(EvalError::Empty(format!("all {} sequences too short for horizon {max_h}", records.len())));
    }
    let rollouts: Vec<PredictedRollout> =
        usable.par_iter().map(|(_, rec)| method.predict(rec, max_h)).collect::<Result<_, _>>()?;

    let truth_pos: Vec<Vec<Vec<[f64; 2]>>> =
        usable.iter().map(|(_, r)| r.positions[t0..t0 + max_h].to_vec()).collect();
    let pred_pos: Vec<Vec<Vec<[f64; 2]>>> =
        rollouts.iter().map(|r| r.steps.iter().map(|s| s.iter().map(|o| o.position).collect()).collect()).collect();
    let px = pixel_error(&pred_pos, &truth_pos)?;

    let has_angvel = rollouts[0].steps[0][0].angular_velocity.is_some();
    let rmse = if has_angvel {
        let truth: Vec<Vec<Vec<[f64; 3]>>> =
            usable.iter().map(|(_, r)| r.angular_velocities[t0..t0 + max_h].to_vec()).collect();
        let pred: Vec<Vec<Vec<[f64; 3]>>> = rollouts
            .iter()
            .map(|r| r.steps.iter().map(|s| s.iter().map(|o| o.angular_velocity.unwrap_or([0.0; 3])).collect()).collect())
            .collect();
        Some(angvel_rmse(&pred, &truth)?)
    } else {
        None
    };

    let probabilistic = rollouts[0].steps[0][0].covariance.is_some();
    let mut per_sequence = vec![];
    let mut log_ppl = probabilistic.then(|| vec![0.0; max_h]);
    let mut mean_det = probabilistic.then(|| vec![0.0; max_h]);
    for (((idx, _), roll), (pp, tp)) in usable.iter().zip(&rollouts).zip(pred_pos.iter().zip(&truth_pos)) {
        let err: Vec<f64> = pixel_error(std::slice::from_ref(pp), std::slice::from_ref(tp))?;
        let mut dets = None;
        if probabilistic {
            let mut d = vec![];
            for (k, step) in roll.steps.iter().enumerate() {
                let mut det_sum = 0.0;
                let mut logs = vec![];
                for (o, obj) in step.iter().enumerate() {
                    let c = obj.covariance.ok_or_else(|| EvalError::Mismatch("missing covariance".into()))?;
                    det_sum += c[0] * c[3] - c[1] * c[2];
                    logs.push(gaussian_log_density(tp[k][o], obj.position, c));
                }
                d.push(det_sum / step.len() as f64);
                log_ppl.as_mut().unwrap()[k] += log_perplexity_from_log(&logs)?;
            }
            for (m, v) in mean_det.as_mut().unwrap().iter_mut().zip(&d) {
                *m += v;
            }
            dets = Some(d);
        }
        per_sequence.push(SequenceMetrics { index: *idx, pixel_error: err, cov_det: dets });
    }
    let n = usable.len() as f64;
    for v in log_ppl.iter_mut().chain(mean_det.iter_mut()).flatten() {
        *v /= n;
    }

    let final_position_error = match rollouts[0].final_position {
        Some(_) => {
            let pred: Vec<Vec<Vec<[f64; 2]>>> =
                rollouts.iter().map(|r| vec![r.final_position.clone().unwrap_or_default()]).collect();
            let truth: Vec<Vec<Vec<[f64; 2]>>> = truth_pos.iter().map(|t| vec![t[max_h - 1].clone()]).collect();
            Some(pixel_error(&pred, &truth)?[0])
        }
        None => None,
    };

    let steps: Vec<StepMetrics> = (0..max_h)
        .map(|k| StepMetrics {
            step: k + 1,
            pixel_error: px[k],
            angvel_rmse: rmse.as_ref().map(|r| r[k]),
            log_perplexity: log_ppl.as_ref().map(|r| r[k]),
            mean_cov_det: mean_det.as_ref().map(|r| r[k]),
        })
        .collect();
    let mut hs = horizons.to_vec();
    hs.sort_unstable();
    hs.dedup();
    let horizon_rows = hs
        .iter()
        .map(|&h| {
            let s = &steps[h - 1];
            HorizonMetrics { horizon: h, pixel_error: s.pixel_error, angvel_rmse: s.angvel_rmse, log_perplexity: s.log_perplexity }
        })
        .collect();
    Ok(MetricsReport {
        method: method.name(),
        split: split.to_string(),
        image_size: usable[0].1.image_size(),
        t0,
        max_horizon: max_h,
        sequences: usable.len(),
        skipped,
        horizons: horizon_rows,
        steps,
        final_position_error,
        per_sequence,
        config: method.config_echo(),
    })
}

/// Loads a split and evaluates it.
pub fn evaluate_dataset(
    method: Method<'_>,
    dataset: &Dataset,
    split: Split,
    horizons: &[usize],
) -> Result<MetricsReport, EvalError> {
    if let Method::Network(m) = method {
        crate::training::check_compatible(&dataset.manifest, &m.config)?;
    }
    let idx = dataset.indices(split).to_vec();
    let recs = dataset.load_split(split)?;
    let pairs: Vec<(usize, SequenceRecord)> = idx.into_iter().zip(recs).collect();
    evaluate(method, &pairs, horizons, split.name())
}

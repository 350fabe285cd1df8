use serde::{Deserialize, Serialize};

use super::TrainError;
use crate::datasets::TrainingWindow;
use crate::gradcore::ops::det2;
use crate::gradcore::{gaussian_nll, Tape, Tensor, Var};
use crate::predictor::{RolloutOutput, Variant};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    pub variant: Variant,
    #[serde(default = "one")]
    pub angular_weight: f64,
    /// Weight of the summed covariance determinant; probnet only.
    #[serde(default = "default_det_reg")]
    pub det_reg_lambda: f64,
    pub horizon: usize,
}

fn one() -> f64 {
    1.0
}
fn default_det_reg() -> f64 {
    0.01
}

impl LossConfig {
    pub fn new(variant: Variant, horizon: usize) -> Self {
        Self { variant, angular_weight: 1.0, det_reg_lambda: default_det_reg(), horizon }
    }
}

/// Ground truth for one window, `[step][object]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Targets {
    pub positions: Vec<Vec<[f64; 2]>>,
    pub angular_velocities: Vec<Vec<[f64; 3]>>,
}

impl Targets {
    pub fn from_window(w: &TrainingWindow) -> Self {
        Self { positions: w.positions.clone(), angular_velocities: w.angular_velocities.clone() }
    }
}

fn sq_dist<'t>(tape: &'t Tape, pred: Var<'t>, truth: &[f64]) -> Result<Var<'t>, TrainError> {
    let t = tape.constant(Tensor::vector(truth.to_vec()));
    Ok(pred.sub(t)?.square().sum())
}

/// Scalar training loss of one rollout against its targets.
///
/// Per object: `(1/T) sum_t l_t + w_a (1/T) sum_t |w_hat - w|^2`, where
/// `l_t` is the squared pixel error or the Gaussian NLL. Probnet adds
/// `lambda * sum_t det Sigma_t`, interpnet adds the squared error of the
/// final-position head. The result is averaged over objects.
pub fn compute_loss<'t>(
    tape: &'t Tape,
    out: &RolloutOutput<'t>,
    targets: &Targets,
    config: &LossConfig,
) -> Result<Var<'t>, TrainError> {
    let steps = out.steps.len();
    if steps == 0 || steps != targets.positions.len() {
        return Err(TrainError::Mismatch(format!(
            "{steps} predicted steps against {} targets",
            targets.positions.len()
        )));
    }
    let n_obj = out.steps[0].len();
    let inv_t = 1.0 / steps as f64;
    let mut total: Option<Var<'t>> = None;
    let mut push = |v: Var<'t>| -> Result<(), TrainError> {
        total = Some(match total {
            Some(acc) => acc.add(v)?,
            None => v,
        });
        Ok(())
    };
    for (t, objs) in out.steps.iter().enumerate() {
        if objs.len() != n_obj || targets.positions[t].len() != n_obj {
            return Err(TrainError::Mismatch(format!("object count differs at step {t}")));
        }
        for (o, pred) in objs.iter().enumerate() {
            let y = targets.positions[t][o];
            let term = match pred.cov {
                Some(cov) => {
                    let yv = tape.constant(Tensor::vector(y.to_vec()));
                    let nll = gaussian_nll(yv, pred.mean, cov)?.scale(inv_t);
                    nll.add(det2(cov)?.scale(config.det_reg_lambda))?
                }
                None => sq_dist(tape, pred.mean, &y)?.scale(inv_t),
            };
            push(term)?;
            if let Some(w) = pred.angular_velocity {
                if config.angular_weight != 0.0 {
                    let truth = targets
                        .angular_velocities
                        .get(t)
                        .and_then(|s| s.get(o))
                        .ok_or_else(|| TrainError::Mismatch(format!("missing angular velocity at step {t}")))?;
                    push(sq_dist(tape, w, truth)?.scale(inv_t * config.angular_weight))?;
                }
            }
        }
    }
    if let Some(finals) = &out.final_position {
        let last = &targets.positions[steps - 1];
        for (o, f) in finals.iter().enumerate() {
            push(sq_dist(tape, *f, &last[o])?)?;
        }
    }
    Ok(total.expect("at least one term").scale(1.0 / n_obj as f64))
}

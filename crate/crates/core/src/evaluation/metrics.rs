use std::f64::consts::PI;

use super::EvalError;

fn check_aligned<T, U>(pred: &[Vec<Vec<T>>], truth: &[Vec<Vec<U>>]) -> Result<usize, EvalError> {
    if pred.len() != truth.len() || pred.is_empty() {
        return Err(EvalError::Mismatch(format!("{} predicted sequences against {}", pred.len(), truth.len())));
    }
    let steps = pred[0].len();
    for (i, (p, t)) in pred.iter().zip(truth).enumerate() {
        if p.len() != steps || t.len() != steps {
            return Err(EvalError::Mismatch(format!("sequence {i}: step counts {} / {} / {steps}", p.len(), t.len())));
        }
        for (k, (a, b)) in p.iter().zip(t).enumerate() {
            if a.len() != b.len() || a.is_empty() {
                return Err(EvalError::Mismatch(format!("sequence {i} step {k}: object counts {} / {}", a.len(), b.len())));
            }
        }
    }
    Ok(steps)
}

fn per_step<const D: usize>(
    pred: &[Vec<Vec<[f64; D]>>],
    truth: &[Vec<Vec<[f64; D]>>],
) -> Result<Vec<(f64, usize)>, EvalError> {
    let steps = check_aligned(pred, truth)?;
    let mut acc = vec![(0.0, 0usize); steps];
    for (p, t) in pred.iter().zip(truth) {
        for (k, (a, b)) in p.iter().zip(t).enumerate() {
            for (x, y) in a.iter().zip(b) {
                let d2: f64 = x.iter().zip(y).map(|(u, v)| (u - v) * (u - v)).sum();
                acc[k].0 += d2.sqrt();
                acc[k].1 += 1;
            }
        }
    }
    Ok(acc)
}

/// Mean Euclidean pixel distance per step, over sequences and objects.
/// Inputs are `[sequence][step][object]`.
pub fn pixel_error(pred: &[Vec<Vec<[f64; 2]>>], truth: &[Vec<Vec<[f64; 2]>>]) -> Result<Vec<f64>, EvalError> {
    Ok(per_step(pred, truth)?.into_iter().map(|(s, n)| s / n as f64).collect())
}

/// Root mean squared angular-velocity error per step.
pub fn angvel_rmse(pred: &[Vec<Vec<[f64; 3]>>], truth: &[Vec<Vec<[f64; 3]>>]) -> Result<Vec<f64>, EvalError> {
    let steps = check_aligned(pred, truth)?;
    let mut acc = vec![(0.0, 0usize); steps];
    for (p, t) in pred.iter().zip(truth) {
        for (k, (a, b)) in p.iter().zip(t).enumerate() {
            for (x, y) in a.iter().zip(b) {
                acc[k].0 += x.iter().zip(y).map(|(u, v)| (u - v) * (u - v)).sum::<f64>();
                acc[k].1 += 1;
            }
        }
    }
    Ok(acc.into_iter().map(|(s, n)| (s / n as f64).sqrt()).collect())
}

/// Natural log of `2^(-E[log2 p])`, i.e. `-E[ln p]`.
pub fn log_perplexity(densities: &[f64]) -> Result<f64, EvalError> {
    if densities.is_empty() {
        return Err(EvalError::Mismatch("no densities".into()));
    }
    if let Some(&bad) = densities.iter().find(|d| !(**d > 0.0)) {
        return Err(EvalError::NonPositiveDensity(bad));
    }
    let mean_log2 = densities.iter().map(|d| d.log2()).sum::<f64>() / densities.len() as f64;
    Ok(-mean_log2 * std::f64::consts::LN_2)
}

/// Same quantity from log-densities, which avoids underflow far in the
/// tails.
pub fn log_perplexity_from_log(log_densities: &[f64]) -> Result<f64, EvalError> {
    if log_densities.is_empty() {
        return Err(EvalError::Mismatch("no densities".into()));
    }
    Ok(-log_densities.iter().sum::<f64>() / log_densities.len() as f64)
}

/// `ln N(y; mu, sigma)` for a 2D normal with row-major `sigma`.
pub fn gaussian_log_density(y: [f64; 2], mu: [f64; 2], sigma: [f64; 4]) -> f64 {
    let det = sigma[0] * sigma[3] - sigma[1] * sigma[2];
    let d = [y[0] - mu[0], y[1] - mu[1]];
    let q = (sigma[3] * d[0] * d[0] - (sigma[1] + sigma[2]) * d[0] * d[1] + sigma[0] * d[1] * d[1]) / det;
    -(2.0 * PI).ln() - 0.5 * det.ln() - 0.5 * q
}

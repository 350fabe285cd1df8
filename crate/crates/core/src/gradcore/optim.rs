use super::{ParamSet, Tensor};

/// Running mean of squared gradients, one accumulator per parameter tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct RmsPropState {
    pub mean_square: Vec<Vec<f64>>,
    pub decay: f64,
    pub epsilon: f64,
    pub learning_rate: f64,
}

impl RmsPropState {
    pub const DEFAULT_DECAY: f64 = 0.9;
    pub const DEFAULT_EPSILON: f64 = 1e-8;

    pub fn new(params: &ParamSet, learning_rate: f64) -> Self {
        Self::with_hyper(params, learning_rate, Self::DEFAULT_DECAY, Self::DEFAULT_EPSILON)
    }

    pub fn with_hyper(params: &ParamSet, learning_rate: f64, decay: f64, epsilon: f64) -> Self {
        assert!(decay > 0.0 && decay < 1.0, "decay must lie in (0, 1)");
        assert!(epsilon > 0.0 && learning_rate > 0.0);
        Self {
            mean_square: params.tensors().iter().map(|t| vec![0.0; t.len()]).collect(),
            decay,
            epsilon,
            learning_rate,
        }
    }
}

/// One RMSProp update:
/// `ms = decay * ms + (1 - decay) * g^2`, `p -= lr * g / sqrt(ms + eps)`.
pub fn rmsprop_step(params: &mut ParamSet, grads: &[Tensor], state: &mut RmsPropState) {
    assert_eq!(params.len(), grads.len(), "one gradient per parameter tensor");
    assert_eq!(params.len(), state.mean_square.len(), "optimizer state misaligned");
    let (decay, eps, lr) = (state.decay, state.epsilon, state.learning_rate);
    for ((p, g), ms) in params
        .tensors_mut()
        .iter_mut()
        .zip(grads)
        .zip(state.mean_square.iter_mut())
    {
        assert_eq!(p.len(), g.len());
        for ((pv, gv), m) in p.data_mut().iter_mut().zip(g.data()).zip(ms.iter_mut()) {
            *m = decay * *m + (1.0 - decay) * gv * gv;
            *pv -= lr * gv / (*m + eps).sqrt();
        }
    }
}

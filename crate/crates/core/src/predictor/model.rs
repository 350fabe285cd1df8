use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{ModelConfig, Variant, ENCODER_WIDTHS};
use super::PredictorError;
use crate::gradcore::ops::{avg_pool2, concat, concat_channels, sum_all};
use crate::gradcore::{
    affine, conv2d, load_checkpoint, read_checkpoint, rotation_covariance, save_checkpoint, scaled_sigmoid,
    write_checkpoint, BoundParams, ParamSet, Tape, Tensor, Var, EIGEN_OFFSET, EIGEN_SCALE,
};

/// Standard deviation multiplier for the position and angular velocity
/// readouts, relative to a unit-variance fan-in init.
const READOUT_INIT: f64 = 0.1;

/// Hidden state on a tape: one distributed tensor and one concentrated
/// vector per object. For probabilistic models `p = (mu_x, mu_y, beta1,
/// beta2, theta)` with `mu` in pixels.
#[derive(Clone, Debug)]
pub struct NetState<'t> {
    pub s: Vec<Var<'t>>,
    pub p: Vec<Var<'t>>,
}

/// Decoded output for one object at one step.
#[derive(Clone, Copy, Debug)]
pub struct ObjectOutput<'t> {
    /// Position (or mean) in pixels.
    pub mean: Var<'t>,
    /// `2 x 2` covariance for probabilistic models.
    pub cov: Option<Var<'t>>,
    pub angular_velocity: Option<Var<'t>>,
}

#[derive(Clone, Debug)]
pub struct RolloutOutput<'t> {
    /// `[step][object]`.
    pub steps: Vec<Vec<ObjectOutput<'t>>>,
    /// InterpNet: predicted final position per object, decoded from `h_0`.
    pub final_position: Option<Vec<Var<'t>>>,
}

/// Plain-value prediction for one object at one step.
#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub position: [f64; 2],
    pub covariance: Option<[f64; 4]>,
    pub angular_velocity: Option<[f64; 3]>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PredictedRollout {
    pub steps: Vec<Vec<Prediction>>,
    pub final_position: Option<Vec<[f64; 2]>>,
}

#[derive(Clone, Debug)]
pub struct Model {
    pub config: ModelConfig,
    pub params: ParamSet,
}

fn he(shape: &[usize], fan_in: usize, rng: &mut ChaCha8Rng) -> Tensor {
    Tensor::randn(shape, (2.0 / fan_in as f64).sqrt(), rng)
}

fn readout(shape: &[usize], fan_in: usize, rng: &mut ChaCha8Rng) -> Tensor {
    Tensor::randn(shape, READOUT_INIT / (fan_in as f64).sqrt(), rng)
}

impl Model {
    pub fn init(config: ModelConfig, seed: u64) -> Result<Self, PredictorError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamSet::new();
        let c = config.channels;
        let cells = config.grid() * config.grid();
        let conv = |params: &mut ParamSet, name: &str, cin: usize, cout: usize, rng: &mut ChaCha8Rng| {
            params.insert(format!("{name}.w"), he(&[3, 3, cin, cout], 9 * cin, rng));
            params.insert(format!("{name}.b"), Tensor::zeros(&[cout]));
        };
        let widths = [config.input_channels(), ENCODER_WIDTHS[0], ENCODER_WIDTHS[1], ENCODER_WIDTHS[2], c * config.n_objects];
        for i in 0..4 {
            conv(&mut params, &format!("enc.conv{}", i + 1), widths[i], widths[i + 1], &mut rng);
        }
        conv(&mut params, "trans.s1", config.transition_in(), config.transition_width, &mut rng);
        conv(&mut params, "trans.s2", config.transition_width, c, &mut rng);
        let dense = |params: &mut ParamSet, name: &str, fin: usize, fout: usize, rng: &mut ChaCha8Rng, hidden: bool| {
            let w = if hidden { he(&[fin, fout], fin, rng) } else { readout(&[fin, fout], fin, rng) };
            params.insert(format!("{name}.w"), w);
            params.insert(format!("{name}.b"), Tensor::zeros(&[fout]));
        };
        let k = config.variant.p_len();
        match config.variant {
            Variant::Posnet => {
                dense(&mut params, "trans.p1", cells * (c + 2), config.readout_hidden, &mut rng, true);
                dense(&mut params, "trans.p2", config.readout_hidden, 2, &mut rng, false);
            }
            _ => {
                dense(&mut params, "head.p0", cells * c, k, &mut rng, false);
                dense(&mut params, "trans.p", cells * c, k, &mut rng, false);
            }
        }
        if config.variant == Variant::Interpnet {
            dense(&mut params, "head.final", cells * c, 2, &mut rng, false);
        }
        if config.regress_angular_velocity {
            dense(&mut params, "head.angvel", cells * c, 3, &mut rng, false);
        }
        debug_assert_eq!(params.scalar_count(), config.parameter_count());
        Ok(Self { config, params })
    }

    pub fn parameter_count(&self) -> usize {
        self.params.scalar_count()
    }

    fn check_input(&self, input: &Tensor) -> Result<(), PredictorError> {
        let n = self.config.image_size;
        let want = [n, n, self.config.input_channels()];
        if input.shape() != want {
            return Err(PredictorError::Shape(format!("encoder input {:?}, expected {:?}", input.shape(), want)));
        }
        Ok(())
    }

    /// Encoder features before splitting, `H' x W' x (C * n_objects)`.
    pub fn encode_features<'t>(&self, bp: &BoundParams<'t>, input: Var<'t>) -> Result<Var<'t>, PredictorError> {
        let mut x = input;
        for i in 1..=4 {
            x = conv2d(x, bp.var(&format!("enc.conv{i}.w")), bp.var(&format!("enc.conv{i}.b")))?.relu();
            if i < 4 {
                x = avg_pool2(x)?;
            }
        }
        Ok(x)
    }

    /// Builds `h_0` from the stacked input frames.
    pub fn encode<'t>(&self, tape: &'t Tape, bp: &BoundParams<'t>, input: &Tensor) -> Result<NetState<'t>, PredictorError> {
        self.check_input(input)?;
        let features = self.encode_features(bp, tape.constant(input.clone()))?;
        let c = self.config.channels;
        let s = (0..self.config.n_objects).map(|i| features.channels(i * c, c)).collect::<Result<Vec<_>, _>>()?;
        let p = s.iter().map(|si| self.initial_p(tape, bp, *si)).collect::<Result<Vec<_>, _>>()?;
        Ok(NetState { s, p })
    }

    fn initial_p<'t>(&self, tape: &'t Tape, bp: &BoundParams<'t>, s: Var<'t>) -> Result<Var<'t>, PredictorError> {
        let (gain, center) = (self.config.position_gain(), self.config.image_center());
        if self.config.variant == Variant::Posnet {
            return self.direct_readout(tape, bp, s);
        }
        let out = affine(s.flatten(), bp.var("head.p0.w"), bp.var("head.p0.b"))?;
        let mu = out.slice(0, 2)?.scale(gain).shift(center);
        if self.config.variant.is_probabilistic() {
            Ok(concat(&[mu, out.slice(2, 3)?])?)
        } else {
            Ok(mu)
        }
    }

    /// `s` with two extra channels holding column and row coordinates in `[-1, 1]`.
    pub fn aug_xy<'t>(&self, tape: &'t Tape, s: Var<'t>) -> Result<Var<'t>, PredictorError> {
        let shape = s.shape();
        let (h, w) = (shape[0], shape[1]);
        let coord = |i: usize, n: usize| if n > 1 { -1.0 + 2.0 * i as f64 / (n - 1) as f64 } else { 0.0 };
        let mut data = Vec::with_capacity(h * w * 2);
        for r in 0..h {
            for col in 0..w {
                data.push(coord(col, w));
                data.push(coord(r, h));
            }
        }
        let xy = tape.constant(Tensor::new(&[h, w, 2], data)?);
        Ok(concat_channels(&[s, xy])?)
    }

    fn direct_readout<'t>(&self, tape: &'t Tape, bp: &BoundParams<'t>, s: Var<'t>) -> Result<Var<'t>, PredictorError> {
        let (gain, center) = (self.config.position_gain(), self.config.image_center());
        let hidden = affine(self.aug_xy(tape, s)?.flatten(), bp.var("trans.p1.w"), bp.var("trans.p1.b"))?.relu();
        let out = affine(hidden, bp.var("trans.p2.w"), bp.var("trans.p2.b"))?;
        Ok(out.scale(gain).shift(center))
    }

    /// Shared state update `phi_s` on an already assembled input.
    fn phi_s<'t>(&self, bp: &BoundParams<'t>, x: Var<'t>) -> Result<Var<'t>, PredictorError> {
        let h = conv2d(x, bp.var("trans.s1.w"), bp.var("trans.s1.b"))?.relu();
        Ok(conv2d(h, bp.var("trans.s2.w"), bp.var("trans.s2.b"))?)
    }

    fn p_increment<'t>(&self, bp: &BoundParams<'t>, s: Var<'t>, p: Var<'t>) -> Result<Var<'t>, PredictorError> {
        let gain = self.config.position_gain();
        let out = affine(s.flatten(), bp.var("trans.p.w"), bp.var("trans.p.b"))?;
        let inc = if self.config.variant.is_probabilistic() {
            concat(&[out.slice(0, 2)?.scale(gain), out.slice(2, 3)?])?
        } else {
            out.scale(gain)
        };
        Ok(p.add(inc)?)
    }

    /// Single-object incremental step: `(phi_s(s), p + phi_p(s))`.
    pub fn transition_incremental<'t>(&self, bp: &BoundParams<'t>, state: &NetState<'t>) -> Result<NetState<'t>, PredictorError> {
        if state.s.len() != 1 {
            return Err(PredictorError::Shape(format!("incremental step takes one object, got {}", state.s.len())));
        }
        let s1 = self.phi_s(bp, state.s[0])?;
        let p1 = self.p_increment(bp, state.s[0], state.p[0])?;
        Ok(NetState { s: vec![s1], p: vec![p1] })
    }

    /// Single-object direct step: `p` is read out from `aug_xy(s_{t+1})`.
    pub fn transition_direct<'t>(&self, tape: &'t Tape, bp: &BoundParams<'t>, state: &NetState<'t>) -> Result<NetState<'t>, PredictorError> {
        let s = state.s.iter().map(|si| self.phi_s(bp, *si)).collect::<Result<Vec<_>, _>>()?;
        let p = s.iter().map(|si| self.direct_readout(tape, bp, *si)).collect::<Result<Vec<_>, _>>()?;
        Ok(NetState { s, p })
    }

    /// One step for any object count: each object's tensor is updated from
    /// its own state and the sum of the other objects' states.
    pub fn transition<'t>(&self, tape: &'t Tape, bp: &BoundParams<'t>, state: &NetState<'t>) -> Result<NetState<'t>, PredictorError> {
        let n = state.s.len();
        let mut s_next = Vec::with_capacity(n);
        for i in 0..n {
            let x = if n > 1 {
                let others: Vec<Var<'t>> = (0..n).filter(|&j| j != i).map(|j| state.s[j]).collect();
                let sum = sum_all(&others)?.expect("at least one other object");
                concat_channels(&[state.s[i], sum])?
            } else {
                state.s[i]
            };
            s_next.push(self.phi_s(bp, x)?);
        }
        let p_next = if self.config.variant == Variant::Posnet {
            s_next.iter().map(|si| self.direct_readout(tape, bp, *si)).collect::<Result<Vec<_>, _>>()?
        } else {
            (0..n).map(|i| self.p_increment(bp, state.s[i], state.p[i])).collect::<Result<Vec<_>, _>>()?
        };
        Ok(NetState { s: s_next, p: p_next })
    }

    /// [`Self::transition`] restricted to two or more objects.
    pub fn transition_multi<'t>(&self, tape: &'t Tape, bp: &BoundParams<'t>, state: &NetState<'t>) -> Result<NetState<'t>, PredictorError> {
        if state.s.len() < 2 {
            return Err(PredictorError::Shape(format!("multi-object step needs two or more objects, got {}", state.s.len())));
        }
        self.transition(tape, bp, state)
    }

    pub fn decode<'t>(&self, bp: &BoundParams<'t>, state: &NetState<'t>) -> Result<Vec<ObjectOutput<'t>>, PredictorError> {
        let mut out = Vec::with_capacity(state.s.len());
        for (s, p) in state.s.iter().zip(&state.p) {
            let (mean, cov) = if self.config.variant.is_probabilistic() {
                let l1 = scaled_sigmoid(p.at(2)?, EIGEN_SCALE, EIGEN_OFFSET)?;
                let l2 = scaled_sigmoid(p.at(3)?, EIGEN_SCALE, EIGEN_OFFSET)?;
                (p.slice(0, 2)?, Some(rotation_covariance(l1, l2, p.at(4)?)?))
            } else {
                (*p, None)
            };
            let angular_velocity = if self.config.regress_angular_velocity {
                Some(self.regress_angular_velocity(bp, *s)?)
            } else {
                None
            };
            out.push(ObjectOutput { mean, cov, angular_velocity });
        }
        Ok(out)
    }

    pub fn regress_angular_velocity<'t>(&self, bp: &BoundParams<'t>, s: Var<'t>) -> Result<Var<'t>, PredictorError> {
        Ok(affine(s.flatten(), bp.var("head.angvel.w"), bp.var("head.angvel.b"))?)
    }

    /// Encodes once and decodes `horizon` states `h_0 .. h_{horizon-1}`.
    pub fn rollout<'t>(&self, tape: &'t Tape, bp: &BoundParams<'t>, input: &Tensor, horizon: usize) -> Result<RolloutOutput<'t>, PredictorError> {
        if horizon == 0 {
            return Err(PredictorError::Config("horizon must be at least 1".into()));
        }
        let mut state = self.encode(tape, bp, input)?;
        let final_position = if self.config.variant == Variant::Interpnet {
            let (gain, center) = (self.config.position_gain(), self.config.image_center());
            let heads = state
                .s
                .iter()
                .map(|s| Ok(affine(s.flatten(), bp.var("head.final.w"), bp.var("head.final.b"))?.scale(gain).shift(center)))
                .collect::<Result<Vec<_>, PredictorError>>()?;
            Some(heads)
        } else {
            None
        };
        let mut steps = Vec::with_capacity(horizon);
        for t in 0..horizon {
            steps.push(self.decode(bp, &state)?);
            if t + 1 < horizon {
                state = self.transition(tape, bp, &state)?;
            }
        }
        Ok(RolloutOutput { steps, final_position })
    }

    /// Gradient-free rollout returning plain values.
    pub fn predict(&self, input: &Tensor, horizon: usize) -> Result<PredictedRollout, PredictorError> {
        let tape = Tape::new();
        let bp = self.params.bind(&tape);
        let out = self.rollout(&tape, &bp, input, horizon)?;
        let vals = |v: Var<'_>| v.value().data().to_vec();
        let steps = out
            .steps
            .iter()
            .map(|objs| {
                objs.iter()
                    .map(|o| {
                        let m = vals(o.mean);
                        Prediction {
                            position: [m[0], m[1]],
                            covariance: o.cov.map(|c| vals(c).try_into().unwrap()),
                            angular_velocity: o.angular_velocity.map(|a| vals(a).try_into().unwrap()),
                        }
                    })
                    .collect()
            })
            .collect();
        let final_position = out.final_position.map(|f| f.iter().map(|v| vals(*v).try_into().unwrap()).collect());
        Ok(PredictedRollout { steps, final_position })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let meta = serde_json::to_string(&self.config).expect("config serializes");
        write_checkpoint(&self.params, &meta)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, PredictorError> {
        Self::from_checkpoint(read_checkpoint(bytes)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), PredictorError> {
        let meta = serde_json::to_string(&self.config).expect("config serializes");
        Ok(save_checkpoint(path, &self.params, &meta)?)
    }

    pub fn load(path: &Path) -> Result<Self, PredictorError> {
        Self::from_checkpoint(load_checkpoint(path)?)
    }

    fn from_checkpoint(ck: crate::gradcore::Checkpoint) -> Result<Self, PredictorError> {
        let config: ModelConfig = serde_json::from_str(&ck.meta)
            .map_err(|e| PredictorError::Config(format!("checkpoint config: {e}")))?;
        let reference = Model::init(config.clone(), 0)?;
        if reference.params.names() != ck.params.names() {
            return Err(PredictorError::Config("checkpoint tensors do not match its config".into()));
        }
        for ((name, a), b) in reference.params.iter().zip(ck.params.tensors()) {
            if a.shape() != b.shape() {
                return Err(PredictorError::Shape(format!("{name}: {:?} vs {:?}", b.shape(), a.shape())));
            }
        }
        Ok(Self { config, params: ck.params })
    }
}

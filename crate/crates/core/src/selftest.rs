//! Quick internal consistency checks run by `rlab selftest`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::datasets::{decode_sequence, encode_sequence, generate_record, DatasetError, DatasetManifest};
use crate::gradcore::ops::{avg_pool2, det2};
use crate::gradcore::{
    affine, conv2d, gaussian_nll, read_checkpoint, rotation_covariance, scaled_sigmoid,
    CheckpointError, Tape, Tensor, Var, EIGEN_OFFSET, EIGEN_SCALE,
};
use crate::mechanics::{make_bowl, make_flat, resolve_collisions, step, BallState, Family, SimParams, Vec3};
use crate::predictor::{Model, ModelConfig, Variant};
use crate::training::{batch_gradients, fixed_windows, LossConfig};

#[derive(Clone, Debug)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn result(name: &str, passed: bool, detail: String) -> CheckResult {
    CheckResult { name: name.to_string(), passed, detail }
}

type Build = dyn for<'t> Fn(&[Var<'t>]) -> Var<'t>;

fn value(build: &Build, inputs: &[Tensor]) -> f64 {
    let tape = Tape::new();
    let vars: Vec<Var<'_>> = inputs.iter().map(|t| tape.leaf(t.clone())).collect();
    build(&vars).item()
}

/// Worst relative gap between tape gradients and central differences.
pub fn gradient_gap(build: &Build, inputs: &[Tensor], h: f64) -> f64 {
    let tape = Tape::new();
    let vars: Vec<Var<'_>> = inputs.iter().map(|t| tape.leaf(t.clone())).collect();
    let grads = tape.backward(build(&vars)).expect("scalar output");
    let mut worst = 0.0f64;
    for (i, t) in inputs.iter().enumerate() {
        let g = grads.wrt(vars[i]);
        let (mut diff, mut norm) = (0.0, 0.0f64);
        for j in 0..t.len() {
            let mut xs = inputs.to_vec();
            xs[i].data_mut()[j] += h;
            let up = value(build, &xs);
            xs[i].data_mut()[j] -= 2.0 * h;
            let down = value(build, &xs);
            let num = (up - down) / (2.0 * h);
            diff += (num - g.data()[j]).powi(2);
            norm = norm.max(num.abs()).max(g.data()[j].abs());
        }
        worst = worst.max(diff.sqrt() / norm.max(1e-8));
    }
    worst
}

fn rand_t(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape, (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).expect("shape")
}

/// Fixed projection to a scalar that weights every element differently.
fn proj(v: Var<'_>) -> Var<'_> {
    let n = v.value().len();
    let w = Tensor::new(&v.shape(), (0..n).map(|i| ((i * 7 % 5) as f64 - 2.0) * 0.3).collect()).expect("shape");
    v.mul(v.tape().constant(w)).expect("same shape").sum()
}

fn gradient_checks(seed: u64) -> Vec<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![];
    let mut run = |name: &str, build: &Build, inputs: Vec<Tensor>| {
        let gap = gradient_gap(build, &inputs, 1e-4);
        out.push(result(&format!("grad/{name}"), gap < 1e-4, format!("relative gap {gap:.2e}")));
    };
    run(
        "conv2d+relu+pool",
        &|v| proj(avg_pool2(conv2d(v[0], v[1], v[2]).unwrap().shift(2.0).relu()).unwrap()),
        vec![rand_t(&mut rng, &[4, 4, 2]), rand_t(&mut rng, &[3, 3, 2, 2]), rand_t(&mut rng, &[2])],
    );
    run("affine", &|v| proj(affine(v[0], v[1], v[2]).unwrap()), vec![
        rand_t(&mut rng, &[5]),
        rand_t(&mut rng, &[5, 3]),
        rand_t(&mut rng, &[3]),
    ]);
    run(
        "covariance",
        &|v| {
            let l1 = scaled_sigmoid(v[0].at(0).unwrap(), EIGEN_SCALE, EIGEN_OFFSET).unwrap();
            let l2 = scaled_sigmoid(v[0].at(1).unwrap(), EIGEN_SCALE, EIGEN_OFFSET).unwrap();
            let cov = rotation_covariance(l1, l2, v[0].at(2).unwrap()).unwrap();
            gaussian_nll(v[1], v[2], cov).unwrap().add(det2(cov).unwrap().scale(0.01)).unwrap()
        },
        vec![rand_t(&mut rng, &[3]), rand_t(&mut rng, &[2]), rand_t(&mut rng, &[2])],
    );
    out
}

fn model_gradient_check() -> CheckResult {
    let mut m = DatasetManifest::new(Family::Hemispherical, 1, 1, 5);
    m.image_size = 16;
    let rec = match generate_record(&m, 0) {
        Ok((r, _)) => r,
        Err(e) => return result("grad/model", false, e.to_string()),
    };
    let cfg = ModelConfig {
        variant: Variant::Probnet,
        n_objects: 1,
        channels: 2,
        t0: 4,
        regress_angular_velocity: true,
        image_size: 16,
        transition_width: 4,
        readout_hidden: 4,
    };
    let loss = LossConfig::new(Variant::Probnet, 3);
    let mut model = Model::init(cfg.clone(), 9).expect("valid config");
    let windows = fixed_windows(std::slice::from_ref(&rec), &cfg, 3);
    let (_, grads) = batch_gradients(&model, &windows, &loss).expect("loss");
    let h = 1e-5;
    let mut worst = 0.0f64;
    for name in ["enc.conv1.w", "trans.s1.w", "trans.p.w", "head.p0.b"] {
        let idx = model.params.position(name).expect("parameter exists");
        for j in [0usize, 3, 7] {
            let j = j.min(model.params.tensors()[idx].len() - 1);
            let orig = model.params.tensors()[idx].data()[j];
            let mut eval = |x: f64| {
                model.params.tensors_mut()[idx].data_mut()[j] = x;
                batch_gradients(&model, &windows, &loss).expect("loss").0
            };
            let num = (eval(orig + h) - eval(orig - h)) / (2.0 * h);
            eval(orig);
            let ana = grads[idx].data()[j];
            let gap = (num - ana).abs() / num.abs().max(ana.abs()).max(1e-6);
            worst = worst.max(if gap.is_nan() { f64::INFINITY } else { gap });
        }
    }
    result("grad/model-end-to-end", worst < 1e-3, format!("relative gap {worst:.2e}"))
}

fn physics_checks() -> Vec<CheckResult> {
    let mut out = vec![];
    let p = SimParams { rolling_resistance: 0.0, ..SimParams::default() };
    let flat = make_flat(0.0);
    let mut b = BallState::at_rest(Vec3::new(0.0, 0.0, 0.1), 0.1);
    b.velocity = Vec3::new(1.0, 0.0, 0.0);
    b.angular_velocity = Vec3::new(0.0, 10.0, 0.0);
    for _ in 0..250 {
        b = step(&b, &flat, &p);
    }
    let dev = (b.position.x - 250.0 * p.dt).abs();
    out.push(result("physics/flat-uniform-motion", dev < 1e-6, format!("deviation {dev:.2e} m")));

    let bowl = make_bowl(1.0, 0.0).expect("valid bowl");
    let c = bowl.closest(Vec3::new(0.5, 0.0, 0.4));
    let b0 = BallState::at_rest(c.point + c.normal * 0.225, 0.225);
    let mut b = b0;
    let mut e = b.energy(9.81);
    let mut rose = 0.0f64;
    for _ in 0..500 {
        b = step(&b, &bowl, &SimParams::default());
        let e1 = b.energy(9.81);
        rose = rose.max(e1 - e);
        e = e1;
    }
    out.push(result("physics/energy-non-increasing", rose <= 1e-9, format!("largest rise {rose:.2e} J/kg")));

    let mut pair = vec![BallState::at_rest(Vec3::new(0.0, 0.0, 0.0), 0.1), BallState::at_rest(Vec3::new(0.19, 0.0, 0.0), 0.1)];
    pair[0].velocity = Vec3::new(1.0, 0.2, 0.0);
    pair[1].velocity = Vec3::new(-0.5, 0.0, 0.1);
    let mom = |bs: &[BallState]| bs[0].velocity + bs[1].velocity;
    let ke = |bs: &[BallState]| bs[0].velocity.norm_squared() + bs[1].velocity.norm_squared();
    let (m0, k0) = (mom(&pair), ke(&pair));
    resolve_collisions(&mut pair, 1.0, None);
    let gap = (mom(&pair) - m0).norm().max((ke(&pair) - k0).abs());
    out.push(result("physics/elastic-collision", gap < 1e-9, format!("conservation gap {gap:.2e}")));
    out
}

fn format_checks() -> Vec<CheckResult> {
    let mut out = vec![];
    let mut m = DatasetManifest::new(Family::Heightfield, 2, 1, 3);
    m.image_size = 16;
    match generate_record(&m, 0) {
        Ok((rec, _)) => {
            let ok = encode_sequence(&rec)
                .and_then(|bytes| {
                    let back = decode_sequence(&bytes)?;
                    Ok(encode_sequence(&back)? == bytes && back.positions == rec.positions)
                })
                .unwrap_or(false);
            out.push(result("format/sequence-round-trip", ok, String::new()));
            let bad = encode_sequence(&rec).map(|mut b| {
                b[0] = b'X';
                matches!(decode_sequence(&b), Err(DatasetError::BadMagic { .. }))
            });
            out.push(result("format/sequence-bad-magic", bad.unwrap_or(false), String::new()));
        }
        Err(e) => out.push(result("format/sequence-round-trip", false, e.to_string())),
    }
    let model = Model::init(ModelConfig::new(Variant::Posnet), 1).expect("valid config");
    let bytes = model.to_bytes();
    let ok = Model::from_bytes(&bytes).map(|m| m.to_bytes() == bytes).unwrap_or(false);
    out.push(result("format/checkpoint-round-trip", ok, format!("{} bytes", bytes.len())));
    let cut = read_checkpoint(&bytes[..bytes.len() / 2]);
    out.push(result(
        "format/checkpoint-truncated",
        matches!(cut, Err(CheckpointError::Truncated { .. })),
        String::new(),
    ));
    out
}

/// Runs every check; the caller decides how to report.
pub fn run_all() -> Vec<CheckResult> {
    let mut out = vec![];
    for seed in 0..3 {
        out.extend(gradient_checks(seed));
    }
    out.push(model_gradient_check());
    out.extend(physics_checks());
    out.extend(format_checks());
    out
}

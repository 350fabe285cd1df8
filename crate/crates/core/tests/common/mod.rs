//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rolling_lab::gradcore::{self, ops, Pointwise, Tape, Tensor, Var};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_tensor(rng: &mut ChaCha8Rng, shape: &[usize], lo: f64, hi: f64) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape, (0..n).map(|_| rng.random_range(lo..hi)).collect()).unwrap()
}

/// Direct 3x3 / stride 1 / pad 1 convolution in HWC layout.
pub fn conv2d_loop(x: &Tensor, k: &Tensor, b: &Tensor) -> Vec<f64> {
    let (h, w, cin) = (x.shape()[0], x.shape()[1], x.shape()[2]);
    let cout = k.shape()[3];
    let mut out = vec![0.0; h * w * cout];
    for y in 0..h {
        for xx in 0..w {
            for co in 0..cout {
                let mut acc = b.data()[co];
                for ky in 0..3 {
                    for kx in 0..3 {
                        let sy = y as i64 + ky as i64 - 1;
                        let sx = xx as i64 + kx as i64 - 1;
                        if sy < 0 || sx < 0 || sy >= h as i64 || sx >= w as i64 {
                            continue;
                        }
                        for ci in 0..cin {
                            let xv = x.data()[(sy as usize * w + sx as usize) * cin + ci];
                            let kv = k.data()[((ky * 3 + kx) * cin + ci) * cout + co];
                            acc += xv * kv;
                        }
                    }
                }
                out[(y * w + xx) * cout + co] = acc;
            }
        }
    }
    out
}

pub fn affine_loop(x: &Tensor, w: &Tensor, b: &Tensor) -> Vec<f64> {
    let (n, m) = (w.shape()[0], w.shape()[1]);
    (0..m)
        .map(|j| b.data()[j] + (0..n).map(|i| x.data()[i] * w.data()[i * m + j]).sum::<f64>())
        .collect()
}

/// Evaluates a scalar-valued graph on fresh leaves.
fn eval_scalar(build: &dyn for<'t> Fn(&[Var<'t>]) -> Var<'t>, inputs: &[Tensor]) -> f64 {
    let tape = Tape::new();
    let vars: Vec<Var<'_>> = inputs.iter().map(|t| tape.leaf(t.clone())).collect();
    build(&vars).item()
}

/// Largest per-input relative error between the tape gradient and central
/// differences with step `h`. Relative error is taken tensor-wise:
/// `|analytic - numeric| / max(|analytic|, |numeric|, 1e-8)` in the 2-norm.
pub fn fd_relative_error(
    build: &dyn for<'t> Fn(&[Var<'t>]) -> Var<'t>,
    inputs: &[Tensor],
    h: f64,
) -> f64 {
    let tape = Tape::new();
    let vars: Vec<Var<'_>> = inputs.iter().map(|t| tape.leaf(t.clone())).collect();
    let out = build(&vars);
    let grads = tape.backward(out).unwrap();
    let mut worst = 0.0f64;
    for (i, t) in inputs.iter().enumerate() {
        let analytic = grads.wrt(vars[i]);
        let mut numeric = vec![0.0; t.len()];
        for j in 0..t.len() {
            let mut plus = inputs.to_vec();
            plus[i].data_mut()[j] += h;
            let mut minus = inputs.to_vec();
            minus[i].data_mut()[j] -= h;
            numeric[j] = (eval_scalar(build, &plus) - eval_scalar(build, &minus)) / (2.0 * h);
        }
        let diff: f64 = analytic
            .data()
            .iter()
            .zip(&numeric)
            .map(|(a, n)| (a - n).powi(2))
            .sum::<f64>()
            .sqrt();
        let na = analytic.data().iter().map(|a| a * a).sum::<f64>().sqrt();
        let nn = numeric.iter().map(|a| a * a).sum::<f64>().sqrt();
        worst = worst.max(diff / na.max(nn).max(1e-8));
    }
    worst
}

/// Random projection weights so that every output element matters.
fn weighted_sum<'t>(out: Var<'t>, seed: u64) -> Var<'t> {
    let mut r = rng(seed ^ 0xabcdef);
    let w = uniform_tensor(&mut r, &out.shape(), -1.0, 1.0);
    let shape = out.shape();
    let w = if shape.is_empty() { Tensor::scalar(w.item()) } else { w };
    out.mul(out.tape().constant(w)).unwrap().sum()
}

/// Keeps samples away from the ReLU kink so a 1e-4 step never crosses it.
fn away_from_zero(t: &mut Tensor) {
    for v in t.data_mut() {
        if v.abs() < 0.05 {
            *v += 0.1f64.copysign(*v);
        }
    }
}

pub const FD_STEP: f64 = 1e-4;

/// Finite-difference gradient errors for every differentiable op at `seed`.
pub fn gradient_suite(seed: u64) -> Vec<(&'static str, f64)> {
    let mut r = rng(seed);
    let mut results = Vec::new();
    let mut check = |name: &'static str, build: &dyn for<'t> Fn(&[Var<'t>]) -> Var<'t>, inputs: Vec<Tensor>| {
        results.push((name, fd_relative_error(build, &inputs, FD_STEP)));
    };

    let x = uniform_tensor(&mut r, &[4, 4, 2], -1.0, 1.0);
    let k = uniform_tensor(&mut r, &[3, 3, 2, 3], -1.0, 1.0);
    let b = uniform_tensor(&mut r, &[3], -1.0, 1.0);
    check(
        "conv2d",
        &|v| weighted_sum(gradcore::conv2d(v[0], v[1], v[2]).unwrap(), seed),
        vec![x, k, b],
    );

    let x = uniform_tensor(&mut r, &[5], -1.0, 1.0);
    let w = uniform_tensor(&mut r, &[5, 3], -1.0, 1.0);
    let b = uniform_tensor(&mut r, &[3], -1.0, 1.0);
    check(
        "affine",
        &|v| weighted_sum(gradcore::affine(v[0], v[1], v[2]).unwrap(), seed),
        vec![x, w, b],
    );

    for (name, kind, lo, hi) in [
        ("relu", Pointwise::Relu, -2.0, 2.0),
        ("sigmoid", Pointwise::Sigmoid, -3.0, 3.0),
        ("log", Pointwise::Log, 0.2, 3.0),
        ("exp", Pointwise::Exp, -2.0, 2.0),
        ("sin", Pointwise::Sin, -3.0, 3.0),
        ("cos", Pointwise::Cos, -3.0, 3.0),
        ("square", Pointwise::Square, -2.0, 2.0),
    ] {
        let mut x = uniform_tensor(&mut r, &[6], lo, hi);
        if kind == Pointwise::Relu {
            away_from_zero(&mut x);
        }
        check(
            name,
            &move |v| weighted_sum(gradcore::pointwise(v[0], kind).unwrap(), seed),
            vec![x],
        );
    }

    let z = uniform_tensor(&mut r, &[4], -4.0, 4.0);
    check(
        "scaled_sigmoid",
        &|v| {
            weighted_sum(
                gradcore::scaled_sigmoid(v[0], gradcore::EIGEN_SCALE, gradcore::EIGEN_OFFSET).unwrap(),
                seed,
            )
        },
        vec![z],
    );

    let l1 = Tensor::scalar(r.random_range(0.1..5.0));
    let l2 = Tensor::scalar(r.random_range(0.1..5.0));
    let th = Tensor::scalar(r.random_range(-3.0..3.0));
    check(
        "rotation_covariance",
        &|v| weighted_sum(gradcore::rotation_covariance(v[0], v[1], v[2]).unwrap(), seed),
        vec![l1, l2, th],
    );

    // Sigma built from three free entries so that perturbations stay symmetric.
    let a = r.random_range(1.0..3.0);
    let c = r.random_range(1.0..3.0);
    let off = r.random_range(-0.5..0.5);
    let y = uniform_tensor(&mut r, &[2], -2.0, 2.0);
    let mu = uniform_tensor(&mut r, &[2], -2.0, 2.0);
    check(
        "gaussian_nll",
        &|v| {
            let s = v[2];
            let sigma = ops::concat(&[s.at(0).unwrap(), s.at(1).unwrap(), s.at(1).unwrap(), s.at(2).unwrap()])
                .unwrap()
                .reshape(&[2, 2])
                .unwrap();
            gradcore::gaussian_nll(v[0], v[1], sigma).unwrap()
        },
        vec![y, mu, Tensor::vector(vec![a, off, c])],
    );

    let m = uniform_tensor(&mut r, &[2, 2], -2.0, 2.0);
    check("det2", &|v| ops::det2(v[0]).unwrap(), vec![m]);

    let x = uniform_tensor(&mut r, &[4, 4, 3], -1.0, 1.0);
    check(
        "avg_pool2",
        &|v| weighted_sum(ops::avg_pool2(v[0]).unwrap(), seed),
        vec![x],
    );

    let a = uniform_tensor(&mut r, &[2, 3, 2], -1.0, 1.0);
    let b = uniform_tensor(&mut r, &[2, 3, 3], -1.0, 1.0);
    check(
        "channels",
        &|v| {
            let cat = ops::concat_channels(&[v[0], v[1]]).unwrap();
            let part = cat.channels(1, 3).unwrap();
            weighted_sum(part.mul(part).unwrap(), seed)
        },
        vec![a, b],
    );

    let a = uniform_tensor(&mut r, &[5], -1.0, 1.0);
    let b = uniform_tensor(&mut r, &[5], -1.0, 1.0);
    check(
        "arithmetic",
        &|v| {
            let s = v[0].add(v[1]).unwrap().mul(v[0].sub(v[1]).unwrap()).unwrap();
            let t = s.scale(1.7).shift(0.3).slice(1, 3).unwrap();
            weighted_sum(t, seed).add(v[0].mean()).unwrap()
        },
        vec![a, b],
    );
    results
}

/// `0.5 log det(2 pi S) + 0.5 d^T S^-1 d` evaluated term by term.
pub fn nll_closed_form(d: [f64; 2], s: [[f64; 2]; 2]) -> f64 {
    let det = s[0][0] * s[1][1] - s[0][1] * s[1][0];
    let inv = [[s[1][1] / det, -s[0][1] / det], [-s[1][0] / det, s[0][0] / det]];
    let q = d[0] * (inv[0][0] * d[0] + inv[0][1] * d[1]) + d[1] * (inv[1][0] * d[0] + inv[1][1] * d[1]);
    let two_pi = 2.0 * std::f64::consts::PI;
    0.5 * (two_pi * two_pi * det).ln() + 0.5 * q
}

/// Least-squares polynomial coefficients (constant term first) from the
/// normal equations, inverted with an explicit adjugate.
pub fn normal_equation_fit(ts: &[f64], ys: &[f64], degree: usize) -> Vec<f64> {
    let n = degree + 1;
    let mut ata = vec![vec![0.0; n]; n];
    let mut aty = vec![0.0; n];
    for (t, y) in ts.iter().zip(ys) {
        let row: Vec<f64> = (0..n).map(|p| t.powi(p as i32)).collect();
        for i in 0..n {
            aty[i] += row[i] * y;
            for j in 0..n {
                ata[i][j] += row[i] * row[j];
            }
        }
    }
    let inv = match n {
        2 => {
            let det = ata[0][0] * ata[1][1] - ata[0][1] * ata[1][0];
            vec![
                vec![ata[1][1] / det, -ata[0][1] / det],
                vec![-ata[1][0] / det, ata[0][0] / det],
            ]
        }
        3 => {
            let m = &ata;
            let cof = |r0: usize, r1: usize, c0: usize, c1: usize| m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
            let c = [
                [cof(1, 2, 1, 2), -cof(1, 2, 0, 2), cof(1, 2, 0, 1)],
                [-cof(0, 2, 1, 2), cof(0, 2, 0, 2), -cof(0, 2, 0, 1)],
                [cof(0, 1, 1, 2), -cof(0, 1, 0, 2), cof(0, 1, 0, 1)],
            ];
            let det = m[0][0] * c[0][0] + m[0][1] * c[0][1] + m[0][2] * c[0][2];
            // inverse = adjugate / det, adjugate = cofactor^T
            (0..3).map(|i| (0..3).map(|j| c[j][i] / det).collect()).collect()
        }
        _ => panic!("degree 1 or 2 only"),
    };
    (0..n).map(|i| (0..n).map(|j| inv[i][j] * aty[j]).sum()).collect()
}

//! Differentiable operations.
//!
//! Every forward function validates shapes, computes its value eagerly and
//! records an [`Op`] whose `backprop` arm is the matching vector-Jacobian
//! product. Feature maps use `H x W x C` layout.

use std::f64::consts::{FRAC_PI_2, PI};

use super::gemm::gemm;
use super::tape::{accumulate, accumulator, Node};
use super::{GradError, Tensor, Var};

/// Eigenvalue ceiling minus floor of the covariance head.
pub const EIGEN_SCALE: f64 = 99.99;
/// Eigenvalue floor of the covariance head.
pub const EIGEN_OFFSET: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pointwise {
    Relu,
    Sigmoid,
    Log,
    Exp,
    Sin,
    Cos,
    Square,
}

pub(crate) enum Op {
    Leaf,
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Scale(usize, f64),
    Shift(usize),
    Sum(usize),
    Reshape(usize),
    Slice { src: usize, start: usize },
    Concat(Vec<usize>),
    ConcatChannels(Vec<usize>),
    SliceChannels { src: usize, start: usize },
    Conv2d { input: usize, kernel: usize, bias: usize, patches: Vec<f64> },
    AvgPool2(usize),
    Affine { input: usize, weight: usize, bias: usize },
    Pointwise { input: usize, kind: Pointwise },
    ScaledSigmoid { input: usize, scale: f64 },
    RotationCovariance { l1: usize, l2: usize, theta: usize },
    GaussianNll { y: usize, mu: usize, sigma: usize },
    Det2(usize),
}

impl Op {
    pub(crate) fn inputs(&self) -> Vec<usize> {
        match self {
            Op::Leaf => vec![],
            Op::Add(a, b) | Op::Sub(a, b) | Op::Mul(a, b) => vec![*a, *b],
            Op::Scale(a, _)
            | Op::Shift(a)
            | Op::Sum(a)
            | Op::Reshape(a)
            | Op::AvgPool2(a)
            | Op::Det2(a) => vec![*a],
            Op::Slice { src, .. } | Op::SliceChannels { src, .. } => vec![*src],
            Op::Concat(v) | Op::ConcatChannels(v) => v.clone(),
            Op::Conv2d { input, kernel, bias, .. } => vec![*input, *kernel, *bias],
            Op::Affine { input, weight, bias } => vec![*input, *weight, *bias],
            Op::Pointwise { input, .. } | Op::ScaledSigmoid { input, .. } => vec![*input],
            Op::RotationCovariance { l1, l2, theta } => vec![*l1, *l2, *theta],
            Op::GaussianNll { y, mu, sigma } => vec![*y, *mu, *sigma],
        }
    }

    pub(crate) fn backprop(
        &self,
        nodes: &[Node],
        out: &Tensor,
        g: &[f64],
        grads: &mut [Option<Vec<f64>>],
    ) {
        let wants = |id: usize| nodes[id].needs_grad;
        let val = |id: usize| &*nodes[id].value;
        match self {
            Op::Leaf => {}
            Op::Add(a, b) => {
                if wants(*a) {
                    accumulate(grads, *a, g);
                }
                if wants(*b) {
                    accumulate(grads, *b, g);
                }
            }
            Op::Sub(a, b) => {
                if wants(*a) {
                    accumulate(grads, *a, g);
                }
                if wants(*b) {
                    let acc = accumulator(grads, *b, g.len());
                    acc.iter_mut().zip(g).for_each(|(x, gi)| *x -= gi);
                }
            }
            Op::Mul(a, b) => {
                if wants(*a) {
                    let bv = val(*b).data();
                    let acc = accumulator(grads, *a, g.len());
                    for i in 0..g.len() {
                        acc[i] += g[i] * bv[i];
                    }
                }
                if wants(*b) {
                    let av = val(*a).data();
                    let acc = accumulator(grads, *b, g.len());
                    for i in 0..g.len() {
                        acc[i] += g[i] * av[i];
                    }
                }
            }
            Op::Scale(a, c) => {
                let acc = accumulator(grads, *a, g.len());
                acc.iter_mut().zip(g).for_each(|(x, gi)| *x += c * gi);
            }
            Op::Shift(a) | Op::Reshape(a) => accumulate(grads, *a, g),
            Op::Sum(a) => {
                let n = val(*a).len();
                let acc = accumulator(grads, *a, n);
                acc.iter_mut().for_each(|x| *x += g[0]);
            }
            Op::Slice { src, start } => {
                let n = val(*src).len();
                let acc = accumulator(grads, *src, n);
                for (i, gi) in g.iter().enumerate() {
                    acc[start + i] += gi;
                }
            }
            Op::Concat(parts) => {
                let mut offset = 0;
                for &p in parts {
                    let n = val(p).len();
                    if wants(p) {
                        accumulate(grads, p, &g[offset..offset + n]);
                    }
                    offset += n;
                }
            }
            Op::ConcatChannels(parts) => {
                let total_c = *out.shape().last().unwrap();
                let pixels = out.len() / total_c;
                let mut c0 = 0;
                for &p in parts {
                    let c = *val(p).shape().last().unwrap();
                    if wants(p) {
                        let acc = accumulator(grads, p, pixels * c);
                        for px in 0..pixels {
                            let src = &g[px * total_c + c0..px * total_c + c0 + c];
                            for (a, s) in acc[px * c..px * c + c].iter_mut().zip(src) {
                                *a += s;
                            }
                        }
                    }
                    c0 += c;
                }
            }
            Op::SliceChannels { src, start } => {
                let src_c = *val(*src).shape().last().unwrap();
                let c = *out.shape().last().unwrap();
                let pixels = out.len() / c;
                let acc = accumulator(grads, *src, pixels * src_c);
                for px in 0..pixels {
                    for k in 0..c {
                        acc[px * src_c + start + k] += g[px * c + k];
                    }
                }
            }
            Op::Conv2d {
                input,
                kernel,
                bias,
                patches,
            } => {
                let x = val(*input);
                let (h, w, cin) = (x.shape()[0], x.shape()[1], x.shape()[2]);
                let cout = out.shape()[2];
                let hw = h * w;
                let kk = 9 * cin;
                if wants(*kernel) {
                    let acc = accumulator(grads, *kernel, kk * cout);
                    gemm(kk, hw, cout, patches, true, g, false, 1.0, acc);
                }
                if wants(*bias) {
                    let acc = accumulator(grads, *bias, cout);
                    for px in 0..hw {
                        for (a, gi) in acc.iter_mut().zip(&g[px * cout..(px + 1) * cout]) {
                            *a += gi;
                        }
                    }
                }
                if wants(*input) {
                    let kv = val(*kernel).data();
                    let mut dpatches = vec![0.0; hw * kk];
                    gemm(hw, cout, kk, g, false, kv, true, 0.0, &mut dpatches);
                    let acc = accumulator(grads, *input, hw * cin);
                    col2im_add(h, w, cin, &dpatches, acc);
                }
            }
            Op::AvgPool2(a) => {
                let x = val(*a);
                let (h, w, c) = (x.shape()[0], x.shape()[1], x.shape()[2]);
                let (oh, ow) = (h / 2, w / 2);
                let acc = accumulator(grads, *a, h * w * c);
                for oy in 0..oh {
                    for ox in 0..ow {
                        for k in 0..c {
                            let gi = 0.25 * g[(oy * ow + ox) * c + k];
                            for (dy, dx) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                                acc[((2 * oy + dy) * w + 2 * ox + dx) * c + k] += gi;
                            }
                        }
                    }
                }
            }
            Op::Affine {
                input,
                weight,
                bias,
            } => {
                let x = val(*input).data();
                let n = x.len();
                let m = g.len();
                if wants(*weight) {
                    let acc = accumulator(grads, *weight, n * m);
                    gemm(n, 1, m, x, false, g, false, 1.0, acc);
                }
                if wants(*bias) {
                    accumulate(grads, *bias, g);
                }
                if wants(*input) {
                    let wv = val(*weight).data();
                    let acc = accumulator(grads, *input, n);
                    gemm(n, m, 1, wv, false, g, false, 1.0, acc);
                }
            }
            Op::Pointwise { input, kind } => {
                let x = val(*input).data();
                let y = out.data();
                let acc = accumulator(grads, *input, g.len());
                for i in 0..g.len() {
                    let d = match kind {
                        Pointwise::Relu => {
                            if x[i] > 0.0 {
                                1.0
                            } else {
                                0.0
                            }
                        }
                        Pointwise::Sigmoid => y[i] * (1.0 - y[i]),
                        Pointwise::Log => 1.0 / x[i],
                        Pointwise::Exp => y[i],
                        Pointwise::Sin => x[i].cos(),
                        Pointwise::Cos => -x[i].sin(),
                        Pointwise::Square => 2.0 * x[i],
                    };
                    acc[i] += g[i] * d;
                }
            }
            Op::ScaledSigmoid { input, scale } => {
                let x = val(*input).data();
                let acc = accumulator(grads, *input, g.len());
                for i in 0..g.len() {
                    let s = sigmoid(x[i]);
                    acc[i] += g[i] * scale * s * (1.0 - s);
                }
            }
            Op::RotationCovariance { l1, l2, theta } => {
                let (a, b) = (val(*l1).item(), val(*l2).item());
                let (s, c) = quadrant_sin_cos(val(*theta).item());
                // g is row-major [s11, s12, s21, s22]
                let (g11, g12, g21, g22) = (g[0], g[1], g[2], g[3]);
                let goff = g12 + g21;
                if wants(*l1) {
                    accumulate(grads, *l1, &[g11 * c * c + g22 * s * s + goff * s * c]);
                }
                if wants(*l2) {
                    accumulate(grads, *l2, &[g11 * s * s + g22 * c * c - goff * s * c]);
                }
                if wants(*theta) {
                    let d11 = 2.0 * s * c * (b - a);
                    let d22 = -d11;
                    let doff = (a - b) * (c * c - s * s);
                    accumulate(grads, *theta, &[g11 * d11 + g22 * d22 + goff * doff]);
                }
            }
            Op::GaussianNll { y, mu, sigma } => {
                let yv = val(*y).data();
                let mv = val(*mu).data();
                let sv = val(*sigma).data();
                let d = [yv[0] - mv[0], yv[1] - mv[1]];
                let inv = inverse2(sv);
                // u = inv d, w = inv^T d
                let u = [
                    inv[0] * d[0] + inv[1] * d[1],
                    inv[2] * d[0] + inv[3] * d[1],
                ];
                let w = [
                    inv[0] * d[0] + inv[2] * d[1],
                    inv[1] * d[0] + inv[3] * d[1],
                ];
                let gy = [0.5 * (u[0] + w[0]) * g[0], 0.5 * (u[1] + w[1]) * g[0]];
                if wants(*y) {
                    accumulate(grads, *y, &gy);
                }
                if wants(*mu) {
                    accumulate(grads, *mu, &[-gy[0], -gy[1]]);
                }
                if wants(*sigma) {
                    // 0.5 * inv^T - 0.5 * w u^T
                    let gs = [
                        0.5 * (inv[0] - w[0] * u[0]) * g[0],
                        0.5 * (inv[2] - w[0] * u[1]) * g[0],
                        0.5 * (inv[1] - w[1] * u[0]) * g[0],
                        0.5 * (inv[3] - w[1] * u[1]) * g[0],
                    ];
                    accumulate(grads, *sigma, &gs);
                }
            }
            Op::Det2(a) => {
                let m = val(*a).data();
                let gg = g[0];
                accumulate(grads, *a, &[gg * m[3], -gg * m[2], -gg * m[1], gg * m[0]]);
            }
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `(sin, cos)` that is exact for arguments equal to `k * FRAC_PI_2`.
fn quadrant_sin_cos(theta: f64) -> (f64, f64) {
    let k = (theta / FRAC_PI_2).round();
    if k.abs() < 1e6 && k * FRAC_PI_2 == theta {
        match (k as i64).rem_euclid(4) {
            0 => (0.0, 1.0),
            1 => (1.0, 0.0),
            2 => (0.0, -1.0),
            _ => (-1.0, 0.0),
        }
    } else {
        theta.sin_cos()
    }
}

fn inverse2(m: &[f64]) -> [f64; 4] {
    let det = m[0] * m[3] - m[1] * m[2];
    [m[3] / det, -m[1] / det, -m[2] / det, m[0] / det]
}

fn shape_err(op: &'static str, detail: String) -> GradError {
    GradError::Shape { op, detail }
}

fn same_tape(a: Var<'_>, b: Var<'_>) {
    debug_assert!(std::ptr::eq(a.tape, b.tape), "variables from different tapes");
}

fn binary<'t>(
    op_name: &'static str,
    a: Var<'t>,
    b: Var<'t>,
    f: impl Fn(f64, f64) -> f64,
    op: Op,
) -> Result<Var<'t>, GradError> {
    same_tape(a, b);
    let (av, bv) = (a.value(), b.value());
    if av.shape() != bv.shape() {
        return Err(shape_err(
            op_name,
            format!("{:?} vs {:?}", av.shape(), bv.shape()),
        ));
    }
    let data = av.data().iter().zip(bv.data()).map(|(x, y)| f(*x, *y)).collect();
    let t = Tensor::new(av.shape(), data)?;
    Ok(a.tape.push(t, op))
}

impl<'t> Var<'t> {
    pub fn add(self, other: Var<'t>) -> Result<Var<'t>, GradError> {
        binary("add", self, other, |x, y| x + y, Op::Add(self.id, other.id))
    }

    pub fn sub(self, other: Var<'t>) -> Result<Var<'t>, GradError> {
        binary("sub", self, other, |x, y| x - y, Op::Sub(self.id, other.id))
    }

    pub fn mul(self, other: Var<'t>) -> Result<Var<'t>, GradError> {
        binary("mul", self, other, |x, y| x * y, Op::Mul(self.id, other.id))
    }

    pub fn scale(self, c: f64) -> Var<'t> {
        let v = self.value();
        let data = v.data().iter().map(|x| x * c).collect();
        let t = Tensor::new(v.shape(), data).expect("same shape");
        self.tape.push(t, Op::Scale(self.id, c))
    }

    pub fn shift(self, c: f64) -> Var<'t> {
        let v = self.value();
        let data = v.data().iter().map(|x| x + c).collect();
        let t = Tensor::new(v.shape(), data).expect("same shape");
        self.tape.push(t, Op::Shift(self.id))
    }

    pub fn sum(self) -> Var<'t> {
        let s = self.value().data().iter().sum();
        self.tape.push(Tensor::scalar(s), Op::Sum(self.id))
    }

    pub fn mean(self) -> Var<'t> {
        let n = self.value().len() as f64;
        self.sum().scale(1.0 / n)
    }

    pub fn square(self) -> Var<'t> {
        pointwise(self, Pointwise::Square).expect("square has no domain restriction")
    }

    pub fn relu(self) -> Var<'t> {
        pointwise(self, Pointwise::Relu).expect("relu has no domain restriction")
    }

    pub fn reshape(self, shape: &[usize]) -> Result<Var<'t>, GradError> {
        let t = (*self.value()).clone().reshaped(shape)?;
        Ok(self.tape.push(t, Op::Reshape(self.id)))
    }

    pub fn flatten(self) -> Var<'t> {
        let n = self.value().len();
        self.reshape(&[n]).expect("flatten keeps the element count")
    }

    /// Contiguous run `[start, start + len)` of the flattened value.
    pub fn slice(self, start: usize, len: usize) -> Result<Var<'t>, GradError> {
        let v = self.value();
        if len == 0 || start + len > v.len() {
            return Err(shape_err(
                "slice",
                format!("[{start}, {}) out of {} elements", start + len, v.len()),
            ));
        }
        let t = Tensor::vector(v.data()[start..start + len].to_vec());
        Ok(self.tape.push(t, Op::Slice { src: self.id, start }))
    }

    /// Element `i` of the flattened value as a scalar.
    pub fn at(self, i: usize) -> Result<Var<'t>, GradError> {
        self.slice(i, 1)?.reshape(&[])
    }

    /// Channels `[start, start + len)` of an `H x W x C` map.
    pub fn channels(self, start: usize, len: usize) -> Result<Var<'t>, GradError> {
        let v = self.value();
        if v.rank() != 3 || len == 0 || start + len > v.shape()[2] {
            return Err(shape_err(
                "channels",
                format!("[{start}, {}) of {:?}", start + len, v.shape()),
            ));
        }
        let (h, w, c) = (v.shape()[0], v.shape()[1], v.shape()[2]);
        let mut data = Vec::with_capacity(h * w * len);
        for px in 0..h * w {
            data.extend_from_slice(&v.data()[px * c + start..px * c + start + len]);
        }
        let t = Tensor::new(&[h, w, len], data)?;
        Ok(self.tape.push(t, Op::SliceChannels { src: self.id, start }))
    }
}

/// Concatenates the flattened values into one vector.
pub fn concat<'t>(parts: &[Var<'t>]) -> Result<Var<'t>, GradError> {
    let first = parts
        .first()
        .ok_or_else(|| shape_err("concat", "no inputs".into()))?;
    let mut data = Vec::new();
    for p in parts {
        same_tape(*first, *p);
        data.extend_from_slice(p.value().data());
    }
    let t = Tensor::vector(data);
    Ok(first.tape.push(t, Op::Concat(parts.iter().map(|p| p.id).collect())))
}

/// Concatenates `H x W x C_i` maps along the channel axis.
pub fn concat_channels<'t>(parts: &[Var<'t>]) -> Result<Var<'t>, GradError> {
    let first = parts
        .first()
        .ok_or_else(|| shape_err("concat_channels", "no inputs".into()))?;
    let values: Vec<_> = parts.iter().map(|p| p.value()).collect();
    let s0 = values[0].shape();
    if s0.len() != 3 {
        return Err(shape_err("concat_channels", format!("rank of {s0:?}")));
    }
    for v in &values {
        if v.rank() != 3 || v.shape()[..2] != s0[..2] {
            return Err(shape_err(
                "concat_channels",
                format!("{:?} vs {:?}", v.shape(), s0),
            ));
        }
    }
    let (h, w) = (s0[0], s0[1]);
    let total: usize = values.iter().map(|v| v.shape()[2]).sum();
    let mut data = Vec::with_capacity(h * w * total);
    for px in 0..h * w {
        for v in &values {
            let c = v.shape()[2];
            data.extend_from_slice(&v.data()[px * c..(px + 1) * c]);
        }
    }
    let t = Tensor::new(&[h, w, total], data)?;
    Ok(first
        .tape
        .push(t, Op::ConcatChannels(parts.iter().map(|p| p.id).collect())))
}

fn im2col(h: usize, w: usize, cin: usize, x: &[f64]) -> Vec<f64> {
    let kk = 9 * cin;
    let mut patches = vec![0.0; h * w * kk];
    for y in 0..h {
        for xx in 0..w {
            let row = &mut patches[(y * w + xx) * kk..(y * w + xx + 1) * kk];
            for ky in 0..3 {
                let sy = y as isize + ky as isize - 1;
                if sy < 0 || sy >= h as isize {
                    continue;
                }
                for kx in 0..3 {
                    let sx = xx as isize + kx as isize - 1;
                    if sx < 0 || sx >= w as isize {
                        continue;
                    }
                    let src = (sy as usize * w + sx as usize) * cin;
                    let dst = (ky * 3 + kx) * cin;
                    row[dst..dst + cin].copy_from_slice(&x[src..src + cin]);
                }
            }
        }
    }
    patches
}

fn col2im_add(h: usize, w: usize, cin: usize, dpatches: &[f64], acc: &mut [f64]) {
    let kk = 9 * cin;
    for y in 0..h {
        for xx in 0..w {
            let row = &dpatches[(y * w + xx) * kk..(y * w + xx + 1) * kk];
            for ky in 0..3 {
                let sy = y as isize + ky as isize - 1;
                if sy < 0 || sy >= h as isize {
                    continue;
                }
                for kx in 0..3 {
                    let sx = xx as isize + kx as isize - 1;
                    if sx < 0 || sx >= w as isize {
                        continue;
                    }
                    let dst = (sy as usize * w + sx as usize) * cin;
                    let src = (ky * 3 + kx) * cin;
                    for (a, d) in acc[dst..dst + cin].iter_mut().zip(&row[src..src + cin]) {
                        *a += d;
                    }
                }
            }
        }
    }
}

/// 3x3 convolution, stride 1, zero padding 1.
///
/// `input` is `H x W x Cin`, `kernel` is `3 x 3 x Cin x Cout`, `bias` is `Cout`.
pub fn conv2d<'t>(input: Var<'t>, kernel: Var<'t>, bias: Var<'t>) -> Result<Var<'t>, GradError> {
    same_tape(input, kernel);
    same_tape(input, bias);
    let (x, k, b) = (input.value(), kernel.value(), bias.value());
    if x.rank() != 3 {
        return Err(shape_err("conv2d", format!("input must be HxWxC, got {:?}", x.shape())));
    }
    let ks = k.shape();
    if ks.len() != 4 || ks[0] != 3 || ks[1] != 3 {
        return Err(shape_err("conv2d", format!("kernel must be 3x3xCinxCout, got {ks:?}")));
    }
    let (h, w, cin) = (x.shape()[0], x.shape()[1], x.shape()[2]);
    if ks[2] != cin {
        return Err(shape_err(
            "conv2d",
            format!("input has {cin} channels, kernel expects {}", ks[2]),
        ));
    }
    let cout = ks[3];
    if b.shape() != [cout] {
        return Err(shape_err(
            "conv2d",
            format!("bias {:?} does not match {cout} output channels", b.shape()),
        ));
    }
    let patches = im2col(h, w, cin, x.data());
    let mut out = Vec::with_capacity(h * w * cout);
    for _ in 0..h * w {
        out.extend_from_slice(b.data());
    }
    gemm(h * w, 9 * cin, cout, &patches, false, k.data(), false, 1.0, &mut out);
    let t = Tensor::new(&[h, w, cout], out)?;
    Ok(input.tape.push(
        t,
        Op::Conv2d {
            input: input.id,
            kernel: kernel.id,
            bias: bias.id,
            patches,
        },
    ))
}

/// 2x2 average pooling with stride 2; spatial extents must be even.
pub fn avg_pool2(input: Var<'_>) -> Result<Var<'_>, GradError> {
    let x = input.value();
    if x.rank() != 3 || x.shape()[0] % 2 != 0 || x.shape()[1] % 2 != 0 {
        return Err(shape_err("avg_pool2", format!("needs even HxWxC, got {:?}", x.shape())));
    }
    let (h, w, c) = (x.shape()[0], x.shape()[1], x.shape()[2]);
    let (oh, ow) = (h / 2, w / 2);
    let xd = x.data();
    let mut out = vec![0.0; oh * ow * c];
    for oy in 0..oh {
        for ox in 0..ow {
            for k in 0..c {
                let mut s = 0.0;
                for (dy, dx) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                    s += xd[((2 * oy + dy) * w + 2 * ox + dx) * c + k];
                }
                out[(oy * ow + ox) * c + k] = 0.25 * s;
            }
        }
    }
    let t = Tensor::new(&[oh, ow, c], out)?;
    Ok(input.tape.push(t, Op::AvgPool2(input.id)))
}

/// `input^T * weight + bias` for a length-`N` input and `N x M` weight.
pub fn affine<'t>(input: Var<'t>, weight: Var<'t>, bias: Var<'t>) -> Result<Var<'t>, GradError> {
    same_tape(input, weight);
    same_tape(input, bias);
    let (x, wt, b) = (input.value(), weight.value(), bias.value());
    let ws = wt.shape();
    if ws.len() != 2 {
        return Err(shape_err("affine", format!("weight must be NxM, got {ws:?}")));
    }
    let (n, m) = (ws[0], ws[1]);
    if x.rank() != 1 || x.len() != n {
        return Err(shape_err(
            "affine",
            format!("input {:?} does not match weight {ws:?}", x.shape()),
        ));
    }
    if b.shape() != [m] {
        return Err(shape_err(
            "affine",
            format!("bias {:?} does not match weight {ws:?}", b.shape()),
        ));
    }
    let mut out = b.data().to_vec();
    gemm(1, n, m, x.data(), false, wt.data(), false, 1.0, &mut out);
    let t = Tensor::vector(out);
    Ok(input.tape.push(
        t,
        Op::Affine {
            input: input.id,
            weight: weight.id,
            bias: bias.id,
        },
    ))
}

pub fn pointwise(input: Var<'_>, kind: Pointwise) -> Result<Var<'_>, GradError> {
    let x = input.value();
    if kind == Pointwise::Log {
        if let Some(bad) = x.data().iter().find(|v| !(**v > 0.0)) {
            return Err(GradError::Domain {
                op: "log",
                detail: format!("non-positive input {bad}"),
            });
        }
    }
    let f = |v: f64| match kind {
        Pointwise::Relu => v.max(0.0),
        Pointwise::Sigmoid => sigmoid(v),
        Pointwise::Log => v.ln(),
        Pointwise::Exp => v.exp(),
        Pointwise::Sin => v.sin(),
        Pointwise::Cos => v.cos(),
        Pointwise::Square => v * v,
    };
    let t = Tensor::new(x.shape(), x.data().iter().map(|v| f(*v)).collect())?;
    Ok(input.tape.push(t, Op::Pointwise { input: input.id, kind }))
}

/// `scale / (1 + exp(-z)) + offset`, elementwise; maps onto `(offset, offset + scale)`.
pub fn scaled_sigmoid(z: Var<'_>, scale: f64, offset: f64) -> Result<Var<'_>, GradError> {
    if !(scale > 0.0) {
        return Err(GradError::Domain {
            op: "scaled_sigmoid",
            detail: format!("scale must be positive, got {scale}"),
        });
    }
    let x = z.value();
    let data = x.data().iter().map(|v| scale * sigmoid(*v) + offset).collect();
    let t = Tensor::new(x.shape(), data)?;
    Ok(z.tape.push(t, Op::ScaledSigmoid { input: z.id, scale }))
}

/// `R(theta)^T diag(lambda1, lambda2) R(theta)` as a `2 x 2` tensor, with
/// `R(theta) = [[cos, sin], [-sin, cos]]`: the `lambda1` eigenvector points
/// along angle `theta`.
pub fn rotation_covariance<'t>(
    lambda1: Var<'t>,
    lambda2: Var<'t>,
    theta: Var<'t>,
) -> Result<Var<'t>, GradError> {
    same_tape(lambda1, lambda2);
    same_tape(lambda1, theta);
    let (l1, l2, th) = (lambda1.value(), lambda2.value(), theta.value());
    for (name, v) in [("lambda1", &l1), ("lambda2", &l2), ("theta", &th)] {
        if v.len() != 1 {
            return Err(shape_err(
                "rotation_covariance",
                format!("{name} must be a scalar, got {:?}", v.shape()),
            ));
        }
    }
    let (a, b) = (l1.item(), l2.item());
    if !(a > 0.0 && b > 0.0) {
        return Err(GradError::Domain {
            op: "rotation_covariance",
            detail: format!("eigenvalues must be positive, got ({a}, {b})"),
        });
    }
    let (s, c) = quadrant_sin_cos(th.item());
    let (s11, s22) = if s == 0.0 {
        (a, b)
    } else if c == 0.0 {
        (b, a)
    } else {
        (a + (b - a) * s * s, b + (a - b) * s * s)
    };
    let off = (a - b) * s * c;
    let t = Tensor::new(&[2, 2], vec![s11, off, off, s22])?;
    Ok(lambda1.tape.push(
        t,
        Op::RotationCovariance {
            l1: lambda1.id,
            l2: lambda2.id,
            theta: theta.id,
        },
    ))
}

fn check_spd(m: &[f64]) -> Result<(), GradError> {
    let scale = m.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(f64::MIN_POSITIVE);
    if (m[1] - m[2]).abs() > 1e-12 * scale {
        return Err(GradError::NotSpd {
            detail: format!("asymmetric off-diagonal ({}, {})", m[1], m[2]),
        });
    }
    let det = m[0] * m[3] - m[1] * m[2];
    if !(m[0] > 0.0 && det > 0.0) {
        return Err(GradError::NotSpd {
            detail: format!("leading minors ({}, {det})", m[0]),
        });
    }
    Ok(())
}

/// Negative log-density of a bivariate normal:
/// `0.5 * log det(2 pi sigma) + 0.5 * (y - mu)^T sigma^-1 (y - mu)`.
pub fn gaussian_nll<'t>(y: Var<'t>, mu: Var<'t>, sigma: Var<'t>) -> Result<Var<'t>, GradError> {
    same_tape(y, mu);
    same_tape(y, sigma);
    let (yv, mv, sv) = (y.value(), mu.value(), sigma.value());
    if yv.len() != 2 || mv.len() != 2 {
        return Err(shape_err(
            "gaussian_nll",
            format!("y {:?} and mu {:?} must hold 2 values", yv.shape(), mv.shape()),
        ));
    }
    if sv.shape() != [2, 2] {
        return Err(shape_err("gaussian_nll", format!("sigma must be 2x2, got {:?}", sv.shape())));
    }
    let m = sv.data();
    check_spd(m)?;
    let det = m[0] * m[3] - m[1] * m[2];
    let inv = inverse2(m);
    let d = [yv.data()[0] - mv.data()[0], yv.data()[1] - mv.data()[1]];
    let q = d[0] * (inv[0] * d[0] + inv[1] * d[1]) + d[1] * (inv[2] * d[0] + inv[3] * d[1]);
    let nll = (2.0 * PI).ln() + 0.5 * det.ln() + 0.5 * q;
    Ok(y.tape.push(
        Tensor::scalar(nll),
        Op::GaussianNll {
            y: y.id,
            mu: mu.id,
            sigma: sigma.id,
        },
    ))
}

/// Determinant of a `2 x 2` tensor.
pub fn det2(m: Var<'_>) -> Result<Var<'_>, GradError> {
    let v = m.value();
    if v.shape() != [2, 2] {
        return Err(shape_err("det2", format!("needs 2x2, got {:?}", v.shape())));
    }
    let d = v.data();
    let det = d[0] * d[3] - d[1] * d[2];
    Ok(m.tape.push(Tensor::scalar(det), Op::Det2(m.id)))
}

/// Adds a list of same-shaped variables; `None` when the list is empty.
pub fn sum_all<'t>(vars: &[Var<'t>]) -> Result<Option<Var<'t>>, GradError> {
    let mut iter = vars.iter();
    let Some(first) = iter.next() else {
        return Ok(None);
    };
    let mut acc = *first;
    for v in iter {
        acc = acc.add(*v)?;
    }
    Ok(Some(acc))
}

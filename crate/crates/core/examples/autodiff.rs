//! Fits a tiny convolutional regressor with the reverse-mode tape and
//! RMSProp, checking one gradient against central differences.
//!
//! cargo run --release --example autodiff

use rolling_lab::gradcore::{affine, conv2d, rmsprop_step, ParamSet, RmsPropState, Tape, Tensor};
use rolling_lab::seeding::item_rng;

fn loss_of(params: &ParamSet, x: &Tensor, target: f64) -> f64 {
    let tape = Tape::new();
    let bp = params.bind(&tape);
    let h = conv2d(tape.constant(x.clone()), bp.var("k"), bp.var("kb")).unwrap().relu();
    let y = affine(h.flatten(), bp.var("w"), bp.var("b")).unwrap();
    y.shift(-target).square().sum().item()
}

fn main() {
    let mut rng = item_rng(3, 0);
    let mut params = ParamSet::new();
    params.insert("k", Tensor::randn(&[3, 3, 1, 2], 0.5, &mut rng));
    params.insert("kb", Tensor::zeros(&[2]));
    params.insert("w", Tensor::randn(&[32, 1], 0.2, &mut rng));
    params.insert("b", Tensor::zeros(&[1]));
    let x = Tensor::randn(&[4, 4, 1], 1.0, &mut rng);
    let target = 1.5;

    let mut opt = RmsPropState::new(&params, 2e-3);
    for step in 0..=200 {
        let tape = Tape::new();
        let bp = params.bind(&tape);
        let h = conv2d(tape.constant(x.clone()), bp.var("k"), bp.var("kb")).unwrap().relu();
        let y = affine(h.flatten(), bp.var("w"), bp.var("b")).unwrap();
        let loss = y.shift(-target).square().sum();
        let grads = bp.gradients(&tape.backward(loss).unwrap());
        if step == 0 {
            let eps = 1e-5;
            let mut p = params.clone();
            p.get_mut("b").unwrap().data_mut()[0] += eps;
            let up = loss_of(&p, &x, target);
            p.get_mut("b").unwrap().data_mut()[0] -= 2.0 * eps;
            let down = loss_of(&p, &x, target);
            println!("d loss / d b: tape {:.8}, finite difference {:.8}", grads[3].data()[0], (up - down) / (2.0 * eps));
        }
        if step % 50 == 0 {
            println!("step {step:3}: loss {:.3e}", loss.item());
        }
        rmsprop_step(&mut params, &grads, &mut opt);
    }
}

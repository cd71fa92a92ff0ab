#![allow(dead_code)]

use bnnfilter::tinynet::{Activation, Mode, Net};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FD_STEP: f64 = 1e-5;

#[derive(Debug)]
pub struct GradCheck {
    pub params: usize,
    pub max_rel: f64,
    /// (parameter tensor, index, analytic, numeric) of the worst entry.
    pub worst: (usize, usize, f64, f64),
}

/// Relative error with a floor on the denominator so that gradients at
/// rounding level do not dominate.
pub fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(1e-7)
}

/// Central differences against backpropagation on a 2-feature, 8-hidden,
/// 3-class net with one binary hidden layer and the HardTanh surrogate.
pub fn gradient_check(seed: u64) -> GradCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut net = Net::new(2, &[8, 8], 3, &mut rng);
    net.activation = Activation::HardTanh;
    for layer in net.binary_layers_mut() {
        let theta: Vec<i8> = (0..layer.len()).map(|_| if rng.random_bool(0.5) { 1 } else { -1 }).collect();
        layer.set_theta(&theta).unwrap();
    }
    for p in net.params_mut() {
        p.value.iter_mut().for_each(|v| *v += rng.random_range(-0.3..0.3));
    }
    let batch = 12;
    let x: Vec<f64> = (0..batch * 2).map(|_| rng.random_range(-1.5..1.5)).collect();
    let y: Vec<usize> = (0..batch).map(|_| rng.random_range(0..3)).collect();

    let cache = net.forward(&x, batch, Mode::Train).unwrap();
    net.backward(&cache, &y).unwrap();
    let analytic: Vec<Vec<f64>> = net.params_mut().iter().map(|p| p.grad.clone()).collect();

    let mut out = GradCheck { params: 0, max_rel: 0.0, worst: (0, 0, 0.0, 0.0) };
    for (t, grads) in analytic.iter().enumerate() {
        for (j, &a) in grads.iter().enumerate() {
            let orig = net.params_mut()[t].value[j];
            net.params_mut()[t].value[j] = orig + FD_STEP;
            let up = net.loss(&x, &y, Mode::Train).unwrap();
            net.params_mut()[t].value[j] = orig - FD_STEP;
            let down = net.loss(&x, &y, Mode::Train).unwrap();
            net.params_mut()[t].value[j] = orig;
            let n = (up - down) / (2.0 * FD_STEP);
            let r = rel_err(a, n);
            out.params += 1;
            if r > out.max_rel {
                out.max_rel = r;
                out.worst = (t, j, a, n);
            }
        }
    }
    out
}

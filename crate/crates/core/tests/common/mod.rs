#![allow(dead_code)]

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stroke_core::nn::{Activation, Architecture, Mlp};

/// Relative tolerance of the finite-difference comparison.
pub const GRADIENT_RTOL: f64 = 1e-4;

/// Central-difference check of every parameter and input gradient of a
/// random small network (widths up to 16) under a random linear loss.
///
/// Hidden layers are ReLU; `output` picks the final activation.
pub fn gradient_check(seed: u64, output: Activation) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let input = rng.random_range(1..=6);
    let hidden: Vec<usize> = (0..rng.random_range(1..=2)).map(|_| rng.random_range(2..=16)).collect();
    let out = rng.random_range(1..=4);
    let arch = Architecture::new(input, hidden, out, output);
    let mut net = Mlp::<f64>::init(arch.clone(), &mut rng).unwrap();
    // enlarge the tiny output layer so its gradients are well conditioned,
    // and move biases off zero so no pre-activation sits exactly on a kink
    for w in net.layers_mut().last_mut().unwrap().weight.iter_mut() {
        *w *= 100.0;
    }
    for layer in net.layers_mut() {
        layer.bias.mapv_inplace(|_| rng.random_range(-0.5..0.5));
    }
    let batch = 3;
    let x = Array2::from_shape_fn((batch, input), |_| rng.random_range(-1.0..1.0));
    let c = Array2::from_shape_fn((batch, out), |_| rng.random_range(-1.0..1.0));
    let loss = |n: &Mlp<f64>, x: &Array2<f64>| (n.predict(x.view()).unwrap() * &c).sum();

    let (_, cache) = net.forward(x.view()).unwrap();
    let (grads, dx) = net.backward(&cache, c.view()).unwrap();
    let analytic = grads.flatten();
    let params = net.flatten();
    let h = 1e-6;
    // relative error, with a floor so near-zero gradients are compared absolutely
    let close = |a: f64, n: f64| (a - n).abs() <= GRADIENT_RTOL * a.abs().max(n.abs()).max(1e-3);
    for k in 0..params.len() {
        let mut p = params.clone();
        p[k] += h;
        let up = loss(&Mlp::from_flat(arch.clone(), &p).unwrap(), &x);
        p[k] -= 2.0 * h;
        let down = loss(&Mlp::from_flat(arch.clone(), &p).unwrap(), &x);
        let numeric = (up - down) / (2.0 * h);
        if !close(analytic[k], numeric) {
            return Err(format!("seed {seed}: parameter {k}: analytic {} vs numeric {numeric}", analytic[k]));
        }
    }
    for i in 0..batch {
        for j in 0..input {
            let mut xp = x.clone();
            xp[[i, j]] += h;
            let up = loss(&net, &xp);
            xp[[i, j]] -= 2.0 * h;
            let down = loss(&net, &xp);
            let numeric = (up - down) / (2.0 * h);
            if !close(dx[[i, j]], numeric) {
                return Err(format!("seed {seed}: input ({i},{j}): analytic {} vs numeric {numeric}", dx[[i, j]]));
            }
        }
    }
    Ok(())
}

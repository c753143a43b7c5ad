use serde::{Deserialize, Serialize};

use super::{Gradients, Layer, Mlp, NnError};
use crate::scalar::Scalar;

/// Adam hyper-parameters other than the learning rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

/// Moment estimates for every parameter tensor of one network.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub config: AdamConfig,
    pub step: u64,
    first: Vec<Layer<T>>,
    second: Vec<Layer<T>>,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(net: &Mlp<T>, config: AdamConfig) -> Self {
        let zeros = Gradients::zeros_like(net).layers;
        Self { config, step: 0, first: zeros.clone(), second: zeros }
    }
}

/// One bias-corrected Adam update of `net` in place.
pub fn adam_step<T: Scalar>(
    net: &mut Mlp<T>,
    grads: &Gradients<T>,
    state: &mut AdamState<T>,
    lr: T,
) -> Result<(), NnError> {
    let layers = net.layers_mut();
    let shapes_ok = layers.len() == grads.layers.len()
        && layers.len() == state.first.len()
        && layers
            .iter()
            .zip(&grads.layers)
            .zip(&state.first)
            .all(|((p, g), m)| p.same_shape(g) && p.same_shape(m));
    if !shapes_ok {
        return Err(NnError::ShapeMismatch);
    }
    state.step += 1;
    let b1 = T::lit(state.config.beta1);
    let b2 = T::lit(state.config.beta2);
    let eps = T::lit(state.config.epsilon);
    let t = state.step as i32;
    let c1 = T::one() - b1.powi(t);
    let c2 = T::one() - b2.powi(t);
    let one = T::one();
    let update = |p: &mut T, g: T, m: &mut T, v: &mut T| {
        *m = b1 * *m + (one - b1) * g;
        *v = b2 * *v + (one - b2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= lr * m_hat / (v_hat.sqrt() + eps);
    };
    for (((p, g), m), v) in layers
        .iter_mut()
        .zip(&grads.layers)
        .zip(state.first.iter_mut())
        .zip(state.second.iter_mut())
    {
        ndarray::Zip::from(&mut p.weight)
            .and(&g.weight)
            .and(&mut m.weight)
            .and(&mut v.weight)
            .for_each(|p, &g, m, v| update(p, g, m, v));
        ndarray::Zip::from(&mut p.bias)
            .and(&g.bias)
            .and(&mut m.bias)
            .and(&mut v.bias)
            .for_each(|p, &g, m, v| update(p, g, m, v));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Activation, Architecture};
    use ndarray::array;

    fn scalar_net(w: f64) -> Mlp<f64> {
        let arch = Architecture::new(1, vec![], 1, Activation::Linear);
        Mlp::from_layers(arch, vec![Layer { weight: array![[w]], bias: array![0.0] }]).unwrap()
    }

    fn grad(g: f64) -> Gradients<f64> {
        Gradients { layers: vec![Layer { weight: array![[g]], bias: array![0.0] }] }
    }

    #[test]
    fn first_step_closed_form() {
        let lr = 1e-3;
        for g in [0.5, -2.0, 1e-6] {
            let mut net = scalar_net(1.0);
            let mut st = AdamState::new(&net, AdamConfig::default());
            adam_step(&mut net, &grad(g), &mut st, lr).unwrap();
            // m_hat = g, v_hat = g^2
            let expected = 1.0 - lr * g / (g.abs() + 1e-8);
            assert!((net.layers()[0].weight[[0, 0]] - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut net = scalar_net(0.7);
        let mut st = AdamState::new(&net, AdamConfig::default());
        adam_step(&mut net, &grad(0.0), &mut st, 1e-2).unwrap();
        assert_eq!(net.layers()[0].weight[[0, 0]], 0.7);
        assert_eq!(st.step, 1);
    }

    #[test]
    fn shape_mismatch() {
        let mut net = scalar_net(0.7);
        let mut st = AdamState::new(&net, AdamConfig::default());
        let bad = Gradients { layers: vec![] };
        assert_eq!(adam_step(&mut net, &bad, &mut st, 1e-2), Err(NnError::ShapeMismatch));
        assert_eq!(st.step, 0);
    }
}

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use super::NnError;
use crate::scalar::Scalar;

/// Bound of the uniform distribution used for the output layer.
pub const FINAL_LAYER_INIT: f64 = 3e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
    Linear,
}

impl Activation {
    #[inline]
    fn apply<T: Scalar>(self, z: T) -> T {
        match self {
            Activation::Relu => z.max(T::zero()),
            Activation::Tanh => z.tanh(),
            Activation::Linear => z,
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `a`.
    #[inline]
    fn derivative<T: Scalar>(self, z: T, a: T) -> T {
        match self {
            Activation::Relu => {
                if z > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
            Activation::Tanh => T::one() - a * a,
            Activation::Linear => T::one(),
        }
    }
}

/// Layer widths and activations of a fully connected network.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub input: usize,
    pub hidden: Vec<usize>,
    pub output: usize,
    pub hidden_activation: Activation,
    pub output_activation: Activation,
}

impl Architecture {
    pub fn new(input: usize, hidden: Vec<usize>, output: usize, output_activation: Activation) -> Self {
        Self {
            input,
            hidden,
            output,
            hidden_activation: Activation::Relu,
            output_activation,
        }
    }

    pub fn validate(&self) -> Result<(), NnError> {
        if self.widths().any(|w| w == 0) {
            return Err(NnError::ZeroWidth);
        }
        Ok(())
    }

    /// All widths from input to output.
    pub fn widths(&self) -> impl Iterator<Item = usize> + '_ {
        std::iter::once(self.input)
            .chain(self.hidden.iter().copied())
            .chain(std::iter::once(self.output))
    }

    /// `(fan_in, fan_out)` of each affine layer.
    pub fn layer_shapes(&self) -> Vec<(usize, usize)> {
        let w: Vec<usize> = self.widths().collect();
        w.windows(2).map(|p| (p[0], p[1])).collect()
    }

    pub fn parameter_count(&self) -> usize {
        self.layer_shapes().iter().map(|(i, o)| i * o + o).sum()
    }

    fn activation(&self, layer: usize) -> Activation {
        if layer + 1 == self.hidden.len() + 1 {
            self.output_activation
        } else {
            self.hidden_activation
        }
    }
}

/// One affine layer. `weight` is `fan_out x fan_in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer<T> {
    pub weight: Array2<T>,
    pub bias: Array1<T>,
}

impl<T: Scalar> Layer<T> {
    pub fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Self {
            weight: Array2::zeros((fan_out, fan_in)),
            bias: Array1::zeros(fan_out),
        }
    }

    pub(crate) fn same_shape(&self, other: &Self) -> bool {
        self.weight.dim() == other.weight.dim() && self.bias.len() == other.bias.len()
    }
}

/// Weights and biases of a multilayer perceptron.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<T> {
    arch: Architecture,
    layers: Vec<Layer<T>>,
}

/// Intermediate values of a forward pass, consumed by the backward pass.
#[derive(Debug, Clone)]
pub struct Cache<T> {
    /// Input of each layer; `inputs[0]` is the network input.
    inputs: Vec<Array2<T>>,
    pre_activations: Vec<Array2<T>>,
    output: Array2<T>,
}

impl<T> Cache<T> {
    pub fn batch_size(&self) -> usize {
        self.inputs[0].nrows()
    }
}

/// Parameter gradients, shaped like the network.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub layers: Vec<Layer<T>>,
}

impl<T: Scalar> Gradients<T> {
    pub fn zeros_like(net: &Mlp<T>) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .map(|l| Layer::zeros(l.weight.ncols(), l.weight.nrows()))
                .collect(),
        }
    }

    pub fn flatten(&self) -> Vec<T> {
        flatten_layers(&self.layers)
    }

    pub fn is_zero(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weight.iter().all(|x| x.is_zero()) && l.bias.iter().all(|x| x.is_zero()))
    }
}

fn flatten_layers<T: Scalar>(layers: &[Layer<T>]) -> Vec<T> {
    let mut out = Vec::new();
    for l in layers {
        out.extend(l.weight.iter().copied());
        out.extend(l.bias.iter().copied());
    }
    out
}

impl<T: Scalar> Mlp<T> {
    /// He-uniform hidden layers, small uniform output layer, zero biases.
    pub fn init<R: Rng + ?Sized>(arch: Architecture, rng: &mut R) -> Result<Self, NnError> {
        arch.validate()?;
        let shapes = arch.layer_shapes();
        let last = shapes.len() - 1;
        let layers = shapes
            .iter()
            .enumerate()
            .map(|(i, &(fan_in, fan_out))| {
                let bound = if i == last {
                    FINAL_LAYER_INIT
                } else {
                    (6.0 / fan_in as f64).sqrt()
                };
                let dist = Uniform::new_inclusive(-bound, bound).expect("finite init bound");
                let weight = Array2::from_shape_simple_fn((fan_out, fan_in), || T::lit(dist.sample(rng)));
                Layer { weight, bias: Array1::zeros(fan_out) }
            })
            .collect();
        Ok(Self { arch, layers })
    }

    /// Network with every weight and bias zero.
    pub fn zeros(arch: Architecture) -> Result<Self, NnError> {
        arch.validate()?;
        let layers = arch
            .layer_shapes()
            .iter()
            .map(|&(i, o)| Layer::zeros(i, o))
            .collect();
        Ok(Self { arch, layers })
    }

    pub fn from_layers(arch: Architecture, layers: Vec<Layer<T>>) -> Result<Self, NnError> {
        arch.validate()?;
        let shapes = arch.layer_shapes();
        if shapes.len() != layers.len() {
            return Err(NnError::ShapeMismatch);
        }
        for (&(i, o), l) in shapes.iter().zip(&layers) {
            if l.weight.dim() != (o, i) || l.bias.len() != o {
                return Err(NnError::ShapeMismatch);
            }
        }
        Ok(Self { arch, layers })
    }

    /// Rebuilds a network from the layout produced by [`Mlp::flatten`].
    pub fn from_flat(arch: Architecture, values: &[T]) -> Result<Self, NnError> {
        arch.validate()?;
        if values.len() != arch.parameter_count() {
            return Err(NnError::ParameterCount {
                expected: arch.parameter_count(),
                got: values.len(),
            });
        }
        let mut it = values.iter().copied();
        let layers = arch
            .layer_shapes()
            .iter()
            .map(|&(i, o)| {
                let weight = Array2::from_shape_fn((o, i), |_| it.next().unwrap());
                let bias = Array1::from_shape_fn(o, |_| it.next().unwrap());
                Layer { weight, bias }
            })
            .collect();
        Ok(Self { arch, layers })
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer<T>] {
        &mut self.layers
    }

    /// Per layer: row-major weights followed by biases.
    pub fn flatten(&self) -> Vec<T> {
        flatten_layers(&self.layers)
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weight.iter().all(|x| x.is_finite()) && l.bias.iter().all(|x| x.is_finite()))
    }

    /// Batched forward pass; rows of `x` are samples.
    pub fn forward(&self, x: ArrayView2<'_, T>) -> Result<(Array2<T>, Cache<T>), NnError> {
        if x.ncols() != self.arch.input {
            return Err(NnError::InputWidth {
                expected: self.arch.input,
                got: x.ncols(),
            });
        }
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre_activations = Vec::with_capacity(self.layers.len());
        let mut a = x.to_owned();
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = a.dot(&layer.weight.t());
            z += &layer.bias;
            let act = self.arch.activation(i);
            let out = z.mapv(|v| act.apply(v));
            inputs.push(a);
            pre_activations.push(z);
            a = out;
        }
        Ok((
            a.clone(),
            Cache {
                inputs,
                pre_activations,
                output: a,
            },
        ))
    }

    /// Forward pass without keeping intermediates.
    pub fn predict(&self, x: ArrayView2<'_, T>) -> Result<Array2<T>, NnError> {
        if x.ncols() != self.arch.input {
            return Err(NnError::InputWidth {
                expected: self.arch.input,
                got: x.ncols(),
            });
        }
        let mut a = x.to_owned();
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = a.dot(&layer.weight.t());
            z += &layer.bias;
            let act = self.arch.activation(i);
            z.mapv_inplace(|v| act.apply(v));
            a = z;
        }
        Ok(a)
    }

    /// Single-sample forward pass.
    pub fn predict_one(&self, x: &[T]) -> Result<Vec<T>, NnError> {
        let view = ArrayView2::from_shape((1, x.len()), x).expect("row vector shape");
        Ok(self.predict(view)?.into_raw_vec_and_offset().0)
    }

    fn check_cache(&self, cache: &Cache<T>, dy: &ArrayView2<'_, T>) -> Result<(), NnError> {
        let consistent = cache.inputs.len() == self.layers.len()
            && cache.pre_activations.len() == self.layers.len()
            && cache
                .inputs
                .iter()
                .zip(&self.layers)
                .all(|(a, l)| a.ncols() == l.weight.ncols())
            && dy.dim() == cache.output.dim()
            && dy.ncols() == self.arch.output;
        if consistent {
            Ok(())
        } else {
            Err(NnError::CacheMismatch)
        }
    }

    fn backprop(
        &self,
        cache: &Cache<T>,
        dy: ArrayView2<'_, T>,
        want_params: bool,
    ) -> Result<(Option<Gradients<T>>, Array2<T>), NnError> {
        self.check_cache(cache, &dy)?;
        let n = self.layers.len();
        let mut grads = want_params.then(|| Vec::with_capacity(n));
        let mut upstream = dy.to_owned();
        for i in (0..n).rev() {
            let act = self.arch.activation(i);
            let z = &cache.pre_activations[i];
            let a_out = if i + 1 == n { &cache.output } else { &cache.inputs[i + 1] };
            let mut dz = upstream;
            Zip::from(&mut dz)
                .and(z)
                .and(a_out)
                .for_each(|d, &z, &a| *d *= act.derivative(z, a));
            if let Some(g) = grads.as_mut() {
                let weight = dz.t().dot(&cache.inputs[i]);
                let bias = dz.sum_axis(Axis(0));
                g.push(Layer { weight, bias });
            }
            upstream = dz.dot(&self.layers[i].weight);
        }
        let grads = grads.map(|mut g| {
            g.reverse();
            Gradients { layers: g }
        });
        Ok((grads, upstream))
    }

    /// Gradients of all parameters and of the input, given `dL/dy`.
    pub fn backward(
        &self,
        cache: &Cache<T>,
        dy: ArrayView2<'_, T>,
    ) -> Result<(Gradients<T>, Array2<T>), NnError> {
        let (g, dx) = self.backprop(cache, dy, true)?;
        Ok((g.expect("parameter gradients requested"), dx))
    }

    /// Gradient with respect to the input only.
    pub fn input_gradient(&self, cache: &Cache<T>, dy: ArrayView2<'_, T>) -> Result<Array2<T>, NnError> {
        Ok(self.backprop(cache, dy, false)?.1)
    }
}

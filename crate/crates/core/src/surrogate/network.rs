use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::Standardizer;
use crate::error::{Error, Result};
use crate::linalg::{axpy, dot};
use crate::rng;

/// Fully connected layer; `weights` is row-major `outputs x inputs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub(crate) inputs: usize,
    pub(crate) outputs: usize,
    pub(crate) weights: Vec<f64>,
    pub(crate) bias: Vec<f64>,
}

impl Dense {
    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn row(&self, o: usize) -> &[f64] {
        &self.weights[o * self.inputs..(o + 1) * self.inputs]
    }

    /// `out = W a + b`
    #[inline]
    pub(crate) fn affine(&self, a: &[f64], out: &mut [f64]) {
        for (o, z) in out.iter_mut().enumerate() {
            *z = self.bias[o] + dot(self.row(o), a);
        }
    }

    /// `out = W^T delta`
    #[inline]
    pub(crate) fn transpose_mul(&self, delta: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (o, &d) in delta.iter().enumerate() {
            if d != 0.0 {
                axpy(d, self.row(o), out);
            }
        }
    }
}

/// Feedforward surrogate `f̂`: tanh hidden layers, identity output layer,
/// operating on standardized inputs and outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateModel {
    pub(crate) layers: Vec<Dense>,
    pub(crate) standardizer: Standardizer,
    pub(crate) train_seed: u64,
}

/// Per-layer activations from one forward pass; `acts[0]` is the input.
#[derive(Debug, Clone, Default)]
pub struct Activations {
    pub(crate) acts: Vec<Vec<f64>>,
}

impl Activations {
    pub fn output(&self) -> &[f64] {
        self.acts.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Standardized-space input Jacobian, row-major `n x m`.
#[derive(Debug, Clone, PartialEq)]
pub struct Jacobian {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Jacobian {
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }
}

impl SurrogateModel {
    /// Assembles a model from explicit per-layer parameters.
    ///
    /// `weights[l]` is row-major with `layer_sizes[l + 1]` rows of
    /// `layer_sizes[l]` columns.
    pub fn from_parameters(
        layer_sizes: &[usize],
        weights: Vec<Vec<f64>>,
        biases: Vec<Vec<f64>>,
        standardizer: Standardizer,
        train_seed: u64,
    ) -> Result<Self> {
        if layer_sizes.len() < 2 || layer_sizes.contains(&0) {
            return Err(Error::InvalidConfig(
                "layer_sizes needs at least two positive entries".into(),
            ));
        }
        let n_layers = layer_sizes.len() - 1;
        if weights.len() != n_layers || biases.len() != n_layers {
            return Err(Error::DimensionMismatch {
                context: "layer count",
                expected: n_layers,
                actual: weights.len().min(biases.len()),
            });
        }
        if standardizer.input_dim() != layer_sizes[0] || standardizer.output_dim() != layer_sizes[n_layers] {
            return Err(Error::DimensionMismatch {
                context: "standardizer vs layer sizes",
                expected: layer_sizes[0],
                actual: standardizer.input_dim(),
            });
        }
        let mut layers = Vec::with_capacity(n_layers);
        for (l, (w, b)) in weights.into_iter().zip(biases).enumerate() {
            let (inputs, outputs) = (layer_sizes[l], layer_sizes[l + 1]);
            if w.len() != inputs * outputs {
                return Err(Error::DimensionMismatch {
                    context: "layer weights",
                    expected: inputs * outputs,
                    actual: w.len(),
                });
            }
            if b.len() != outputs {
                return Err(Error::DimensionMismatch {
                    context: "layer bias",
                    expected: outputs,
                    actual: b.len(),
                });
            }
            if !w.iter().chain(&b).all(|v| v.is_finite()) {
                return Err(Error::NonFiniteLayer { layer: l });
            }
            layers.push(Dense {
                inputs,
                outputs,
                weights: w,
                bias: b,
            });
        }
        Ok(SurrogateModel {
            layers,
            standardizer,
            train_seed,
        })
    }

    /// Weights and biases drawn from `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`.
    pub fn initialized(layer_sizes: &[usize], standardizer: Standardizer, seed: u64) -> Result<Self> {
        let mut rng = rng::seeded(seed);
        let n_layers = layer_sizes.len().saturating_sub(1);
        let mut weights = Vec::with_capacity(n_layers);
        let mut biases = Vec::with_capacity(n_layers);
        for pair in layer_sizes.windows(2) {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let limit = 1.0 / libm::sqrt(fan_in as f64);
            let mut draw = |count: usize| -> Vec<f64> { (0..count).map(|_| rng.random_range(-limit..limit)).collect() };
            weights.push(draw(fan_in * fan_out));
            biases.push(draw(fan_out));
        }
        Self::from_parameters(layer_sizes, weights, biases, standardizer, seed)
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![self.input_dim()];
        sizes.extend(self.layers.iter().map(|l| l.outputs));
        sizes
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs
    }

    pub fn standardizer(&self) -> &Standardizer {
        &self.standardizer
    }

    pub fn train_seed(&self) -> u64 {
        self.train_seed
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Runs the network on a standardized input, keeping every activation.
    pub fn forward_into(&self, x_std: &[f64], cache: &mut Activations) -> Result<()> {
        if x_std.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "model input",
                expected: self.input_dim(),
                actual: x_std.len(),
            });
        }
        let n_layers = self.layers.len();
        cache.acts.resize_with(n_layers + 1, Vec::new);
        cache.acts[0].clear();
        cache.acts[0].extend_from_slice(x_std);
        for (l, layer) in self.layers.iter().enumerate() {
            let (prev, rest) = cache.acts.split_at_mut(l + 1);
            let out = &mut rest[0];
            out.resize(layer.outputs, 0.0);
            layer.affine(&prev[l], out);
            if l + 1 < n_layers {
                for z in out.iter_mut() {
                    *z = libm::tanh(*z);
                }
            }
            if !out.iter().all(|v| v.is_finite()) {
                return Err(Error::NonFiniteLayer { layer: l });
            }
        }
        Ok(())
    }

    /// Standardized-space prediction.
    pub fn forward_std(&self, x_std: &[f64]) -> Result<Vec<f64>> {
        let mut cache = Activations::default();
        self.forward_into(x_std, &mut cache)?;
        Ok(cache.output().to_vec())
    }

    /// `ŷ = f̂(x)` in physical units.
    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "predict input",
                expected: self.input_dim(),
                actual: x.len(),
            });
        }
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("predict input"));
        }
        let y_std = self.forward_std(&self.standardizer.standardize_input(x))?;
        Ok(self.standardizer.destandardize_output(&y_std))
    }

    /// Reverse pass from an output cotangent, after [`Self::forward_into`].
    /// Writes `cotangent^T ∂ŷ_std/∂x_std` into `grad`.
    pub fn backward_input(
        &self,
        cache: &Activations,
        cotangent: &[f64],
        grad: &mut Vec<f64>,
        scratch: &mut Vec<f64>,
    ) -> Result<()> {
        let n_layers = self.layers.len();
        let mut delta = core::mem::take(scratch);
        delta.clear();
        delta.extend_from_slice(cotangent);
        for l in (0..n_layers).rev() {
            let layer = &self.layers[l];
            grad.resize(layer.inputs, 0.0);
            layer.transpose_mul(&delta, grad);
            if l > 0 {
                // through the tanh that produced acts[l]
                for (g, a) in grad.iter_mut().zip(&cache.acts[l]) {
                    *g *= 1.0 - a * a;
                }
            }
            if !grad.iter().all(|v| v.is_finite()) {
                *scratch = delta;
                return Err(Error::NonFiniteLayer { layer: l });
            }
            if l > 0 {
                core::mem::swap(&mut delta, grad);
            }
        }
        *scratch = delta;
        Ok(())
    }

    /// `∂ŷ_std/∂x_std` at a standardized input, one reverse pass per output.
    pub fn jacobian_std(&self, x_std: &[f64]) -> Result<Jacobian> {
        let mut cache = Activations::default();
        self.forward_into(x_std, &mut cache)?;
        let (n, m) = (self.output_dim(), self.input_dim());
        let mut data = Vec::with_capacity(n * m);
        let mut seed = vec![0.0; n];
        let mut grad = Vec::new();
        let mut scratch = Vec::new();
        for k in 0..n {
            seed.fill(0.0);
            seed[k] = 1.0;
            self.backward_input(&cache, &seed, &mut grad, &mut scratch)?;
            data.extend_from_slice(&grad);
        }
        Ok(Jacobian { rows: n, cols: m, data })
    }

    /// Jacobian of standardized outputs w.r.t. standardized inputs, at a
    /// physical-unit input `x`.
    pub fn input_gradient(&self, x: &[f64]) -> Result<Jacobian> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "input_gradient input",
                expected: self.input_dim(),
                actual: x.len(),
            });
        }
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("input_gradient input"));
        }
        self.jacobian_std(&self.standardizer.standardize_input(x))
    }
}

//! Feedforward network with the smoothed-ReLU activation `x / (1 + e^{-4x})`,
//! hand-written reverse-mode gradients and Adam.

mod adam;
mod checkpoint;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use checkpoint::{Checkpoint, CHECKPOINT_FORMAT};

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;

use crate::{Error, Result};

const SATURATION: f64 = 30.0;

fn sigmoid4(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-4.0 * x).exp())
    } else {
        let e = (4.0 * x).exp();
        e / (1.0 + e)
    }
}

pub fn smoothed_relu(x: f64) -> f64 {
    if x > SATURATION {
        x
    } else if x < -SATURATION {
        0.0
    } else {
        x * sigmoid4(x)
    }
}

/// `d/dx [x s(x)] = s + 4 x s (1 - s)` with `s = sigmoid(4x)`.
pub fn smoothed_relu_derivative(x: f64) -> f64 {
    if x > SATURATION {
        1.0
    } else if x < -SATURATION {
        0.0
    } else {
        let s = sigmoid4(x);
        s + 4.0 * x * s * (1.0 - s)
    }
}

/// Weights and biases of a fully connected network. `weights[l]` has shape
/// `(layer_dims[l + 1], layer_dims[l])`.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    layer_dims: Vec<usize>,
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

impl MlpParams {
    pub fn zeros(layer_dims: &[usize]) -> Result<Self> {
        if layer_dims.len() < 2 || layer_dims.contains(&0) {
            return Err(Error::InvalidArgument(format!(
                "layer dims need at least input and output sizes, all positive; got {layer_dims:?}"
            )));
        }
        let weights = layer_dims.windows(2).map(|w| Array2::zeros((w[1], w[0]))).collect();
        let biases = layer_dims[1..].iter().map(|&d| Array1::zeros(d)).collect();
        Ok(Self { layer_dims: layer_dims.to_vec(), weights, biases })
    }

    /// Glorot-uniform weights, zero biases.
    pub fn glorot<R: Rng + ?Sized>(layer_dims: &[usize], rng: &mut R) -> Result<Self> {
        let mut params = Self::zeros(layer_dims)?;
        for w in &mut params.weights {
            let (fan_out, fan_in) = w.dim();
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            w.mapv_inplace(|_| rng.random_range(-limit..limit));
        }
        Ok(params)
    }

    /// Rebuilds from raw parts, checking that the shapes chain.
    pub fn from_parts(layer_dims: Vec<usize>, weights: Vec<Array2<f64>>, biases: Vec<Array1<f64>>) -> Result<Self> {
        let template = Self::zeros(&layer_dims)?;
        if weights.len() != template.weights.len() || biases.len() != template.biases.len() {
            return Err(Error::DimensionMismatch { expected: template.weights.len(), got: weights.len() });
        }
        for (w, t) in weights.iter().zip(&template.weights) {
            if w.dim() != t.dim() {
                return Err(Error::DimensionMismatch { expected: t.len(), got: w.len() });
            }
        }
        for (b, t) in biases.iter().zip(&template.biases) {
            if b.len() != t.len() {
                return Err(Error::DimensionMismatch { expected: t.len(), got: b.len() });
            }
        }
        let params = Self { layer_dims, weights, biases };
        if !params.is_finite() {
            return Err(Error::InvalidArgument("non-finite parameter".into()));
        }
        Ok(params)
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_dims.last().unwrap()
    }

    pub fn num_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn num_params(&self) -> usize {
        self.weights.iter().map(|w| w.len()).sum::<usize>() + self.biases.iter().map(|b| b.len()).sum::<usize>()
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(|w| w.iter().all(|v| v.is_finite()))
            && self.biases.iter().all(|b| b.iter().all(|v| v.is_finite()))
    }

    /// Parameter tensors in a fixed order: each layer's weights then biases.
    pub fn tensors(&self) -> impl Iterator<Item = &[f64]> {
        self.weights.iter().zip(&self.biases).flat_map(|(w, b)| {
            [w.as_slice().expect("standard layout"), b.as_slice().expect("standard layout")]
        })
    }

    pub fn tensors_mut(&mut self) -> impl Iterator<Item = &mut [f64]> {
        self.weights.iter_mut().zip(self.biases.iter_mut()).flat_map(|(w, b)| {
            [w.as_slice_mut().expect("standard layout"), b.as_slice_mut().expect("standard layout")]
        })
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.tensors().flat_map(|t| t.iter().copied()).collect()
    }

    pub fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        let n = self.num_params();
        if flat.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: flat.len() });
        }
        let mut offset = 0;
        for t in self.tensors_mut() {
            t.copy_from_slice(&flat[offset..offset + t.len()]);
            offset += t.len();
        }
        Ok(())
    }

    fn check_input(&self, cols: usize) -> Result<()> {
        if cols != self.input_dim() {
            return Err(Error::DimensionMismatch { expected: self.input_dim(), got: cols });
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x.len())?;
        let batch = ArrayView2::from_shape((1, x.len()), x).expect("contiguous row");
        Ok(self.forward_batch(batch)?.into_raw_vec_and_offset().0)
    }

    /// Row-wise forward pass over a `(batch, input_dim)` matrix.
    pub fn forward_batch(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_input(x.ncols())?;
        let last = self.num_layers() - 1;
        let mut a = x.to_owned();
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut z = a.dot(&w.t());
            z += b;
            if l < last {
                z.mapv_inplace(smoothed_relu);
            }
            a = z;
        }
        Ok(standard(a))
    }

    /// Forward pass that keeps what the backward pass needs.
    pub fn forward_tape(&self, x: ArrayView2<f64>) -> Result<Tape> {
        self.check_input(x.ncols())?;
        let last = self.num_layers() - 1;
        let mut inputs = Vec::with_capacity(self.num_layers());
        let mut pre = Vec::with_capacity(last);
        let mut a = x.to_owned();
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut z = a.dot(&w.t());
            z += b;
            inputs.push(a);
            if l < last {
                a = z.mapv(smoothed_relu);
                pre.push(z);
            } else {
                a = z;
            }
        }
        Ok(Tape { inputs, pre_activations: pre, output: standard(a) })
    }

    /// Gradient of `sum_i <upstream_i, f(x_i)>` with respect to every
    /// parameter, given the tape of the forward pass over the same batch.
    pub fn backward(&self, tape: &Tape, upstream: ArrayView2<f64>) -> Result<MlpParams> {
        if upstream.dim() != tape.output.dim() {
            return Err(Error::DimensionMismatch { expected: tape.output.len(), got: upstream.len() });
        }
        let mut grads = Self::zeros(&self.layer_dims)?;
        let mut delta = upstream.to_owned();
        for l in (0..self.num_layers()).rev() {
            grads.weights[l] = standard(delta.t().dot(&tape.inputs[l]));
            grads.biases[l] = delta.sum_axis(Axis(0));
            if l > 0 {
                let mut d = delta.dot(&self.weights[l]);
                d.zip_mut_with(&tape.pre_activations[l - 1], |g, &z| *g *= smoothed_relu_derivative(z));
                delta = d;
            }
        }
        Ok(grads)
    }

    /// `self += scale * other`, tensor by tensor.
    pub fn add_scaled(&mut self, other: &MlpParams, scale: f64) {
        for (a, b) in self.tensors_mut().zip(other.tensors()) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += scale * y;
            }
        }
    }
}

/// `a` in row-major layout, copied only when needed.
fn standard(a: Array2<f64>) -> Array2<f64> {
    if a.is_standard_layout() {
        a
    } else {
        a.as_standard_layout().into_owned()
    }
}

/// Intermediate values of one forward pass.
#[derive(Debug, Clone)]
pub struct Tape {
    inputs: Vec<Array2<f64>>,
    pre_activations: Vec<Array2<f64>>,
    output: Array2<f64>,
}

impl Tape {
    pub fn output(&self) -> &Array2<f64> {
        &self.output
    }
}

/// Parameter gradients of `sum_i <upstream_i, f(x_i)>`.
pub fn mlp_backward(params: &MlpParams, x: ArrayView2<f64>, upstream: ArrayView2<f64>) -> Result<MlpParams> {
    let tape = params.forward_tape(x)?;
    params.backward(&tape, upstream)
}

use serde::{Deserialize, Serialize};

use super::MlpParams;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// Moment accumulators shaped like the parameters they update.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub config: AdamConfig,
    m: Vec<f64>,
    v: Vec<f64>,
    step_count: u64,
}

impl AdamState {
    pub fn new(params: &MlpParams, config: AdamConfig) -> Self {
        let n = params.num_params();
        Self { config, m: vec![0.0; n], v: vec![0.0; n], step_count: 0 }
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }
}

/// One bias-corrected Adam update, in the same arithmetic as PyTorch:
/// `theta -= lr / (1 - b1^t) * m / (sqrt(v) / sqrt(1 - b2^t) + eps)`.
pub fn adam_step(params: &mut MlpParams, grads: &MlpParams, state: &mut AdamState) -> Result<()> {
    if grads.layer_dims() != params.layer_dims() || state.m.len() != params.num_params() {
        return Err(Error::DimensionMismatch { expected: params.num_params(), got: grads.num_params() });
    }
    if !grads.is_finite() {
        return Err(Error::NonFiniteGradient);
    }
    state.step_count += 1;
    let AdamConfig { lr, beta1, beta2, eps } = state.config;
    let t = state.step_count as i32;
    let step_size = lr / (1.0 - beta1.powi(t));
    let bc2_sqrt = (1.0 - beta2.powi(t)).sqrt();

    let mut offset = 0;
    for (p, g) in params.tensors_mut().zip(grads.tensors()) {
        let m = &mut state.m[offset..offset + p.len()];
        let v = &mut state.v[offset..offset + p.len()];
        for i in 0..p.len() {
            m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
            v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
            p[i] -= step_size * m[i] / (v[i].sqrt() / bc2_sqrt + eps);
        }
        offset += p.len();
    }
    Ok(())
}

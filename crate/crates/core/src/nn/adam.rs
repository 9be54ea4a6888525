use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{Gradients, MlpModel, NnError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamParams {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        Self { beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

impl AdamParams {
    pub fn validate(&self) -> Result<(), NnError> {
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(NnError::InvalidConfig(format!("betas must lie in [0, 1): {} {}", self.beta1, self.beta2)));
        }
        if !(self.epsilon > 0.0) {
            return Err(NnError::InvalidConfig(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        Ok(())
    }
}

/// First and second moment estimates, one matrix per weight matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: [DMatrix<f64>; 3],
    pub v: [DMatrix<f64>; 3],
    pub t: u64,
}

impl AdamState {
    pub fn new(model: &MlpModel) -> Self {
        let zeros = || model.weights().each_ref().map(|w| DMatrix::zeros(w.nrows(), w.ncols()));
        Self { m: zeros(), v: zeros(), t: 0 }
    }
}

/// One Adam update. `t` is incremented before the bias corrections.
pub fn adam_step(
    state: &mut AdamState,
    model: &mut MlpModel,
    grads: &Gradients,
    alpha: f64,
    p: &AdamParams,
) -> Result<(), NnError> {
    for l in 0..3 {
        if grads.0[l].shape() != model.weights()[l].shape() || state.m[l].shape() != grads.0[l].shape() {
            return Err(NnError::shape(
                &format!("gradient {}", l + 1),
                format!("{:?}", model.weights()[l].shape()),
                format!("{:?}", grads.0[l].shape()),
            ));
        }
    }
    state.t += 1;
    let t = i32::try_from(state.t).unwrap_or(i32::MAX);
    let c1 = 1.0 - p.beta1.powi(t);
    let c2 = 1.0 - p.beta2.powi(t);
    for (l, w) in model.weights_mut().iter_mut().enumerate() {
        let g = &grads.0[l];
        let m = &mut state.m[l];
        let v = &mut state.v[l];
        for i in 0..w.len() {
            m[i] = p.beta1 * m[i] + (1.0 - p.beta1) * g[i];
            v[i] = p.beta2 * v[i] + (1.0 - p.beta2) * g[i] * g[i];
            let m_hat = m[i] / c1;
            let v_hat = v[i] / c2;
            w[i] -= alpha * m_hat / (v_hat.sqrt() + p.epsilon);
        }
    }
    Ok(())
}

/// `α = 1 / (γ · n_e)` for the 1-based epoch number `n_e`.
pub fn alpha_schedule(epoch: usize, gamma: f64) -> Result<f64, NnError> {
    if epoch < 1 {
        return Err(NnError::InvalidEpoch(epoch));
    }
    if !(gamma > 0.0) {
        return Err(NnError::InvalidConfig(format!("gamma must be positive, got {gamma}")));
    }
    Ok(1.0 / (gamma * epoch as f64))
}

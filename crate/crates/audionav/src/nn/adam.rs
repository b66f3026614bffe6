use serde::{Deserialize, Serialize};

use super::array::{Array, Scalar};
use super::params::ParameterSet;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { learning_rate: 2.5e-4, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

/// First/second moments per parameter, aligned with the parameter set's
/// insertion order.
#[derive(Debug, Clone)]
pub struct AdamState<T: Scalar> {
    m: Vec<Array<T>>,
    v: Vec<Array<T>>,
    step: u64,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(params: &ParameterSet<T>) -> Self {
        AdamState {
            m: params.iter().map(|(_, a)| Array::zeros(a.shape())).collect(),
            v: params.iter().map(|(_, a)| Array::zeros(a.shape())).collect(),
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }
}

/// One bias-corrected Adam update. `grads` must be aligned with the
/// parameter set's insertion order.
pub fn adam_step<T: Scalar>(
    params: &mut ParameterSet<T>,
    grads: &[Array<T>],
    state: &mut AdamState<T>,
    config: &AdamConfig,
) {
    assert_eq!(grads.len(), params.len(), "gradient count mismatch");
    state.step += 1;
    let t = state.step as i32;
    let b1 = T::from_f64(config.beta1);
    let b2 = T::from_f64(config.beta2);
    let one = T::one();
    let lr = T::from_f64(config.learning_rate);
    let eps = T::from_f64(config.epsilon);
    let bc1 = one - b1.powi(t);
    let bc2 = one - b2.powi(t);

    for (pi, (_, value)) in params.iter_mut().enumerate() {
        let g = &grads[pi];
        assert_eq!(g.shape(), value.shape(), "gradient shape mismatch at index {pi}");
        let m = &mut state.m[pi];
        let v = &mut state.v[pi];
        for i in 0..g.numel() {
            let gi = g.data()[i];
            let mi = b1 * m.data()[i] + (one - b1) * gi;
            let vi = b2 * v.data()[i] + (one - b2) * gi * gi;
            m.data_mut()[i] = mi;
            v.data_mut()[i] = vi;
            let m_hat = mi / bc1;
            let v_hat = vi / bc2;
            value.data_mut()[i] = value.data()[i] - lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
}

use serde::{Deserialize, Serialize};

use super::ParamSet;

/// Adam optimiser state (bias-corrected moments).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(params: &ParamSet, lr: f64, beta1: f64, beta2: f64) -> Self {
        let zeros = || params.iter().map(|(_, t)| vec![0.0; t.len()]).collect();
        AdamState {
            lr,
            beta1,
            beta2,
            eps: 1e-8,
            step: 0,
            m: zeros(),
            v: zeros(),
        }
    }
}

/// One Adam update from the gradients currently stored in `params`, then
/// zeroes them.
pub fn adam_step(params: &mut ParamSet, state: &mut AdamState) {
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - state.beta1.powi(t);
    let c2 = 1.0 - state.beta2.powi(t);
    for id in 0..params.len() {
        let p = params.get_mut(id);
        let Some(grad) = p.grad.take() else { continue };
        let (m, v) = (&mut state.m[id], &mut state.v[id]);
        for (i, &g) in grad.iter().enumerate() {
            m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g;
            v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g * g;
            let m_hat = m[i] / c1;
            let v_hat = v[i] / c2;
            p.data[i] -= state.lr * m_hat / (v_hat.sqrt() + state.eps);
        }
        p.grad = Some(vec![0.0; grad.len()]);
    }
}

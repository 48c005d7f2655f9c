#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum GaeError {
    #[error("expected {expected} values (rewards + 1), got {found}")]
    Length { expected: usize, found: usize },
}

/// Generalized advantage estimates.
///
/// `values[t]` is `V(s_t)`; `values` carries one extra trailing entry for the
/// state after the last reward (0 for a terminal state). Computed with the
/// backward recursion `A_t = δ_t + γλ A_{t+1}`.
pub fn gae(rewards: &[f64], values: &[f64], gamma: f64, lambda: f64) -> Result<Vec<f64>, GaeError> {
    if values.len() != rewards.len() + 1 {
        return Err(GaeError::Length {
            expected: rewards.len() + 1,
            found: values.len(),
        });
    }
    let mut adv = vec![0.0; rewards.len()];
    let mut running = 0.0;
    for t in (0..rewards.len()).rev() {
        let delta = rewards[t] + gamma * values[t + 1] - values[t];
        running = delta + gamma * lambda * running;
        adv[t] = running;
    }
    Ok(adv)
}

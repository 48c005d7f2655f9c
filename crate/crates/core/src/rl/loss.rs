use crate::gcn::{build_inputs, NetError, PolicyNet};
use crate::graph::Graph;
use crate::tensor::{ParamSet, Tape, Tensor};

use super::config::ValueTarget;
use super::env::{EliminationEnv, Episode};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossWeights {
    pub beta_value: f64,
    pub beta_entropy: f64,
    pub value_target: ValueTarget,
}

/// Per-episode loss terms, each summed over the steps.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LossStats {
    pub policy: f64,
    pub value: f64,
    pub entropy: f64,
    pub total: f64,
}

impl LossStats {
    pub(crate) fn add_scaled(&mut self, other: &LossStats, s: f64) {
        self.policy += s * other.policy;
        self.value += s * other.value;
        self.entropy += s * other.entropy;
        self.total += s * other.total;
    }
}

/// Replays `episode` from `g` and evaluates
/// `policy + β_v·value − β_e·entropy` with
///
/// * policy `= −Σ_t A_t log π(u_t | s_t)`,
/// * value `= Σ_t (y_t − V(s_t))²` where `y_t = A_t + V_old(s_t)` or just
///   `A_t` under [`ValueTarget::LiteralAdvantage`],
/// * entropy `= Σ_t H(π(· | s_t))`.
///
/// Advantages and targets are constants. When `grads` is given, `scale ×`
/// the gradient of the total is added into its buffers.
pub fn episode_loss(
    net: &PolicyNet,
    g: &Graph,
    episode: &Episode,
    advantages: &[f64],
    weights: LossWeights,
    scale: f64,
    mut grads: Option<&mut ParamSet>,
) -> Result<LossStats, NetError> {
    assert_eq!(
        advantages.len(),
        episode.len(),
        "advantages must align with steps"
    );
    let mut env = EliminationEnv::new(g);
    let mut stats = LossStats::default();
    for (t, &u) in episode.actions.iter().enumerate() {
        let inputs = build_inputs(env.graph())?;
        let idx = inputs
            .ids
            .binary_search(&u)
            .expect("replayed action is live");
        let mask = vec![true; inputs.ids.len()];
        let mut tape = Tape::new();
        let (logits, value) = net.record(&mut tape, &inputs)?;

        let logp = tape.log_softmax_masked(logits, &mask)?;
        let chosen = tape.gather_rows(logp, &[idx])?;
        let policy = tape.scale(chosen, -advantages[t]);

        let target = match weights.value_target {
            ValueTarget::Return => advantages[t] + episode.values[t],
            ValueTarget::LiteralAdvantage => advantages[t],
        };
        let y = tape.leaf(Tensor::scalar(target));
        let diff = tape.sub(y, value)?;
        let sq = tape.mul(diff, diff)?;

        // Σ p log p = −H
        let p = tape.softmax_masked(logits, &mask)?;
        let plogp = tape.mul(p, logp)?;
        let neg_h = tape.sum(plogp);

        let v_term = tape.scale(sq, weights.beta_value);
        let e_term = tape.scale(neg_h, weights.beta_entropy);
        let total = tape.add(policy, v_term)?;
        let total = tape.add(total, e_term)?;
        let total = tape.scale(total, scale);

        stats.policy += tape.value(policy).item();
        stats.value += tape.value(sq).item();
        stats.entropy -= tape.value(neg_h).item();
        stats.total += tape.value(total).item() / scale;
        if let Some(gr) = grads.as_deref_mut() {
            tape.backward(total, gr)?;
        }
        env.step(u).expect("replayed action is live");
    }
    Ok(stats)
}

//! Graph-convolutional policy/value network.
//!
//! Three GCN layers `H' = ELU(Â H W + b)` with `Â = D^{-1/2}(A + I)D^{-1/2}`
//! produce node embeddings. A weight-shared two-layer head maps each node
//! embedding to one logit; a second two-layer head maps the mean embedding
//! to the state value. Input features are inverse degrees.

use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::graph::{Graph, NodeId};
use crate::rng::{self, ChaCha8Rng};
use crate::tensor::{
    softmax, AdamState, Checkpoint, CheckpointError, ParamId, ParamSet, Tape, Tensor, TensorError,
    Var,
};

pub const FEATURE_VERSION: &str = "inverse-degree-v1";

/// Architecture description stored next to checkpoints as JSON.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetConfig {
    pub input_dim: usize,
    pub hidden: usize,
    pub gcn_layers: usize,
    pub feature_version: String,
}

impl Default for NetConfig {
    fn default() -> Self {
        NetConfig {
            input_dim: 1,
            hidden: 64,
            gcn_layers: 3,
            feature_version: FEATURE_VERSION.to_string(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum NetError {
    #[error("graph has no nodes")]
    EmptyGraph,
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error("checkpoint block `{name}` has shape {found:?}, expected {expected:?}")]
    BlockShape {
        name: String,
        expected: Vec<usize>,
        found: Vec<usize>,
    },
    #[error("unsupported net config: {0}")]
    Config(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid net config json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Linear {
    weight: ParamId,
    bias: ParamId,
}

/// Dense network inputs for one graph state.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphInputs {
    /// `D^{-1/2}(A + I)D^{-1/2}` over the current nodes.
    pub adjacency: Tensor,
    /// `n × 1` inverse degrees; isolated nodes get 1.
    pub features: Tensor,
    /// Row `i` corresponds to node `ids[i]` (ascending).
    pub ids: Vec<NodeId>,
}

/// Builds the normalised adjacency and inverse-degree features of `g`.
pub fn build_inputs(g: &Graph) -> Result<GraphInputs, NetError> {
    if g.is_empty() {
        return Err(NetError::EmptyGraph);
    }
    let ids: Vec<NodeId> = g.nodes().collect();
    let index = g.index_map();
    let n = ids.len();
    let inv_sqrt: Vec<f64> = ids
        .iter()
        .map(|&v| 1.0 / ((g.degree(v).unwrap() + 1) as f64).sqrt())
        .collect();
    let mut adj = vec![0.0; n * n];
    for (i, &v) in ids.iter().enumerate() {
        adj[i * n + i] = inv_sqrt[i] * inv_sqrt[i];
        for &w in g.neighbors(v).unwrap() {
            let j = index[&w];
            adj[i * n + j] = inv_sqrt[i] * inv_sqrt[j];
        }
    }
    let features = ids
        .iter()
        .map(|&v| match g.degree(v).unwrap() {
            0 => 1.0,
            d => 1.0 / d as f64,
        })
        .collect();
    Ok(GraphInputs {
        adjacency: Tensor::matrix(n, n, adj)?,
        features: Tensor::column(features),
        ids,
    })
}

/// Output of a forward pass.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub ids: Vec<NodeId>,
    pub logits: Vec<f64>,
    pub value: f64,
}

impl Evaluation {
    /// Softmax over all current nodes.
    pub fn probabilities(&self) -> Vec<f64> {
        softmax(&self.logits)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ActMode {
    Sample,
    Greedy,
}

/// A chosen action with its statistics under the current policy.
#[derive(Clone, Debug, PartialEq)]
pub struct Action {
    pub node: NodeId,
    pub log_prob: f64,
    pub value: f64,
    pub entropy: f64,
    pub probabilities: Vec<f64>,
}

/// The policy/value network and its parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyNet {
    config: NetConfig,
    params: ParamSet,
    gcn: Vec<Linear>,
    policy: [Linear; 2],
    value: [Linear; 2],
}

impl PolicyNet {
    /// Glorot-uniform weights and zero biases from a seeded generator.
    pub fn new(config: NetConfig, seed: u64) -> Result<Self, NetError> {
        if config.feature_version != FEATURE_VERSION || config.input_dim != 1 {
            return Err(NetError::Config(format!(
                "only {FEATURE_VERSION} features with input_dim 1 are supported"
            )));
        }
        if config.gcn_layers == 0 || config.hidden == 0 {
            return Err(NetError::Config(
                "need at least one layer of positive width".into(),
            ));
        }
        let mut rng = rng::seeded(seed);
        let mut params = ParamSet::new();
        let h = config.hidden;
        let mut gcn = Vec::new();
        for l in 0..config.gcn_layers {
            let fan_in = if l == 0 { config.input_dim } else { h };
            gcn.push(linear(
                &mut params,
                &mut rng,
                &format!("gcn.{l}"),
                fan_in,
                h,
            ));
        }
        let policy = [
            linear(&mut params, &mut rng, "policy.0", h, h),
            linear(&mut params, &mut rng, "policy.1", h, 1),
        ];
        let value = [
            linear(&mut params, &mut rng, "value.0", h, h),
            linear(&mut params, &mut rng, "value.1", h, 1),
        ];
        Ok(PolicyNet {
            config,
            params,
            gcn,
            policy,
            value,
        })
    }

    pub fn config(&self) -> &NetConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    /// Records the forward pass on `tape`. Returns `n × 1` logits and the
    /// `1 × 1` value.
    pub fn record(&self, tape: &mut Tape, inputs: &GraphInputs) -> Result<(Var, Var), NetError> {
        let adj = tape.leaf(inputs.adjacency.clone());
        let mut h = tape.leaf(inputs.features.clone());
        for layer in &self.gcn {
            let w = tape.param(&self.params, layer.weight);
            let b = tape.param(&self.params, layer.bias);
            let hw = tape.matmul(h, w)?;
            let agg = tape.matmul(adj, hw)?;
            let pre = tape.add_row(agg, b)?;
            h = tape.elu(pre);
        }
        let logits = self.head(tape, h, &self.policy)?;
        let pooled = tape.mean_rows(h)?;
        let value = self.head(tape, pooled, &self.value)?;
        Ok((logits, value))
    }

    fn head(&self, tape: &mut Tape, x: Var, layers: &[Linear; 2]) -> Result<Var, NetError> {
        let w0 = tape.param(&self.params, layers[0].weight);
        let b0 = tape.param(&self.params, layers[0].bias);
        let z = tape.matmul(x, w0)?;
        let z = tape.add_row(z, b0)?;
        let z = tape.elu(z);
        let w1 = tape.param(&self.params, layers[1].weight);
        let b1 = tape.param(&self.params, layers[1].bias);
        let z = tape.matmul(z, w1)?;
        Ok(tape.add_row(z, b1)?)
    }

    /// Logits for every current node (ascending id) and the state value.
    pub fn forward(&self, g: &Graph) -> Result<Evaluation, NetError> {
        let inputs = build_inputs(g)?;
        let mut tape = Tape::new();
        let (logits, value) = self.record(&mut tape, &inputs)?;
        Ok(Evaluation {
            logits: tape.value(logits).data().to_vec(),
            value: tape.value(value).item(),
            ids: inputs.ids,
        })
    }

    /// Picks a node by sampling the softmax policy or greedily. Greedy ties
    /// (logits within `1e-12` relative of the maximum) go to the lowest id.
    pub fn act(&self, g: &Graph, mode: ActMode, rng: &mut ChaCha8Rng) -> Result<Action, NetError> {
        let eval = self.forward(g)?;
        let probs = eval.probabilities();
        let idx = match mode {
            ActMode::Sample => sample_index(&probs, rng),
            ActMode::Greedy => {
                let max = eval
                    .logits
                    .iter()
                    .copied()
                    .fold(f64::NEG_INFINITY, f64::max);
                let tol = 1e-12 * max.abs().max(1.0);
                eval.logits.iter().position(|&x| x >= max - tol).unwrap()
            }
        };
        Ok(Action {
            node: eval.ids[idx],
            log_prob: probs[idx].ln(),
            value: eval.value,
            entropy: entropy(&probs),
            probabilities: probs,
        })
    }

    /// Serialises parameters (and optionally the optimiser state).
    pub fn to_checkpoint(&self, adam: Option<&AdamState>) -> Checkpoint {
        let mut blocks: Vec<(String, Tensor)> = self
            .params
            .iter()
            .map(|(n, t)| (n.to_string(), t.detached()))
            .collect();
        if let Some(st) = adam {
            blocks.push((
                "adam.hyper".into(),
                Tensor::matrix(
                    1,
                    5,
                    vec![st.lr, st.beta1, st.beta2, st.eps, st.step as f64],
                )
                .unwrap(),
            ));
            for (id, (name, t)) in self.params.iter().enumerate() {
                let shape = t.shape().to_vec();
                blocks.push((
                    format!("adam.m.{name}"),
                    Tensor::new(shape.clone(), st.m[id].clone()).unwrap(),
                ));
                blocks.push((
                    format!("adam.v.{name}"),
                    Tensor::new(shape, st.v[id].clone()).unwrap(),
                ));
            }
        }
        Checkpoint { blocks }
    }

    /// Rebuilds a network from a checkpoint written by [`PolicyNet::to_checkpoint`].
    pub fn from_checkpoint(
        config: NetConfig,
        ck: &Checkpoint,
    ) -> Result<(Self, Option<AdamState>), NetError> {
        let mut net = PolicyNet::new(config, 0)?;
        for id in 0..net.params.len() {
            let name = net.params.name(id).to_string();
            let block = ck
                .get(&name)
                .ok_or_else(|| CheckpointError::Missing(name.clone()))?;
            let p = net.params.get_mut(id);
            if block.shape() != p.shape() {
                return Err(NetError::BlockShape {
                    name,
                    expected: p.shape().to_vec(),
                    found: block.shape().to_vec(),
                });
            }
            p.data_mut().copy_from_slice(block.data());
        }
        let adam = match ck.get("adam.hyper") {
            None => None,
            Some(h) => {
                let h = h.data();
                if h.len() != 5 {
                    return Err(
                        CheckpointError::Invalid("adam.hyper must hold 5 values".into()).into(),
                    );
                }
                let mut st = AdamState::new(&net.params, h[0], h[1], h[2]);
                st.eps = h[3];
                st.step = h[4] as u64;
                for (id, (name, t)) in net.params.iter().enumerate() {
                    for (prefix, buf) in [("adam.m.", &mut st.m[id]), ("adam.v.", &mut st.v[id])] {
                        let key = format!("{prefix}{name}");
                        let b = ck.get(&key).ok_or(CheckpointError::Missing(key))?;
                        if b.len() != t.len() {
                            return Err(CheckpointError::Invalid(format!(
                                "{prefix}{name} has wrong size"
                            ))
                            .into());
                        }
                        buf.copy_from_slice(b.data());
                    }
                }
                Some(st)
            }
        };
        Ok((net, adam))
    }

    /// Writes the checkpoint to `path` and the JSON config to `<path>.json`.
    pub fn save(&self, path: &Path, adam: Option<&AdamState>) -> Result<(), NetError> {
        std::fs::write(path, self.to_checkpoint(adam).to_bytes()).map_err(|e| io_error(path, e))?;
        let side = sidecar_path(path);
        let json = serde_json::to_string_pretty(&self.config)?;
        std::fs::write(&side, json).map_err(|e| io_error(&side, e))?;
        Ok(())
    }

    /// Loads a checkpoint; the sidecar config is used when present.
    pub fn load(path: &Path) -> Result<(Self, Option<AdamState>), NetError> {
        let bytes = std::fs::read(path).map_err(|e| io_error(path, e))?;
        let side = sidecar_path(path);
        let config = if side.exists() {
            serde_json::from_str(&std::fs::read_to_string(&side).map_err(|e| io_error(&side, e))?)?
        } else {
            NetConfig::default()
        };
        Self::from_checkpoint(config, &Checkpoint::from_bytes(&bytes)?)
    }
}

fn io_error(path: &Path, source: std::io::Error) -> NetError {
    NetError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn linear(
    params: &mut ParamSet,
    rng: &mut ChaCha8Rng,
    name: &str,
    fan_in: usize,
    fan_out: usize,
) -> Linear {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let w: Vec<f64> = (0..fan_in * fan_out)
        .map(|_| rng.gen_range(-limit..limit))
        .collect();
    Linear {
        weight: params.push(
            format!("{name}.weight"),
            Tensor::matrix(fan_in, fan_out, w).unwrap(),
        ),
        bias: params.push(format!("{name}.bias"), Tensor::zeros(1, fan_out)),
    }
}

/// Index drawn from a probability vector by inverse-CDF sampling.
pub fn sample_index(probs: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // rounding left `acc` just below 1: take the last index with mass
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// Shannon entropy in nats; zero-probability terms contribute 0.
pub fn entropy(probs: &[f64]) -> f64 {
    -probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.ln())
        .sum::<f64>()
}

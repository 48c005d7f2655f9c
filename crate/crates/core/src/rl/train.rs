use std::time::Instant;

use rayon::prelude::*;

use crate::gcn::{ActMode, NetConfig, NetError, PolicyNet};
use crate::graph::{generate_er, ErConfig, Graph};
use crate::rng::{derive_seed, seeded};
use crate::tensor::{adam_step, AdamState};

use super::config::{ConfigError, TrainConfig};
use super::env::{rollout, Episode};
use super::gae::gae;
use super::loss::{episode_loss, LossStats, LossWeights};

// seed sub-streams
const STREAM_INIT: u64 = 0;
const STREAM_EPISODES: u64 = 1;
const STREAM_GRAPHS: u64 = 2;

pub const LOG_HEADER: &str =
    "update_idx,mean_width,mean_return,policy_loss,value_loss,entropy,wall_ms";

/// Where each update's episodes are played.
#[derive(Clone, Debug, PartialEq)]
pub enum GraphSource {
    Fixed(Graph),
    /// A fresh Erdős–Rényi graph per update; `p = None` means `5/n`.
    Er {
        n: usize,
        p: Option<f64>,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error("training graph has no nodes")]
    EmptyGraph,
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// One row of the training log.
#[derive(Clone, Debug, PartialEq)]
pub struct UpdateLog {
    pub update_idx: u64,
    pub mean_width: f64,
    pub mean_return: f64,
    /// Per-episode loss terms averaged over the update's episodes.
    pub policy_loss: f64,
    pub value_loss: f64,
    /// Mean policy entropy per step.
    pub entropy: f64,
    pub wall_ms: u64,
}

impl UpdateLog {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.update_idx,
            self.mean_width,
            self.mean_return,
            self.policy_loss,
            self.value_loss,
            self.entropy,
            self.wall_ms
        )
    }
}

/// Actor-critic trainer. Owns the network and the optimiser state.
///
/// Episodes within an update are collected in parallel, each from its own
/// seed derived from `(config.seed, update index, episode index)`, and their
/// gradients are summed in episode order, so results do not depend on the
/// number of worker threads.
#[derive(Clone, Debug)]
pub struct Trainer {
    net: PolicyNet,
    adam: AdamState,
    config: TrainConfig,
    source: GraphSource,
}

impl Trainer {
    pub fn new(
        source: GraphSource,
        config: TrainConfig,
        net_config: NetConfig,
    ) -> Result<Self, TrainError> {
        let net = PolicyNet::new(net_config, derive_seed(config.seed, STREAM_INIT))?;
        Self::resume(net, None, source, config)
    }

    /// Continues from an existing network. A stored optimiser state keeps
    /// its moments and step count; the learning rate and betas come from
    /// `config`.
    pub fn resume(
        net: PolicyNet,
        adam: Option<AdamState>,
        source: GraphSource,
        config: TrainConfig,
    ) -> Result<Self, TrainError> {
        config.validate()?;
        if let GraphSource::Fixed(g) = &source {
            if g.is_empty() {
                return Err(TrainError::EmptyGraph);
            }
        }
        if matches!(source, GraphSource::Er { n: 0, .. }) {
            return Err(TrainError::EmptyGraph);
        }
        let mut adam = adam
            .unwrap_or_else(|| AdamState::new(net.params(), config.lr, config.beta1, config.beta2));
        adam.lr = config.lr;
        adam.beta1 = config.beta1;
        adam.beta2 = config.beta2;
        Ok(Trainer {
            net,
            adam,
            config,
            source,
        })
    }

    pub fn net(&self) -> &PolicyNet {
        &self.net
    }

    pub fn adam(&self) -> &AdamState {
        &self.adam
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn into_parts(self) -> (PolicyNet, AdamState) {
        (self.net, self.adam)
    }

    /// Index of the next update (the optimiser step count).
    pub fn update_index(&self) -> u64 {
        self.adam.step
    }

    fn graph_for(&self, update: u64) -> Graph {
        match &self.source {
            GraphSource::Fixed(g) => g.clone(),
            GraphSource::Er { n, p } => {
                let seed = derive_seed(derive_seed(self.config.seed, STREAM_GRAPHS), update);
                let mut cfg = ErConfig::new(*n, seed);
                if let Some(p) = p {
                    cfg = cfg.with_probability(*p);
                }
                generate_er(cfg)
            }
        }
    }

    /// Collects a batch of episodes and applies one Adam step.
    pub fn step(&mut self) -> Result<UpdateLog, TrainError> {
        let started = Instant::now();
        let cfg = &self.config;
        let update = self.adam.step;
        let g = self.graph_for(update);
        let base = derive_seed(derive_seed(cfg.seed, STREAM_EPISODES), update);
        let net = &self.net;

        let episodes: Vec<Episode> = (0..cfg.episodes_per_update as u64)
            .into_par_iter()
            .map(|e| rollout(net, &g, ActMode::Sample, &mut seeded(derive_seed(base, e))))
            .collect::<Result<_, _>>()?;

        let mut advantages: Vec<Vec<f64>> = episodes
            .iter()
            .map(|ep| {
                let mut v = ep.values.clone();
                v.push(0.0);
                gae(&ep.rewards, &v, cfg.gamma, cfg.lambda).expect("values padded")
            })
            .collect();
        if cfg.normalize_advantages {
            normalize(&mut advantages);
        }

        let weights = LossWeights {
            beta_value: cfg.beta_value,
            beta_entropy: cfg.beta_entropy,
            value_target: cfg.value_target,
        };
        let scale = 1.0 / episodes.len() as f64;
        let per_episode: Vec<_> = episodes
            .par_iter()
            .zip(&advantages)
            .map(|(ep, adv)| {
                let mut grads = net.params().clone();
                grads.zero_grad();
                episode_loss(net, &g, ep, adv, weights, scale, Some(&mut grads)).map(|s| (s, grads))
            })
            .collect::<Result<_, _>>()?;

        let mut stats = LossStats::default();
        let params = self.net.params_mut();
        params.zero_grad();
        for (s, grads) in &per_episode {
            stats.add_scaled(s, scale);
            params.accumulate_grads_from(grads, 1.0);
        }
        adam_step(params, &mut self.adam);

        let steps: usize = episodes.iter().map(Episode::len).sum();
        let entropy_sum: f64 = episodes.iter().flat_map(|e| &e.entropies).sum();
        Ok(UpdateLog {
            update_idx: update,
            mean_width: episodes.iter().map(|e| e.width as f64).sum::<f64>() * scale,
            mean_return: episodes.iter().map(Episode::total_reward).sum::<f64>() * scale,
            policy_loss: stats.policy,
            value_loss: stats.value,
            entropy: entropy_sum / steps as f64,
            wall_ms: if self.config.log_wall_time {
                started.elapsed().as_millis() as u64
            } else {
                0
            },
        })
    }

    /// Runs `epochs × updates_per_epoch` updates, reporting each one.
    pub fn run(
        &mut self,
        mut on_update: impl FnMut(&UpdateLog),
    ) -> Result<Vec<UpdateLog>, TrainError> {
        let mut logs = Vec::with_capacity(self.config.total_updates());
        for _ in 0..self.config.total_updates() {
            let row = self.step()?;
            on_update(&row);
            logs.push(row);
        }
        Ok(logs)
    }
}

fn normalize(advantages: &mut [Vec<f64>]) {
    let all: Vec<f64> = advantages.iter().flatten().copied().collect();
    if all.is_empty() {
        return;
    }
    let mean = all.iter().sum::<f64>() / all.len() as f64;
    let var = all.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / all.len() as f64;
    let sd = var.sqrt();
    for a in advantages.iter_mut().flatten() {
        *a -= mean;
        if sd > 1e-12 {
            *a /= sd;
        }
    }
}

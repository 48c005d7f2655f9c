use crate::gcn::{ActMode, NetError, PolicyNet};
use crate::graph::{Graph, GraphError, NodeId};
use crate::rng::ChaCha8Rng;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum EnvError {
    #[error("node {0} is not in the current graph")]
    MissingNode(NodeId),
}

/// Reward for a step whose running maximum degree is `c`.
///
/// Non-terminal steps pay `-ln c`; `c` is clamped to 1 inside the log so
/// eliminating isolated nodes first stays finite. The last step pays `-c`.
pub fn reward(c: usize, terminal: bool) -> f64 {
    if terminal {
        -(c as f64)
    } else {
        -(c.max(1) as f64).ln()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepOutcome {
    pub reward: f64,
    pub done: bool,
    /// Degree of the eliminated node just before removal.
    pub degree: usize,
}

/// Deterministic elimination environment.
#[derive(Clone, Debug)]
pub struct EliminationEnv {
    initial: Graph,
    graph: Graph,
    running_max: usize,
    t: usize,
}

impl EliminationEnv {
    pub fn new(g: &Graph) -> Self {
        EliminationEnv {
            initial: g.clone(),
            graph: g.clone(),
            running_max: 0,
            t: 0,
        }
    }

    pub fn reset(&mut self) {
        self.graph = self.initial.clone();
        self.running_max = 0;
        self.t = 0;
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn running_max(&self) -> usize {
        self.running_max
    }

    pub fn steps(&self) -> usize {
        self.t
    }

    pub fn is_done(&self) -> bool {
        self.graph.is_empty()
    }

    pub fn step(&mut self, u: NodeId) -> Result<StepOutcome, EnvError> {
        let (nbrs, _) = self.graph.eliminate_in_place(u).map_err(|e| match e {
            GraphError::MissingNode(v) => EnvError::MissingNode(v),
            GraphError::SelfLoop(v) => EnvError::MissingNode(v),
        })?;
        self.running_max = self.running_max.max(nbrs.len());
        self.t += 1;
        let done = self.graph.is_empty();
        Ok(StepOutcome {
            reward: reward(self.running_max, done),
            done,
            degree: nbrs.len(),
        })
    }
}

/// One trajectory. States are not stored: they are recovered by replaying
/// `actions` from the starting graph.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Episode {
    pub actions: Vec<NodeId>,
    pub rewards: Vec<f64>,
    pub log_probs: Vec<f64>,
    pub values: Vec<f64>,
    pub entropies: Vec<f64>,
    pub width: usize,
}

impl Episode {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn total_reward(&self) -> f64 {
        self.rewards.iter().sum()
    }

    pub fn order(&self) -> crate::EliminationOrder {
        crate::EliminationOrder(self.actions.clone())
    }
}

/// Plays one full episode with `net`.
pub fn rollout(
    net: &PolicyNet,
    g: &Graph,
    mode: ActMode,
    rng: &mut ChaCha8Rng,
) -> Result<Episode, NetError> {
    let mut env = EliminationEnv::new(g);
    let mut ep = Episode::default();
    while !env.is_done() {
        let a = net.act(env.graph(), mode, rng)?;
        let out = env.step(a.node).expect("policy picked a live node");
        ep.actions.push(a.node);
        ep.rewards.push(out.reward);
        ep.log_probs.push(a.log_prob);
        ep.values.push(a.value);
        ep.entropies.push(a.entropy);
    }
    ep.width = env.running_max();
    Ok(ep)
}

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Graph;
use crate::rng;

/// Erdős–Rényi G(n, p) parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErConfig {
    pub n: usize,
    pub edge_probability: f64,
    pub seed: u64,
}

impl ErConfig {
    /// `p = 5/n`, capped at 1.
    pub fn new(n: usize, seed: u64) -> Self {
        ErConfig {
            n,
            edge_probability: (5.0 / n.max(1) as f64).min(1.0),
            seed,
        }
    }

    pub fn with_probability(mut self, p: f64) -> Self {
        self.edge_probability = p;
        self
    }
}

/// Samples G(n, p) on nodes `1..=n`.
///
/// Candidate pairs are visited in lexicographic order and each consumes one
/// Bernoulli draw, so the output depends only on `(n, p, seed)`.
///
/// # Panics
/// If `n == 0` or `p` lies outside `[0, 1]`.
pub fn generate_er(config: ErConfig) -> Graph {
    assert!(config.n >= 1, "ER graph needs at least one node");
    assert!(
        (0.0..=1.0).contains(&config.edge_probability),
        "edge probability {} outside [0, 1]",
        config.edge_probability
    );
    let mut rng = rng::seeded(config.seed);
    let mut g = Graph::with_nodes(config.n);
    for u in 1..=config.n {
        for v in u + 1..=config.n {
            if rng.gen_bool(config.edge_probability) {
                g.add_edge(u, v).expect("nodes exist");
            }
        }
    }
    g
}

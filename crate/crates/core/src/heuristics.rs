//! Greedy elimination orders: min-degree, min-fill and uniform random.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::elimination::{fill_in_count, EliminationOrder};
use crate::graph::{Graph, NodeId};
use crate::rng;

/// How ties between equally scored nodes are broken.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum TieBreak {
    /// Lowest node id wins.
    #[default]
    LowestId,
    /// Each node gets a seeded random priority; the lowest priority wins.
    Random(u64),
}

impl TieBreak {
    fn priorities(self, g: &Graph) -> BTreeMap<NodeId, u64> {
        match self {
            TieBreak::LowestId => g.nodes().map(|v| (v, v as u64)).collect(),
            TieBreak::Random(seed) => {
                let mut rng = rng::seeded(seed);
                g.nodes().map(|v| (v, rng.gen())).collect()
            }
        }
    }
}

#[derive(Clone, Copy)]
enum Score {
    Degree,
    Fill,
}

/// Repeatedly eliminates a node of minimum current degree.
pub fn min_degree_order(g: &Graph, ties: TieBreak) -> EliminationOrder {
    greedy(g, ties, Score::Degree)
}

/// Repeatedly eliminates a node whose elimination adds the fewest fill edges.
pub fn min_fill_order(g: &Graph, ties: TieBreak) -> EliminationOrder {
    greedy(g, ties, Score::Fill)
}

/// Uniformly random permutation of the nodes of `g`.
pub fn random_order(g: &Graph, seed: u64) -> EliminationOrder {
    let mut order: Vec<NodeId> = g.nodes().collect();
    order.shuffle(&mut rng::seeded(seed));
    EliminationOrder(order)
}

fn greedy(g: &Graph, ties: TieBreak, kind: Score) -> EliminationOrder {
    let prio = ties.priorities(g);
    let mut work = g.clone();
    let score_of = |w: &Graph, v: NodeId| -> usize {
        match kind {
            Score::Degree => w.degree(v).unwrap(),
            Score::Fill => fill_in_count(w, v).unwrap(),
        }
    };
    let mut score: BTreeMap<NodeId, usize> =
        work.nodes().map(|v| (v, score_of(&work, v))).collect();
    let mut queue: BTreeSet<(usize, u64, NodeId)> =
        score.iter().map(|(&v, &s)| (s, prio[&v], v)).collect();

    let mut order = Vec::with_capacity(g.node_count());
    while let Some((_, _, u)) = queue.pop_first() {
        score.remove(&u);
        let (nbrs, fill) = work
            .eliminate_in_place(u)
            .expect("queued nodes are present");
        order.push(u);

        // Degrees change only on N(u). Fill counts also change for nodes
        // adjacent to a fill edge's endpoints, i.e. the second neighbourhood.
        let mut touched: BTreeSet<NodeId> = nbrs.clone();
        if matches!(kind, Score::Fill) && fill > 0 {
            for &a in &nbrs {
                touched.extend(work.neighbors(a).unwrap().iter().copied());
            }
        }
        for v in touched {
            let old = score[&v];
            let new = score_of(&work, v);
            if old != new {
                queue.remove(&(old, prio[&v], v));
                queue.insert((new, prio[&v], v));
                score.insert(v, new);
            }
        }
    }
    EliminationOrder(order)
}

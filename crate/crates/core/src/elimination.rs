//! Width of an elimination order.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::bitset::BitSet;
use crate::graph::{Graph, GraphError, NodeId};

/// A permutation of a graph's nodes: `order[t]` is eliminated at step `t`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EliminationOrder(pub Vec<NodeId>);

impl EliminationOrder {
    pub fn as_slice(&self) -> &[NodeId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Checks that the order visits every node of `g` exactly once.
    pub fn check_permutation(&self, g: &Graph) -> Result<(), OrderError> {
        if self.0.len() != g.node_count() {
            return Err(OrderError::WrongLength {
                expected: g.node_count(),
                found: self.0.len(),
            });
        }
        let mut seen = BTreeSet::new();
        for &v in &self.0 {
            if !g.contains(v) {
                return Err(OrderError::UnknownNode(v));
            }
            if !seen.insert(v) {
                return Err(OrderError::Repeated(v));
            }
        }
        Ok(())
    }
}

impl From<Vec<NodeId>> for EliminationOrder {
    fn from(v: Vec<NodeId>) -> Self {
        EliminationOrder(v)
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum OrderError {
    #[error("order has {found} entries but the graph has {expected} nodes")]
    WrongLength { expected: usize, found: usize },
    #[error("node {0} is not in the graph")]
    UnknownNode(NodeId),
    #[error("node {0} appears more than once")]
    Repeated(NodeId),
}

/// Per-step record of an elimination run. `degrees[t]` is the degree of
/// `eliminated[t]` just before it was removed.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EliminationTrace {
    pub eliminated: Vec<NodeId>,
    pub degrees: Vec<usize>,
    pub fill_edges: Vec<usize>,
    pub running_max: Vec<usize>,
}

impl EliminationTrace {
    pub fn width(&self) -> usize {
        self.running_max.last().copied().unwrap_or(0)
    }
}

/// Width of `order` on `g`: the largest degree a node has at the moment it
/// is eliminated. The empty graph has width 0.
pub fn width_of_order(
    g: &Graph,
    order: &EliminationOrder,
) -> Result<(usize, EliminationTrace), OrderError> {
    order.check_permutation(g)?;
    let index = g.index_map();
    let n = g.node_count();
    let mut adj: Vec<BitSet> = vec![BitSet::new(n); n];
    for (u, v) in g.edges() {
        let (a, b) = (index[&u], index[&v]);
        adj[a].insert(b);
        adj[b].insert(a);
    }

    let mut trace = EliminationTrace::default();
    let mut width = 0;
    for &u in order.as_slice() {
        let i = index[&u];
        let nbrs = std::mem::replace(&mut adj[i], BitSet::new(0));
        let members: Vec<usize> = nbrs.iter().collect();
        let mut fill = 0;
        for &a in &members {
            adj[a].remove(i);
            // neighbours of `a` inside N(u) other than itself
            let known = adj[a].intersection_len(&nbrs);
            fill += members.len() - 1 - known;
            adj[a].union_with(&nbrs);
            adj[a].remove(a);
        }
        let degree = members.len();
        width = width.max(degree);
        trace.eliminated.push(u);
        trace.degrees.push(degree);
        trace.fill_edges.push(fill / 2);
        trace.running_max.push(width);
    }
    Ok((width, trace))
}

/// Number of non-adjacent pairs in the neighbourhood of `u`, i.e. the fill
/// edges eliminating `u` would introduce.
pub fn fill_in_count(g: &Graph, u: NodeId) -> Result<usize, GraphError> {
    let nbrs: Vec<NodeId> = g.neighbors(u)?.iter().copied().collect();
    let mut missing = 0;
    for (i, &a) in nbrs.iter().enumerate() {
        let na = g.neighbors(a)?;
        missing += nbrs[i + 1..].iter().filter(|b| !na.contains(b)).count();
    }
    Ok(missing)
}

//! Undirected simple graphs with stable node labels.
//!
//! Node ids are labels, not indices: eliminating a node never renumbers the
//! remaining ones. Code that needs dense indices (tensor construction, bit-set
//! searches) builds them on demand with [`Graph::index_map`].

mod er;
pub mod generators;
mod gr;

use std::collections::{BTreeMap, BTreeSet};

pub use er::{generate_er, ErConfig};
pub use gr::{parse_gr, write_gr, ParseError};

pub type NodeId = usize;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("node {0} is not in the graph")]
    MissingNode(NodeId),
    #[error("self-loop on node {0}")]
    SelfLoop(NodeId),
}

/// Undirected simple graph. Adjacency is kept symmetric; self-loops and
/// parallel edges are impossible by construction.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Graph {
    adj: BTreeMap<NodeId, BTreeSet<NodeId>>,
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Graph on the nodes `1..=n` with no edges.
    pub fn with_nodes(n: usize) -> Self {
        let mut g = Graph::new();
        for v in 1..=n {
            g.add_node(v);
        }
        g
    }

    /// Builds a graph from an edge list, adding endpoints as needed.
    pub fn from_edges(edges: impl IntoIterator<Item = (NodeId, NodeId)>) -> Self {
        let mut g = Graph::new();
        for (u, v) in edges {
            g.add_node(u);
            g.add_node(v);
            if u != v {
                g.add_edge(u, v).expect("endpoints were just added");
            }
        }
        g
    }

    pub fn add_node(&mut self, v: NodeId) {
        self.adj.entry(v).or_default();
    }

    /// Adds the edge `{u, v}`. Returns `Ok(false)` if it already existed.
    pub fn add_edge(&mut self, u: NodeId, v: NodeId) -> Result<bool, GraphError> {
        if u == v {
            return Err(GraphError::SelfLoop(u));
        }
        if !self.contains(u) {
            return Err(GraphError::MissingNode(u));
        }
        if !self.contains(v) {
            return Err(GraphError::MissingNode(v));
        }
        let fresh = self.adj.get_mut(&u).unwrap().insert(v);
        self.adj.get_mut(&v).unwrap().insert(u);
        Ok(fresh)
    }

    /// Removes the edge `{u, v}`. Returns whether it was present.
    pub fn remove_edge(&mut self, u: NodeId, v: NodeId) -> bool {
        let present = self.adj.get_mut(&u).is_some_and(|n| n.remove(&v));
        if present {
            self.adj.get_mut(&v).unwrap().remove(&u);
        }
        present
    }

    pub fn remove_node(&mut self, u: NodeId) -> Result<BTreeSet<NodeId>, GraphError> {
        let nbrs = self.adj.remove(&u).ok_or(GraphError::MissingNode(u))?;
        for w in &nbrs {
            self.adj.get_mut(w).unwrap().remove(&u);
        }
        Ok(nbrs)
    }

    pub fn contains(&self, v: NodeId) -> bool {
        self.adj.contains_key(&v)
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.adj.get(&u).is_some_and(|n| n.contains(&v))
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.values().map(BTreeSet::len).sum::<usize>() / 2
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    /// Node ids in ascending order.
    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.adj.keys().copied()
    }

    /// Edges `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.adj
            .iter()
            .flat_map(|(&u, n)| n.range(u + 1..).map(move |&v| (u, v)))
    }

    pub fn neighbors(&self, u: NodeId) -> Result<&BTreeSet<NodeId>, GraphError> {
        self.adj.get(&u).ok_or(GraphError::MissingNode(u))
    }

    pub fn degree(&self, u: NodeId) -> Result<usize, GraphError> {
        self.neighbors(u).map(BTreeSet::len)
    }

    /// Maps each node id to its rank in ascending id order.
    pub fn index_map(&self) -> BTreeMap<NodeId, usize> {
        self.nodes().enumerate().map(|(i, v)| (v, i)).collect()
    }

    /// Returns a copy of the graph with `u` removed and its former
    /// neighbourhood turned into a clique.
    pub fn eliminate_node(&self, u: NodeId) -> Result<Graph, GraphError> {
        let mut g = self.clone();
        g.eliminate_in_place(u)?;
        Ok(g)
    }

    /// In-place elimination. Returns the neighbourhood of `u` at elimination
    /// time and the number of fill edges introduced.
    pub fn eliminate_in_place(
        &mut self,
        u: NodeId,
    ) -> Result<(BTreeSet<NodeId>, usize), GraphError> {
        let nbrs = self.remove_node(u)?;
        let mut fill = 0;
        let list: Vec<NodeId> = nbrs.iter().copied().collect();
        for (i, &a) in list.iter().enumerate() {
            for &b in &list[i + 1..] {
                if self.adj.get_mut(&a).unwrap().insert(b) {
                    self.adj.get_mut(&b).unwrap().insert(a);
                    fill += 1;
                }
            }
        }
        Ok((nbrs, fill))
    }

    /// True when every pair of remaining nodes is adjacent.
    pub fn is_complete(&self) -> bool {
        let n = self.node_count();
        self.adj.values().all(|s| s.len() + 1 == n)
    }

    /// Connected components, each sorted ascending, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<NodeId>> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for start in self.nodes() {
            if !seen.insert(start) {
                continue;
            }
            let mut comp = vec![start];
            let mut stack = vec![start];
            while let Some(v) = stack.pop() {
                for &w in &self.adj[&v] {
                    if seen.insert(w) {
                        comp.push(w);
                        stack.push(w);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// Subgraph induced by `nodes` (ids are kept).
    pub fn induced(&self, nodes: &[NodeId]) -> Graph {
        let keep: BTreeSet<NodeId> = nodes
            .iter()
            .copied()
            .filter(|v| self.contains(*v))
            .collect();
        let adj = keep
            .iter()
            .map(|&v| (v, self.adj[&v].intersection(&keep).copied().collect()))
            .collect();
        Graph { adj }
    }

    /// Applies a relabelling. `map` must be injective on the node set.
    pub fn relabel(&self, map: impl Fn(NodeId) -> NodeId) -> Graph {
        let adj = self
            .adj
            .iter()
            .map(|(&v, n)| (map(v), n.iter().map(|&w| map(w)).collect()))
            .collect();
        Graph { adj }
    }

    /// BFS hop distance from `src` to every reachable node.
    pub fn distances_from(&self, src: NodeId) -> BTreeMap<NodeId, usize> {
        let mut dist = BTreeMap::new();
        if !self.contains(src) {
            return dist;
        }
        dist.insert(src, 0);
        let mut queue = std::collections::VecDeque::from([src]);
        while let Some(v) = queue.pop_front() {
            let d = dist[&v];
            for &w in &self.adj[&v] {
                dist.entry(w).or_insert_with(|| {
                    queue.push_back(w);
                    d + 1
                });
            }
        }
        dist
    }
}

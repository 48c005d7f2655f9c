//! Deterministic and seeded graph families used as fixtures and oracles.

use rand::seq::SliceRandom;
use rand::Rng;

use super::{Graph, NodeId};
use crate::rng;

pub fn path(n: usize) -> Graph {
    let mut g = Graph::with_nodes(n);
    for v in 1..n {
        g.add_edge(v, v + 1).unwrap();
    }
    g
}

pub fn cycle(n: usize) -> Graph {
    assert!(n >= 3, "cycle needs at least 3 nodes");
    let mut g = path(n);
    g.add_edge(n, 1).unwrap();
    g
}

pub fn complete(n: usize) -> Graph {
    let mut g = Graph::with_nodes(n);
    for u in 1..=n {
        for v in u + 1..=n {
            g.add_edge(u, v).unwrap();
        }
    }
    g
}

/// Star with centre `1` and leaves `2..=leaves+1`.
pub fn star(leaves: usize) -> Graph {
    let mut g = Graph::with_nodes(leaves + 1);
    for v in 2..=leaves + 1 {
        g.add_edge(1, v).unwrap();
    }
    g
}

/// `rows × cols` grid, node `(r, c)` labelled `r * cols + c + 1`.
pub fn grid(rows: usize, cols: usize) -> Graph {
    let id = |r: usize, c: usize| r * cols + c + 1;
    let mut g = Graph::with_nodes(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                g.add_edge(id(r, c), id(r, c + 1)).unwrap();
            }
            if r + 1 < rows {
                g.add_edge(id(r, c), id(r + 1, c)).unwrap();
            }
        }
    }
    g
}

/// Uniform random recursive tree: node `v` attaches to a uniform node in `1..v`.
pub fn random_tree(n: usize, seed: u64) -> Graph {
    let mut rng = rng::seeded(seed);
    let mut g = Graph::with_nodes(n);
    for v in 2..=n {
        let parent = rng.gen_range(1..v);
        g.add_edge(parent, v).unwrap();
    }
    g
}

/// Random `k`-tree on `n ≥ k + 1` nodes: a `(k+1)`-clique grown by repeatedly
/// attaching a new node to a uniformly chosen existing `k`-clique. Its
/// treewidth is exactly `k`.
pub fn random_k_tree(n: usize, k: usize, seed: u64) -> Graph {
    assert!(n > k, "a k-tree needs at least k + 1 nodes");
    let mut rng = rng::seeded(seed);
    let mut g = complete(k + 1);
    let mut cliques: Vec<Vec<NodeId>> = (1..=k + 1)
        .map(|skip| (1..=k + 1).filter(|&v| v != skip).collect())
        .collect();
    for v in k + 2..=n {
        let base = cliques[rng.gen_range(0..cliques.len())].clone();
        g.add_node(v);
        for &w in &base {
            g.add_edge(v, w).unwrap();
        }
        for skip in 0..base.len() {
            let mut c: Vec<NodeId> = base
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != skip)
                .map(|(_, &w)| w)
                .collect();
            c.push(v);
            cliques.push(c);
        }
    }
    g
}

/// Relabels `g` by a seeded random permutation of its own node ids.
pub fn shuffle_labels(g: &Graph, seed: u64) -> (Graph, std::collections::BTreeMap<NodeId, NodeId>) {
    let mut rng = rng::seeded(seed);
    let ids: Vec<NodeId> = g.nodes().collect();
    let mut image = ids.clone();
    image.shuffle(&mut rng);
    let map: std::collections::BTreeMap<NodeId, NodeId> = ids.into_iter().zip(image).collect();
    (g.relabel(|v| map[&v]), map)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes() {
        assert_eq!(path(4).edge_count(), 3);
        assert_eq!(cycle(5).edge_count(), 5);
        assert_eq!(complete(6).edge_count(), 15);
        assert_eq!(star(3).degree(1).unwrap(), 3);
        assert_eq!(grid(4, 4).edge_count(), 24);
        assert_eq!(random_tree(30, 1).edge_count(), 29);
        assert_eq!(random_tree(30, 1).components().len(), 1);
    }

    #[test]
    fn k_tree_edge_count() {
        // (k+1 choose 2) + k * (n - k - 1)
        let g = random_k_tree(20, 3, 5);
        assert_eq!(g.node_count(), 20);
        assert_eq!(g.edge_count(), 6 + 3 * 16);
    }

    #[test]
    fn shuffled_labels_preserve_shape() {
        let g = grid(3, 3);
        let (h, map) = shuffle_labels(&g, 9);
        assert_eq!(h.edge_count(), g.edge_count());
        for (u, v) in g.edges() {
            assert!(h.has_edge(map[&u], map[&v]));
        }
    }
}

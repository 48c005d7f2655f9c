//! Tree decompositions built from elimination orders.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::elimination::{EliminationOrder, OrderError};
use crate::graph::{Graph, NodeId};

pub type Bag = BTreeSet<NodeId>;

/// Bags plus tree edges between bag indices.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeDecomposition {
    pub bags: Vec<Bag>,
    pub tree_edges: Vec<(usize, usize)>,
}

/// A failed decomposition condition with a witness.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Violation {
    /// A graph node appears in no bag.
    MissingNode(NodeId),
    /// No bag contains both endpoints of this edge.
    UncoveredEdge(NodeId, NodeId),
    /// The bags containing this node do not induce a connected subtree.
    DisconnectedNode(NodeId),
    /// A tree edge refers to a bag that does not exist.
    BadBagIndex(usize),
    /// The tree edges contain a cycle (witness: the edge closing it).
    Cycle(usize, usize),
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn covers_nodes(&self) -> bool {
        !self
            .violations
            .iter()
            .any(|v| matches!(v, Violation::MissingNode(_)))
    }

    pub fn covers_edges(&self) -> bool {
        !self
            .violations
            .iter()
            .any(|v| matches!(v, Violation::UncoveredEdge(..)))
    }

    pub fn is_connected_per_node(&self) -> bool {
        !self
            .violations
            .iter()
            .any(|v| matches!(v, Violation::DisconnectedNode(_)))
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum TdError {
    #[error("tree decomposition has no bags")]
    Empty,
    #[error(transparent)]
    Order(#[from] OrderError),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Builds a tree decomposition by running the elimination along `order`.
///
/// Each eliminated node `u` contributes the bag `{u} ∪ N(u)`. Open (parentless)
/// bags are scanned in insertion order: if the new bag is a subset of one of
/// them it is absorbed into it; otherwise every open bag containing `u`
/// becomes a child of the new bag. Bags left open at the end (one per
/// connected component, or singletons of isolated nodes) are chained
/// together so the result is a single tree.
pub fn td_from_order(g: &Graph, order: &EliminationOrder) -> Result<TreeDecomposition, TdError> {
    order.check_permutation(g)?;
    let mut work = g.clone();
    let mut td = TreeDecomposition::default();
    let mut open: Vec<usize> = Vec::new();

    for &u in order.as_slice() {
        let (nbrs, _) = work.eliminate_in_place(u).expect("order was checked");
        let mut bag = nbrs;
        bag.insert(u);

        let absorbed = open.iter().copied().find(|&l| bag.is_subset(&td.bags[l]));
        let current = match absorbed {
            Some(l) => l,
            None => {
                td.bags.push(bag);
                td.bags.len() - 1
            }
        };
        open.retain(|&l| {
            if l != current && td.bags[l].contains(&u) {
                td.tree_edges.push((l, current));
                false
            } else {
                true
            }
        });
        if absorbed.is_none() {
            open.push(current);
        }
    }

    for pair in open.windows(2) {
        td.tree_edges.push((pair[0], pair[1]));
    }
    Ok(td)
}

/// Checks the three decomposition conditions (node coverage, edge coverage,
/// connectedness of each node's bags) and that the tree edges form a forest.
/// A forest is accepted; condition three only constrains bags sharing a node.
pub fn validate_td(g: &Graph, td: &TreeDecomposition) -> ValidationReport {
    let mut violations = Vec::new();
    let nb = td.bags.len();

    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nb];
    let mut uf = UnionFind::new(nb);
    for &(a, b) in &td.tree_edges {
        if a >= nb || b >= nb {
            violations.push(Violation::BadBagIndex(a.max(b)));
            continue;
        }
        if !uf.union(a, b) {
            violations.push(Violation::Cycle(a, b));
        }
        adj[a].push(b);
        adj[b].push(a);
    }

    let mut holders: BTreeMap<NodeId, Vec<usize>> = BTreeMap::new();
    for (i, bag) in td.bags.iter().enumerate() {
        for &v in bag {
            holders.entry(v).or_default().push(i);
        }
    }

    for v in g.nodes() {
        if !holders.contains_key(&v) {
            violations.push(Violation::MissingNode(v));
        }
    }

    for (u, v) in g.edges() {
        let covered = holders
            .get(&u)
            .is_some_and(|bags| bags.iter().any(|&i| td.bags[i].contains(&v)));
        if !covered {
            violations.push(Violation::UncoveredEdge(u, v));
        }
    }

    for (&v, bags) in &holders {
        if !g.contains(v) {
            continue;
        }
        // BFS restricted to bags containing v
        let mut seen = vec![false; nb];
        let mut stack = vec![bags[0]];
        seen[bags[0]] = true;
        let mut reached = 1;
        while let Some(b) = stack.pop() {
            for &c in &adj[b] {
                if !seen[c] && td.bags[c].contains(&v) {
                    seen[c] = true;
                    reached += 1;
                    stack.push(c);
                }
            }
        }
        if reached != bags.len() {
            violations.push(Violation::DisconnectedNode(v));
        }
    }

    ValidationReport { violations }
}

/// Largest bag size minus one.
pub fn width_of_td(td: &TreeDecomposition) -> Result<usize, TdError> {
    td.bags
        .iter()
        .map(|b| b.len().saturating_sub(1))
        .max()
        .ok_or(TdError::Empty)
}

/// PACE solution format: `s td <bags> <max bag size> <n>`, then
/// `b <id> <nodes...>` lines with 1-based bag ids, then tree edges.
pub fn write_td(td: &TreeDecomposition, node_count: usize) -> String {
    let max_bag = td.bags.iter().map(BTreeSet::len).max().unwrap_or(0);
    let mut out = String::new();
    writeln!(out, "s td {} {} {}", td.bags.len(), max_bag, node_count).unwrap();
    for (i, bag) in td.bags.iter().enumerate() {
        write!(out, "b {}", i + 1).unwrap();
        for v in bag {
            write!(out, " {v}").unwrap();
        }
        out.push('\n');
    }
    for &(a, b) in &td.tree_edges {
        writeln!(out, "{} {}", a + 1, b + 1).unwrap();
    }
    out
}

/// Parses the PACE solution format written by [`write_td`].
pub fn parse_td(input: impl BufRead) -> Result<TreeDecomposition, TdError> {
    let err = |line: usize, msg: &str| TdError::Parse {
        line,
        msg: msg.to_string(),
    };
    let mut declared: Option<usize> = None;
    let mut bags: Vec<Option<Bag>> = Vec::new();
    let mut tree_edges = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| err(lineno, &e.to_string()))?;
        let toks: Vec<&str> = line.split_whitespace().collect();
        let nums = |ts: &[&str]| -> Result<Vec<usize>, TdError> {
            ts.iter()
                .map(|t| t.parse().map_err(|_| err(lineno, "expected integer")))
                .collect()
        };
        match toks.first().copied() {
            None | Some("c") => {}
            Some("s") => {
                if toks.get(1) != Some(&"td") || toks.len() != 5 || declared.is_some() {
                    return Err(err(lineno, "malformed solution header"));
                }
                let v = nums(&toks[2..])?;
                declared = Some(v[0]);
                bags = vec![None; v[0]];
            }
            Some("b") => {
                let v = nums(&toks[1..])?;
                let id = *v.first().ok_or_else(|| err(lineno, "missing bag id"))?;
                let slot = id
                    .checked_sub(1)
                    .and_then(|i| bags.get_mut(i))
                    .ok_or_else(|| err(lineno, "bag id out of range"))?;
                *slot = Some(v[1..].iter().copied().collect());
            }
            Some(_) => {
                if declared.is_none() {
                    return Err(err(lineno, "edge before header"));
                }
                let v = nums(&toks)?;
                if v.len() != 2 || v.iter().any(|&x| x == 0 || x > bags.len()) {
                    return Err(err(lineno, "malformed tree edge"));
                }
                tree_edges.push((v[0] - 1, v[1] - 1));
            }
        }
    }
    if declared.is_none() {
        return Err(err(0, "missing `s td` header"));
    }
    let bags = bags
        .into_iter()
        .enumerate()
        .map(|(i, b)| b.ok_or_else(|| err(0, &format!("bag {} never defined", i + 1))))
        .collect::<Result<_, _>>()?;
    Ok(TreeDecomposition { bags, tree_edges })
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        true
    }
}

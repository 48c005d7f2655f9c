//! Exact treewidth for small graphs.
//!
//! Two independent routes: exhaustive enumeration of every elimination order
//! ([`exact_treewidth_bruteforce`]), and a best-first search over sets of
//! eliminated vertices ([`exact_treewidth_bnb`]). The second relies on the
//! fact that the graph left after eliminating a set `S` does not depend on
//! the order inside `S`, so the search space is `2^n` states instead of `n!`.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::time::{Duration, Instant};

use crate::elimination::{width_of_order, EliminationOrder};
use crate::graph::{Graph, NodeId};
use crate::heuristics::{min_fill_order, TieBreak};

/// Largest graph accepted by the exhaustive solver.
pub const BRUTEFORCE_MAX_NODES: usize = 10;
/// Largest (reduced) component the set-based search handles.
pub const BNB_MAX_NODES: usize = 128;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ExactError {
    #[error("{n} nodes exceeds the exhaustive limit of {BRUTEFORCE_MAX_NODES}; use the branch-and-bound solver")]
    TooLarge { n: usize },
}

/// Result of the branch-and-bound search.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BnbResult {
    pub width: usize,
    pub order: EliminationOrder,
    pub proven_optimal: bool,
}

/// Minimum width over all `n!` elimination orders, with a witness.
pub fn exact_treewidth_bruteforce(g: &Graph) -> Result<(usize, EliminationOrder), ExactError> {
    let n = g.node_count();
    if n > BRUTEFORCE_MAX_NODES {
        return Err(ExactError::TooLarge { n });
    }
    let ids: Vec<NodeId> = g.nodes().collect();
    if n == 0 {
        return Ok((0, EliminationOrder::default()));
    }
    let index = g.index_map();
    let mut adj = [0u16; 16];
    for (u, v) in g.edges() {
        adj[index[&u]] |= 1 << index[&v];
        adj[index[&v]] |= 1 << index[&u];
    }

    struct Search {
        best: usize,
        best_order: Vec<usize>,
        prefix: Vec<usize>,
    }

    fn rec(adj: &[u16; 16], alive: u16, cur: usize, s: &mut Search) {
        if alive == 0 {
            if cur < s.best {
                s.best = cur;
                s.best_order = s.prefix.clone();
            }
            return;
        }
        let mut rest = alive;
        while rest != 0 {
            let v = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            let nbrs = adj[v] & alive;
            let w = cur.max(nbrs.count_ones() as usize);
            let mut next = *adj;
            let mut m = nbrs;
            while m != 0 {
                let a = m.trailing_zeros() as usize;
                m &= m - 1;
                next[a] |= nbrs & !(1 << a);
            }
            s.prefix.push(v);
            rec(&next, alive & !(1 << v), w, s);
            s.prefix.pop();
        }
    }

    let mut s = Search {
        best: usize::MAX,
        best_order: Vec::new(),
        prefix: Vec::new(),
    };
    let alive = if n == 16 { u16::MAX } else { (1u16 << n) - 1 };
    rec(&adj, alive, 0, &mut s);
    let order = s.best_order.iter().map(|&i| ids[i]).collect();
    Ok((s.best, EliminationOrder(order)))
}

/// Best-first branch-and-bound with memoisation on eliminated sets.
///
/// Simplicial nodes are eliminated up front, then each connected component
/// is searched separately. The incumbent comes from min-fill; states whose
/// cost reaches it are pruned. With `time_budget = None` the search runs to
/// completion. When the budget expires the min-fill bound is returned with
/// `proven_optimal = false`.
pub fn exact_treewidth_bnb(g: &Graph, time_budget: Option<Duration>) -> BnbResult {
    let deadline = time_budget.map(|b| Instant::now() + b);
    let mut work = g.clone();
    let mut order = Vec::with_capacity(g.node_count());
    let mut width = 0;
    let mut proven = true;

    // the simplicial rule never increases the optimum
    loop {
        let Some(v) = work.nodes().find(|&v| is_simplicial(&work, v)) else {
            break;
        };
        let (nbrs, _) = work.eliminate_in_place(v).unwrap();
        width = width.max(nbrs.len());
        order.push(v);
    }

    for comp in work.components() {
        let sub = work.induced(&comp);
        let (w, o, p) = if width >= comp.len().saturating_sub(1) {
            // any order is good enough: it cannot exceed the current width
            (comp.len().saturating_sub(1), comp.clone(), true)
        } else {
            search_component(&sub, width, deadline)
        };
        width = width.max(w);
        proven &= p;
        order.extend(o);
    }

    let order = EliminationOrder(order);
    debug_assert_eq!(width_of_order(g, &order).unwrap().0, width);
    BnbResult {
        width,
        order,
        proven_optimal: proven,
    }
}

fn is_simplicial(g: &Graph, v: NodeId) -> bool {
    let nbrs: Vec<NodeId> = g.neighbors(v).unwrap().iter().copied().collect();
    nbrs.iter()
        .enumerate()
        .all(|(i, &a)| nbrs[i + 1..].iter().all(|&b| g.has_edge(a, b)))
}

/// Exact search on one connected component. `floor` is a width already
/// committed to elsewhere; reaching it ends the search early.
fn search_component(
    g: &Graph,
    floor: usize,
    deadline: Option<Instant>,
) -> (usize, Vec<NodeId>, bool) {
    let ids: Vec<NodeId> = g.nodes().collect();
    let n = ids.len();
    let upper = min_fill_order(g, TieBreak::LowestId);
    let ub = width_of_order(g, &upper).unwrap().0;
    if n > BNB_MAX_NODES {
        return (ub, upper.0, ub <= floor);
    }
    let index = g.index_map();
    let mut adj = vec![0u128; n];
    for (u, v) in g.edges() {
        adj[index[&u]] |= 1 << index[&v];
        adj[index[&v]] |= 1 << index[&u];
    }
    let full: u128 = if n == 128 {
        u128::MAX
    } else {
        (1u128 << n) - 1
    };

    // Degree of `v` after eliminating `set`: number of live vertices reachable
    // from `v` through paths whose interior lies in `set`.
    let degree_after = |set: u128, v: usize| -> usize {
        let mut reach = 0u128;
        let mut visited = 1u128 << v;
        let mut frontier = 1u128 << v;
        while frontier != 0 {
            let x = frontier.trailing_zeros() as usize;
            frontier &= frontier - 1;
            let nb = adj[x] & !visited;
            reach |= nb & !set;
            let inner = nb & set;
            visited |= nb;
            frontier |= inner;
        }
        (reach & !(1u128 << v)).count_ones() as usize
    };

    // best-first on the bottleneck cost; ties prefer larger sets
    let mut best: HashMap<u128, (usize, u8)> = HashMap::new();
    let mut heap = BinaryHeap::new();
    best.insert(0, (floor, u8::MAX));
    heap.push((Reverse(floor), 0u32, 0u128));
    let mut expansions = 0u64;

    while let Some((Reverse(cost), _, set)) = heap.pop() {
        if best.get(&set).is_some_and(|&(c, _)| c < cost) {
            continue;
        }
        let remaining = (full & !set).count_ones() as usize;
        // the last `remaining` nodes can be eliminated in any order
        // without exceeding `remaining - 1`
        if remaining.saturating_sub(1) <= cost {
            let mut order = reconstruct(&best, set);
            let mut rest = full & !set;
            while rest != 0 {
                order.push(rest.trailing_zeros() as usize);
                rest &= rest - 1;
            }
            return (cost, order.into_iter().map(|i| ids[i]).collect(), true);
        }
        if cost >= ub {
            break;
        }
        expansions += 1;
        if expansions.is_multiple_of(256) && deadline.is_some_and(|d| Instant::now() >= d) {
            return (ub, upper.0, false);
        }
        let mut live = full & !set;
        while live != 0 {
            let v = live.trailing_zeros() as usize;
            live &= live - 1;
            let next_cost = cost.max(degree_after(set, v));
            if next_cost >= ub {
                continue;
            }
            let next = set | (1u128 << v);
            match best.get(&next) {
                Some(&(c, _)) if c <= next_cost => {}
                _ => {
                    best.insert(next, (next_cost, v as u8));
                    heap.push((Reverse(next_cost), next.count_ones(), next));
                }
            }
        }
    }
    // nothing strictly better than the incumbent exists
    (ub, upper.0, true)
}

fn reconstruct(best: &HashMap<u128, (usize, u8)>, mut set: u128) -> Vec<usize> {
    let mut rev = Vec::new();
    while set != 0 {
        let v = best[&set].1 as usize;
        rev.push(v);
        set &= !(1u128 << v);
    }
    rev.reverse();
    rev
}

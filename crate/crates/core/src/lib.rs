//! Treewidth via elimination orderings.
//!
//! The crate is organised bottom-up:
//!
//! * [`graph`] – undirected simple graphs with stable node labels, PACE `.gr` I/O
//!   and seeded random generators.
//! * [`elimination`] – width of an elimination order and per-step statistics.
//! * [`decomposition`] – tree decompositions built from an order, plus validation.
//! * [`heuristics`] – min-degree, min-fill and random orders.
//! * [`exact`] – exhaustive and memoized branch-and-bound exact solvers.
//! * [`tensor`] – a small dense reverse-mode autodiff engine with Adam.
//! * [`gcn`] – the graph-convolutional policy/value network.
//! * [`rl`] – the elimination MDP, GAE, actor-critic losses and the training loop.
//! * [`evaluation`] – best-of-k solving, approximation ratios and entropy traces.

pub mod bitset;
pub mod decomposition;
pub mod elimination;
pub mod evaluation;
pub mod exact;
pub mod gcn;
pub mod graph;
pub mod heuristics;
pub mod rl;
pub mod rng;
pub mod tensor;

pub use decomposition::{td_from_order, validate_td, width_of_td, TreeDecomposition};
pub use elimination::{fill_in_count, width_of_order, EliminationOrder, EliminationTrace};
pub use graph::{generate_er, parse_gr, write_gr, ErConfig, Graph, NodeId};

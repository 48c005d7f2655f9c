//! Test-side oracles. These avoid the library code they check.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::Rng;

use treewidth_core::decomposition::TreeDecomposition;
use treewidth_core::gcn::{ActMode, PolicyNet};
use treewidth_core::graph::generators;
use treewidth_core::rl::{episode_loss, gae, rollout, LossWeights};
use treewidth_core::rng::{derive_seed, seeded, ChaCha8Rng};
use treewidth_core::tensor::{Tape, Tensor, Var};
use treewidth_core::{generate_er, ErConfig, Graph, NodeId};

/// Width of `order` by direct simulation on adjacency sets.
pub fn naive_width(g: &Graph, order: &[NodeId]) -> usize {
    let mut adj: BTreeMap<NodeId, BTreeSet<NodeId>> = g
        .nodes()
        .map(|v| (v, g.neighbors(v).unwrap().clone()))
        .collect();
    let mut width = 0;
    for &u in order {
        let nbrs = adj.remove(&u).unwrap();
        width = width.max(nbrs.len());
        for &a in &nbrs {
            let set = adj.get_mut(&a).unwrap();
            set.remove(&u);
            set.extend(nbrs.iter().copied().filter(|&b| b != a));
        }
    }
    width
}

/// Minimum of [`naive_width`] over every permutation.
pub fn min_over_permutations(g: &Graph) -> usize {
    let nodes: Vec<NodeId> = g.nodes().collect();
    if nodes.is_empty() {
        return 0;
    }
    nodes
        .iter()
        .copied()
        .permutations(nodes.len())
        .map(|p| naive_width(g, &p))
        .min()
        .unwrap()
}

/// Checks the three decomposition conditions without the library validator:
/// every node in a bag, every edge inside a bag, and for every node the
/// bags holding it form a connected subgraph of an acyclic bag graph.
pub fn independent_td_check(g: &Graph, td: &TreeDecomposition) -> Result<(), String> {
    let k = td.bags.len();
    // acyclic: a forest on k vertices with no repeated connections
    let mut parent: Vec<usize> = (0..k).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        p[x] = r;
        r
    }
    for &(a, b) in &td.tree_edges {
        if a >= k || b >= k {
            return Err(format!("tree edge ({a},{b}) out of range"));
        }
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra == rb {
            return Err(format!("tree edge ({a},{b}) closes a cycle"));
        }
        parent[ra] = rb;
    }
    for v in g.nodes() {
        if !td.bags.iter().any(|b| b.contains(&v)) {
            return Err(format!("node {v} in no bag"));
        }
    }
    for (u, v) in g.edges() {
        if !td.bags.iter().any(|b| b.contains(&u) && b.contains(&v)) {
            return Err(format!("edge ({u},{v}) uncovered"));
        }
    }
    for v in g.nodes() {
        let holding: Vec<usize> = (0..k).filter(|&i| td.bags[i].contains(&v)).collect();
        let mut seen = BTreeSet::from([holding[0]]);
        let mut stack = vec![holding[0]];
        while let Some(x) = stack.pop() {
            for &(a, b) in &td.tree_edges {
                let y = if a == x {
                    b
                } else if b == x {
                    a
                } else {
                    continue;
                };
                if td.bags[y].contains(&v) && seen.insert(y) {
                    stack.push(y);
                }
            }
        }
        if seen.len() != holding.len() {
            return Err(format!("bags holding {v} are disconnected"));
        }
    }
    Ok(())
}

/// Small graphs from several families with shuffled labels.
pub fn mixed_small_graph(i: u64, max_n: usize) -> Graph {
    let mut rng = seeded(derive_seed(0xACCE, i));
    let n = rng.gen_range(2..=max_n);
    let g = match i % 6 {
        0 => generate_er(ErConfig::new(n, rng.gen()).with_probability(0.2)),
        1 => generate_er(ErConfig::new(n, rng.gen()).with_probability(0.5)),
        2 => generate_er(ErConfig::new(n, rng.gen()).with_probability(0.8)),
        3 => generators::random_tree(n, rng.gen()),
        4 => generators::cycle(n.max(3)),
        _ => {
            let k = rng.gen_range(1..=3.min(n - 1));
            generators::random_k_tree(n, k, rng.gen())
        }
    };
    generators::shuffle_labels(&g, rng.gen()).0
}

pub fn shuffled(g: &Graph, rng: &mut ChaCha8Rng) -> Vec<NodeId> {
    let mut v: Vec<NodeId> = g.nodes().collect();
    v.shuffle(rng);
    v
}

/// `‖a − b‖ / max(‖a‖, ‖b‖)`, or the absolute gap when both are tiny.
pub fn rel_error(a: &[f64], b: &[f64]) -> f64 {
    let diff = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    let scale = na.max(nb);
    if scale < 1e-7 {
        diff
    } else {
        diff / scale
    }
}

/// Central-difference gradient of `f` at `x`.
pub fn numeric_grad(x: &[f64], h: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut x = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = x[i];
            x[i] = orig + h;
            let up = f(&x);
            x[i] = orig - h;
            let down = f(&x);
            x[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

pub fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize, lo: f64, hi: f64) -> Tensor {
    Tensor::matrix(r, c, (0..r * c).map(|_| rng.gen_range(lo..hi)).collect()).unwrap()
}

/// A primitive under test: records an op on leaves and returns its output.
pub type Primitive = fn(&mut Tape, &[Var]) -> Var;

pub struct PrimitiveCase {
    pub name: &'static str,
    pub inputs: Vec<Tensor>,
    pub op: Primitive,
}

/// Gradient check of `sum(op(inputs) ⊙ R)` for a fixed random `R`.
/// Returns the worst relative error over the inputs.
pub fn check_primitive(case: &PrimitiveCase, rng: &mut ChaCha8Rng) -> f64 {
    let probe = {
        let mut tape = Tape::new();
        let vars: Vec<Var> = case.inputs.iter().map(|t| tape.leaf(t.clone())).collect();
        let out = (case.op)(&mut tape, &vars);
        let (r, c) = tape.value(out).dims().unwrap();
        random_matrix(rng, r, c, -1.0, 1.0)
    };
    let eval = |inputs: &[Tensor]| -> (f64, Vec<Vec<f64>>) {
        let mut tape = Tape::new();
        let vars: Vec<Var> = inputs.iter().map(|t| tape.leaf(t.clone())).collect();
        let out = (case.op)(&mut tape, &vars);
        let p = tape.leaf(probe.clone());
        let prod = tape.mul(out, p).unwrap();
        let loss = tape.sum(prod);
        let grads = tape.gradients(loss).unwrap();
        let g = vars
            .iter()
            .zip(inputs)
            .map(|(v, t)| {
                grads
                    .get(*v)
                    .map(<[f64]>::to_vec)
                    .unwrap_or_else(|| vec![0.0; t.len()])
            })
            .collect();
        (tape.value(loss).item(), g)
    };
    let (_, analytic) = eval(&case.inputs);
    let mut worst: f64 = 0.0;
    for i in 0..case.inputs.len() {
        let numeric = numeric_grad(case.inputs[i].data(), 1e-5, |x| {
            let mut inputs = case.inputs.clone();
            inputs[i].data_mut().copy_from_slice(x);
            eval(&inputs).0
        });
        worst = worst.max(rel_error(&analytic[i], &numeric));
    }
    worst
}

const MASK: [bool; 6] = [true, false, true, true, false, true];

/// One case per tape primitive, with inputs kept away from kinks and
/// outside the domain of `log`.
pub fn primitive_cases(rng: &mut ChaCha8Rng) -> Vec<PrimitiveCase> {
    let m = |rng: &mut ChaCha8Rng, r, c| random_matrix(rng, r, c, -1.5, 1.5);
    let pos = |rng: &mut ChaCha8Rng, r, c| random_matrix(rng, r, c, 0.2, 2.0);
    vec![
        PrimitiveCase {
            name: "matmul",
            inputs: vec![m(rng, 3, 4), m(rng, 4, 2)],
            op: |t, v| t.matmul(v[0], v[1]).unwrap(),
        },
        PrimitiveCase {
            name: "add",
            inputs: vec![m(rng, 3, 2), m(rng, 3, 2)],
            op: |t, v| t.add(v[0], v[1]).unwrap(),
        },
        PrimitiveCase {
            name: "sub",
            inputs: vec![m(rng, 3, 2), m(rng, 3, 2)],
            op: |t, v| t.sub(v[0], v[1]).unwrap(),
        },
        PrimitiveCase {
            name: "mul",
            inputs: vec![m(rng, 3, 2), m(rng, 3, 2)],
            op: |t, v| t.mul(v[0], v[1]).unwrap(),
        },
        PrimitiveCase {
            name: "add_row",
            inputs: vec![m(rng, 4, 3), m(rng, 1, 3)],
            op: |t, v| t.add_row(v[0], v[1]).unwrap(),
        },
        PrimitiveCase {
            name: "scale",
            inputs: vec![m(rng, 2, 3)],
            op: |t, v| t.scale(v[0], -1.7),
        },
        PrimitiveCase {
            name: "sum",
            inputs: vec![m(rng, 3, 3)],
            op: |t, v| t.sum(v[0]),
        },
        PrimitiveCase {
            name: "row_sum",
            inputs: vec![m(rng, 4, 3)],
            op: |t, v| t.row_sum(v[0]).unwrap(),
        },
        PrimitiveCase {
            name: "mean_rows",
            inputs: vec![m(rng, 5, 3)],
            op: |t, v| t.mean_rows(v[0]).unwrap(),
        },
        PrimitiveCase {
            name: "elu",
            inputs: vec![m(rng, 4, 4)],
            op: |t, v| t.elu(v[0]),
        },
        PrimitiveCase {
            name: "log",
            inputs: vec![pos(rng, 3, 3)],
            op: |t, v| t.log(v[0]),
        },
        PrimitiveCase {
            name: "exp",
            inputs: vec![m(rng, 3, 3)],
            op: |t, v| t.exp(v[0]),
        },
        PrimitiveCase {
            name: "softmax_masked",
            inputs: vec![m(rng, 6, 1)],
            op: |t, v| t.softmax_masked(v[0], &MASK).unwrap(),
        },
        PrimitiveCase {
            name: "log_softmax_masked",
            inputs: vec![m(rng, 6, 1)],
            op: |t, v| t.log_softmax_masked(v[0], &MASK).unwrap(),
        },
        PrimitiveCase {
            name: "gather_rows",
            inputs: vec![m(rng, 5, 2)],
            op: |t, v| t.gather_rows(v[0], &[3, 0, 3, 4]).unwrap(),
        },
    ]
}

/// Relative error between the tape gradient of one episode's total loss and
/// central differences, over all parameters or `sample` random coordinates.
pub fn check_episode_loss(
    net: &PolicyNet,
    g: &Graph,
    w: LossWeights,
    seed: u64,
    sample: Option<usize>,
) -> f64 {
    let ep = rollout(net, g, ActMode::Sample, &mut seeded(seed)).unwrap();
    let mut values = ep.values.clone();
    values.push(0.0);
    let adv = gae(&ep.rewards, &values, 0.999, 0.85).unwrap();
    let mut grads = net.params().clone();
    grads.zero_grad();
    episode_loss(net, g, &ep, &adv, w, 1.0, Some(&mut grads)).unwrap();

    let mut coords: Vec<(usize, usize)> = (0..net.params().len())
        .flat_map(|p| (0..net.params().get(p).len()).map(move |j| (p, j)))
        .collect();
    if let Some(k) = sample {
        let mut rng = seeded(seed);
        let mut picked: Vec<(usize, usize)> = (0..k)
            .map(|_| coords[rng.gen_range(0..coords.len())])
            .collect();
        picked.sort_unstable();
        picked.dedup();
        coords = picked;
    }
    let analytic: Vec<f64> = coords
        .iter()
        .map(|&(p, j)| grads.get(p).grad().unwrap()[j])
        .collect();
    let mut probe = net.clone();
    let x0: Vec<f64> = coords
        .iter()
        .map(|&(p, j)| net.params().get(p).data()[j])
        .collect();
    let numeric = numeric_grad(&x0, 1e-5, |x| {
        for (&(p, j), &v) in coords.iter().zip(x) {
            probe.params_mut().get_mut(p).data_mut()[j] = v;
        }
        let total = episode_loss(&probe, g, &ep, &adv, w, 1.0, None)
            .unwrap()
            .total;
        for (&(p, j), &v) in coords.iter().zip(&x0) {
            probe.params_mut().get_mut(p).data_mut()[j] = v;
        }
        total
    });
    rel_error(&analytic, &numeric)
}

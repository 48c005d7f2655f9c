use std::collections::BTreeSet;

use rand::Rng;

use treewidth_core::evaluation::normalized_entropy;
use treewidth_core::gcn::{entropy, sample_index, ActMode, NetConfig, PolicyNet};
use treewidth_core::graph::generators;
use treewidth_core::rng::seeded;
use treewidth_core::{generate_er, ErConfig, Graph};

fn net(seed: u64) -> PolicyNet {
    PolicyNet::new(NetConfig::default(), seed).unwrap()
}

#[test]
fn logits_only_see_three_hops() {
    let net = net(3);
    for seed in 0..10u64 {
        let g = generators::grid(4, 9);
        let u = 1 + (seed as usize % 4) * 9;
        let dist = g.distances_from(u);
        let far: Vec<usize> = g
            .nodes()
            .filter(|v| dist.get(v).is_none_or(|&d| d >= 4))
            .collect();
        assert!(far.len() > 6);

        let mut h = g.clone();
        let mut rng = seeded(seed);
        for _ in 0..15 {
            let a = far[rng.gen_range(0..far.len())];
            let b = far[rng.gen_range(0..far.len())];
            if a == b {
                continue;
            }
            if !h.remove_edge(a, b) {
                h.add_edge(a, b).unwrap();
            }
        }
        assert_ne!(g, h);
        let before = net.forward(&g).unwrap();
        let after = net.forward(&h).unwrap();
        let i = before.ids.binary_search(&u).unwrap();
        let j = after.ids.binary_search(&u).unwrap();
        assert!(
            (before.logits[i] - after.logits[j]).abs() <= 1e-12,
            "seed {seed}"
        );
    }
}

#[test]
fn vertex_transitive_graph_has_equal_logits() {
    let e = net(1).forward(&generators::cycle(5)).unwrap();
    for x in &e.logits {
        assert!((x - e.logits[0]).abs() <= 1e-9);
    }
    let mut rng = seeded(0);
    let a = net(1)
        .act(&generators::cycle(5), ActMode::Greedy, &mut rng)
        .unwrap();
    assert_eq!(a.node, 1);
}

#[test]
fn single_node_action() {
    let mut rng = seeded(0);
    let a = net(2)
        .act(&Graph::with_nodes(1), ActMode::Sample, &mut rng)
        .unwrap();
    assert_eq!((a.node, a.log_prob, a.entropy), (1, 0.0, 0.0));
}

#[test]
fn reported_entropy_matches_distribution() {
    let g = generate_er(ErConfig::new(12, 4));
    let mut rng = seeded(5);
    let a = net(4).act(&g, ActMode::Sample, &mut rng).unwrap();
    let manual: f64 = -a.probabilities.iter().map(|p| p * p.ln()).sum::<f64>();
    assert!((a.entropy - manual).abs() < 1e-12);
    assert!((entropy(&a.probabilities) - manual).abs() < 1e-12);
    let probs = net(4).forward(&g).unwrap().probabilities();
    assert_eq!(probs, a.probabilities);
}

#[test]
fn sampling_frequencies_within_three_sigma() {
    // a star gives the centre a different logit from the leaves
    let g = generators::star(4);
    let probs = net(6).forward(&g).unwrap().probabilities();
    let draws = 100_000;
    let mut counts = vec![0usize; probs.len()];
    let mut rng = seeded(17);
    for _ in 0..draws {
        counts[sample_index(&probs, &mut rng)] += 1;
    }
    for (p, c) in probs.iter().zip(&counts) {
        let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
        assert!(
            (*c as f64 - draws as f64 * p).abs() <= 3.0 * sigma,
            "p {p}, count {c}"
        );
    }

    // the same through act()
    let mut rng = seeded(18);
    let mut seen = BTreeSet::new();
    for _ in 0..200 {
        seen.insert(net(6).act(&g, ActMode::Sample, &mut rng).unwrap().node);
    }
    assert_eq!(seen.len(), 5);
}

#[test]
fn complete_graphs_give_uniform_policy() {
    for n in [2usize, 7, 12] {
        let p = net(8)
            .forward(&generators::complete(n))
            .unwrap()
            .probabilities();
        assert!((normalized_entropy(&p) - 1.0).abs() < 1e-6);
    }
}

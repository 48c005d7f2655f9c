//! Best-of-k solving, approximation ratios and entropy traces.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::elimination::EliminationOrder;
use crate::gcn::{entropy, sample_index, ActMode, NetError, PolicyNet};
use crate::graph::Graph;
use crate::rl::{rollout, EliminationEnv};
use crate::rng::{derive_seed, seeded};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("k must be at least 1")]
    ZeroK,
    #[error(transparent)]
    Net(#[from] NetError),
    #[error("reference method `{0}` has no results")]
    MissingReference(String),
    #[error("method `{method}` has no result for graph `{graph}`")]
    MissingGraph { method: String, graph: String },
    #[error("entropy trace csv, line {line}: {msg}")]
    TraceCsv { line: usize, msg: String },
}

/// Outcome of [`solve_best_of_k`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BestOfK {
    pub order: EliminationOrder,
    pub width: usize,
    /// Width of every sample, in sample order.
    pub sample_widths: Vec<usize>,
}

/// Samples `k` episodes and keeps the narrowest (earliest on ties).
///
/// Sample `i` draws from the seed `derive_seed(seed, i)`, so the first `k`
/// samples for a larger `k` are the same as for `k` itself and the result
/// can only improve as `k` grows.
pub fn solve_best_of_k(
    net: &PolicyNet,
    g: &Graph,
    k: usize,
    seed: u64,
) -> Result<BestOfK, EvalError> {
    if k == 0 {
        return Err(EvalError::ZeroK);
    }
    if g.is_empty() {
        return Ok(BestOfK {
            order: EliminationOrder::default(),
            width: 0,
            sample_widths: vec![0; k],
        });
    }
    let episodes = (0..k as u64)
        .into_par_iter()
        .map(|i| rollout(net, g, ActMode::Sample, &mut seeded(derive_seed(seed, i))))
        .collect::<Result<Vec<_>, _>>()?;
    let best = episodes
        .iter()
        .enumerate()
        .min_by_key(|(i, e)| (e.width, *i))
        .map(|(_, e)| e)
        .unwrap();
    Ok(BestOfK {
        order: best.order(),
        width: best.width,
        sample_widths: episodes.iter().map(|e| e.width).collect(),
    })
}

/// One solver run on one graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub graph: String,
    pub method: String,
    pub width: usize,
    pub wall_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub graph: String,
    pub method: String,
    pub width: usize,
    pub reference_width: usize,
    /// `None` when the reference width is 0.
    pub ratio: Option<f64>,
    pub wall_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: String,
    pub graphs: usize,
    pub mean_ratio: f64,
    /// Population standard deviation.
    pub std_ratio: f64,
    pub max_ratio: f64,
    pub mean_wall_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub reference: String,
    pub rows: Vec<ReportRow>,
    pub summaries: Vec<MethodSummary>,
    /// Graphs left out of every ratio because the reference width is 0.
    pub excluded: Vec<String>,
}

/// Approximation ratio `width / reference width` of every method on every
/// graph, with per-method mean, standard deviation and maximum.
///
/// Rows are sorted by graph then method, summaries by method. Every method
/// must cover every graph the reference covers.
pub fn approximation_ratio(
    results: &[Measurement],
    reference: &str,
) -> Result<SolveReport, EvalError> {
    let mut table: BTreeMap<&str, BTreeMap<&str, &Measurement>> = BTreeMap::new();
    for m in results {
        table
            .entry(m.method.as_str())
            .or_default()
            .insert(m.graph.as_str(), m);
    }
    let refs = table
        .get(reference)
        .ok_or_else(|| EvalError::MissingReference(reference.to_string()))?
        .clone();
    let excluded: BTreeSet<&str> = refs
        .iter()
        .filter(|(_, m)| m.width == 0)
        .map(|(g, _)| *g)
        .collect();

    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for (method, per_graph) in &table {
        let mut ratios = Vec::new();
        let mut time = 0.0;
        for (graph, r) in &refs {
            let m = per_graph
                .get(graph)
                .ok_or_else(|| EvalError::MissingGraph {
                    method: method.to_string(),
                    graph: graph.to_string(),
                })?;
            let ratio = (r.width > 0).then(|| m.width as f64 / r.width as f64);
            ratios.extend(ratio);
            time += m.wall_ms;
            rows.push(ReportRow {
                graph: graph.to_string(),
                method: method.to_string(),
                width: m.width,
                reference_width: r.width,
                ratio,
                wall_ms: m.wall_ms,
            });
        }
        let (mean, std, max) = mean_std_max(&ratios);
        summaries.push(MethodSummary {
            method: method.to_string(),
            graphs: ratios.len(),
            mean_ratio: mean,
            std_ratio: std,
            max_ratio: max,
            mean_wall_ms: if refs.is_empty() {
                0.0
            } else {
                time / refs.len() as f64
            },
        });
    }
    rows.sort_by(|a, b| (&a.graph, &a.method).cmp(&(&b.graph, &b.method)));
    Ok(SolveReport {
        reference: reference.to_string(),
        rows,
        summaries,
        excluded: excluded.into_iter().map(str::to_string).collect(),
    })
}

fn mean_std_max(xs: &[f64]) -> (f64, f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (mean, var.sqrt(), max)
}

impl SolveReport {
    pub fn summary(&self, method: &str) -> Option<&MethodSummary> {
        self.summaries.iter().find(|s| s.method == method)
    }

    /// Per-graph rows as CSV.
    pub fn rows_csv(&self) -> String {
        let mut out = String::from("graph,method,width,reference_width,ratio,wall_ms\n");
        for r in &self.rows {
            let ratio = r.ratio.map(|x| x.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.graph, r.method, r.width, r.reference_width, ratio, r.wall_ms
            );
        }
        out
    }

    /// One line per method: mean ratio, its standard deviation, the maximum
    /// ratio and the mean time per graph.
    pub fn summary_csv(&self) -> String {
        let mut out =
            String::from("method,graphs,approx_ratio,approx_ratio_std,ratio_max,avg_time_ms\n");
        for s in &self.summaries {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                s.method, s.graphs, s.mean_ratio, s.std_ratio, s.max_ratio, s.mean_wall_ms
            );
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyRow {
    pub step: usize,
    pub remaining_nodes: usize,
    pub normalized_entropy: f64,
}

/// Normalised policy entropy at every state of one rollout.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EntropyTrace {
    pub rows: Vec<EntropyRow>,
}

/// `H / ln n` for a distribution over `n` actions; 0 when `n ≤ 1`.
pub fn normalized_entropy(probs: &[f64]) -> f64 {
    if probs.len() <= 1 {
        0.0
    } else {
        entropy(probs) / (probs.len() as f64).ln()
    }
}

/// Samples one rollout and records the normalised entropy of the policy
/// before each action. The trace has one row per node.
pub fn entropy_trace(net: &PolicyNet, g: &Graph, seed: u64) -> Result<EntropyTrace, EvalError> {
    let mut rng = seeded(seed);
    let mut env = EliminationEnv::new(g);
    let mut rows = Vec::with_capacity(g.node_count());
    while !env.is_done() {
        let eval = net.forward(env.graph())?;
        let probs = eval.probabilities();
        rows.push(EntropyRow {
            step: env.steps(),
            remaining_nodes: probs.len(),
            normalized_entropy: normalized_entropy(&probs),
        });
        let u = eval.ids[sample_index(&probs, &mut rng)];
        env.step(u).expect("sampled node is live");
    }
    Ok(EntropyTrace { rows })
}

impl EntropyTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,remaining_nodes,normalized_entropy\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{}",
                r.step, r.remaining_nodes, r.normalized_entropy
            );
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, EvalError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, "step,remaining_nodes,normalized_entropy")) => {}
            _ => {
                return Err(EvalError::TraceCsv {
                    line: 1,
                    msg: "missing header".into(),
                })
            }
        }
        let mut rows = Vec::new();
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let bad = |msg: &str| EvalError::TraceCsv {
                line: i + 1,
                msg: msg.to_string(),
            };
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 3 {
                return Err(bad("expected 3 fields"));
            }
            rows.push(EntropyRow {
                step: f[0].parse().map_err(|_| bad("bad step"))?,
                remaining_nodes: f[1].parse().map_err(|_| bad("bad node count"))?,
                normalized_entropy: f[2].parse().map_err(|_| bad("bad entropy"))?,
            });
        }
        Ok(EntropyTrace { rows })
    }
}

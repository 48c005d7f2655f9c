use std::fs;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use anyhow::{anyhow, Context};
use rayon::prelude::*;

use treewidth_core::decomposition::write_td;
use treewidth_core::evaluation::{
    approximation_ratio, entropy_trace, solve_best_of_k, Measurement,
};
use treewidth_core::exact::{
    exact_treewidth_bnb, exact_treewidth_bruteforce, BRUTEFORCE_MAX_NODES,
};
use treewidth_core::gcn::{NetConfig, PolicyNet};
use treewidth_core::heuristics::{min_degree_order, min_fill_order, random_order, TieBreak};
use treewidth_core::rl::{GraphSource, TrainConfig, Trainer, LOG_HEADER};
use treewidth_core::rng::derive_seed;
use treewidth_core::{
    generate_er, parse_gr, td_from_order, width_of_order, write_gr, EliminationOrder, ErConfig,
    Graph,
};

use crate::{
    bad_input, usage, EntropyArgs, EvalArgs, Failure, GenerateArgs, Method, SolveArgs, SolverOpts,
    TrainArgs,
};

type CmdResult = Result<(), Failure>;

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        bad_input(e)
    }
}

fn method_name(m: Method) -> &'static str {
    match m {
        Method::Exact => "exact",
        Method::Bnb => "bnb",
        Method::MinDegree => "min-degree",
        Method::MinFill => "min-fill",
        Method::Random => "random",
        Method::Agent => "agent",
    }
}

fn set_jobs(jobs: Option<usize>) {
    if let Some(j) = jobs {
        // fails only if a pool already exists, which is harmless
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build_global();
    }
}

fn read_graph(path: &Path) -> Result<Graph, Failure> {
    let file = fs::File::open(path)
        .with_context(|| format!("cannot open {}", path.display()))
        .map_err(bad_input)?;
    parse_gr(BufReader::new(file))
        .with_context(|| format!("cannot parse {}", path.display()))
        .map_err(bad_input)
}

fn load_net(path: &Path) -> Result<PolicyNet, Failure> {
    PolicyNet::load(path)
        .map(|(net, _)| net)
        .with_context(|| format!("cannot load checkpoint {}", path.display()))
        .map_err(bad_input)
}

fn write_output(dest: Option<&Path>, text: &str) -> CmdResult {
    match dest {
        Some(p) => fs::write(p, text)
            .with_context(|| format!("cannot write {}", p.display()))
            .map_err(bad_input),
        None => {
            io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn graph_name(path: &Path) -> String {
    path.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

pub fn generate(a: GenerateArgs) -> CmdResult {
    fs::create_dir_all(&a.out_dir)
        .with_context(|| format!("cannot create {}", a.out_dir.display()))
        .map_err(bad_input)?;
    let sizes: Vec<usize> = if a.sweep {
        (0..100).map(|i| 10 + (i * 990 + 49) / 99).collect()
    } else {
        vec![a.n.expect("clap requires --n"); a.count]
    };
    if let Some(p) = a.p {
        if !(0.0..=1.0).contains(&p) {
            return Err(usage(anyhow!("--p must lie in [0, 1]")));
        }
    }
    for (i, &n) in sizes.iter().enumerate() {
        let seed = derive_seed(a.seed, i as u64);
        let mut cfg = ErConfig::new(n, seed);
        if let Some(p) = a.p {
            cfg = cfg.with_probability(p);
        }
        let path = a.out_dir.join(format!("er_n{n}_s{seed}.gr"));
        fs::write(&path, write_gr(&generate_er(cfg)))
            .with_context(|| format!("cannot write {}", path.display()))
            .map_err(bad_input)?;
        println!("{}", path.display());
    }
    Ok(())
}

struct Solved {
    order: EliminationOrder,
    width: usize,
    proven: bool,
    wall_ms: f64,
}

fn require_seed(opts: &SolverOpts, method: Method) -> Result<u64, Failure> {
    opts.seed.ok_or_else(|| {
        usage(anyhow!(
            "--seed is required for the {} method",
            method_name(method)
        ))
    })
}

fn check_opts(methods: &[Method], opts: &SolverOpts) -> Result<Option<PolicyNet>, Failure> {
    if opts.k == 0 {
        return Err(usage(anyhow!("--k must be at least 1")));
    }
    if let Some(b) = opts.budget {
        if !(b >= 0.0 && b.is_finite()) {
            return Err(usage(anyhow!(
                "--budget must be a non-negative number of seconds"
            )));
        }
    }
    for &m in methods {
        if matches!(m, Method::Random | Method::Agent) {
            require_seed(opts, m)?;
        }
    }
    if methods.contains(&Method::Agent) {
        let path = opts
            .checkpoint
            .as_ref()
            .ok_or_else(|| usage(anyhow!("the agent method needs --checkpoint")))?;
        return load_net(path).map(Some);
    }
    Ok(None)
}

fn run_method(
    method: Method,
    g: &Graph,
    opts: &SolverOpts,
    net: Option<&PolicyNet>,
) -> Result<Solved, Failure> {
    let start = Instant::now();
    let mut proven = true;
    let order = match method {
        Method::Exact => {
            if g.node_count() > BRUTEFORCE_MAX_NODES {
                return Err(usage(anyhow!(
                    "exact handles at most {BRUTEFORCE_MAX_NODES} nodes, got {}; use bnb",
                    g.node_count()
                )));
            }
            exact_treewidth_bruteforce(g).map_err(usage)?.1
        }
        Method::Bnb => {
            let r = exact_treewidth_bnb(g, opts.budget.map(Duration::from_secs_f64));
            proven = r.proven_optimal;
            r.order
        }
        Method::MinDegree => min_degree_order(g, TieBreak::LowestId),
        Method::MinFill => min_fill_order(g, TieBreak::LowestId),
        Method::Random => random_order(g, require_seed(opts, method)?),
        Method::Agent => {
            let net = net.expect("checked by check_opts");
            solve_best_of_k(net, g, opts.k, require_seed(opts, method)?)
                .map_err(|e| bad_input(anyhow!(e)))?
                .order
        }
    };
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let width = width_of_order(g, &order)
        .expect("solvers return permutations")
        .0;
    Ok(Solved {
        order,
        width,
        proven,
        wall_ms,
    })
}

pub fn solve(a: SolveArgs) -> CmdResult {
    set_jobs(a.opts.jobs);
    let net = check_opts(&[a.method], &a.opts)?;
    let graphs = a
        .inputs
        .iter()
        .map(|p| read_graph(p))
        .collect::<Result<Vec<_>, _>>()?;
    let solved = graphs
        .par_iter()
        .map(|g| run_method(a.method, g, &a.opts, net.as_ref()))
        .collect::<Result<Vec<_>, _>>()?;

    if let Some(td_out) = &a.td_out {
        if a.inputs.len() > 1 {
            fs::create_dir_all(td_out)?;
        }
        for ((path, g), s) in a.inputs.iter().zip(&graphs).zip(&solved) {
            let td = td_from_order(g, &s.order).map_err(|e| bad_input(anyhow!(e)))?;
            let dest = if a.inputs.len() > 1 {
                td_out.join(Path::new(&graph_name(path)).with_extension("td"))
            } else {
                td_out.clone()
            };
            fs::write(&dest, write_td(&td, g.node_count()))
                .with_context(|| format!("cannot write {}", dest.display()))
                .map_err(bad_input)?;
        }
    }

    let mut report = String::from("graph,method,width,proven,wall_ms,order\n");
    for (path, s) in a.inputs.iter().zip(&solved) {
        let order: Vec<String> = s.order.as_slice().iter().map(|v| v.to_string()).collect();
        report += &format!(
            "{},{},{},{},{:.3},{}\n",
            graph_name(path),
            method_name(a.method),
            s.width,
            s.proven,
            s.wall_ms,
            order.join(" ")
        );
    }
    write_output(a.out.as_deref(), &report)?;
    if solved.iter().any(|s| !s.proven) {
        return Err(Failure {
            code: 3,
            error: anyhow!(
                "budget exhausted before optimality was proven; reported widths are upper bounds"
            ),
        });
    }
    Ok(())
}

fn train_config(a: &TrainArgs) -> Result<TrainConfig, Failure> {
    let mut cfg = match &a.config {
        Some(p) => TrainConfig::load(p).map_err(bad_input)?,
        None => TrainConfig::default(),
    };
    cfg.seed = a.seed;
    macro_rules! apply {
        ($($field:ident),*) => { $( if let Some(v) = a.$field { cfg.$field = v; } )* };
    }
    apply!(
        epochs,
        updates_per_epoch,
        episodes_per_update,
        lr,
        gamma,
        lambda,
        beta_value,
        beta_entropy
    );
    if a.no_wall_time {
        cfg.log_wall_time = false;
    }
    cfg.validate().map_err(usage)?;
    Ok(cfg)
}

pub fn train(a: TrainArgs) -> CmdResult {
    set_jobs(a.jobs);
    let cfg = train_config(&a)?;
    let source = match (&a.graph, a.er_n) {
        (Some(p), _) => GraphSource::Fixed(read_graph(p)?),
        (None, Some(n)) => GraphSource::Er { n, p: a.er_p },
        (None, None) => unreachable!("clap requires --graph or --er-n"),
    };
    let mut trainer = match &a.resume {
        Some(path) => {
            let (net, adam) = PolicyNet::load(path)
                .with_context(|| format!("cannot load checkpoint {}", path.display()))
                .map_err(bad_input)?;
            Trainer::resume(net, adam, source, cfg)
        }
        None => {
            let mut net_cfg = NetConfig::default();
            if let Some(h) = a.hidden {
                net_cfg.hidden = h;
            }
            Trainer::new(source, cfg, net_cfg)
        }
    }
    .map_err(usage)?;

    let mut log: Box<dyn Write> = match &a.log {
        Some(p) => Box::new(io::BufWriter::new(
            fs::File::create(p)
                .with_context(|| format!("cannot create {}", p.display()))
                .map_err(bad_input)?,
        )),
        None => Box::new(io::stdout()),
    };
    writeln!(log, "{LOG_HEADER}")?;
    let mut write_err = None;
    trainer
        .run(|row| {
            if let Err(e) = writeln!(log, "{}", row.csv_row()).and_then(|_| log.flush()) {
                write_err.get_or_insert(e);
            }
        })
        .map_err(|e| bad_input(anyhow!(e)))?;
    if let Some(e) = write_err {
        return Err(bad_input(e));
    }
    let (net, adam) = trainer.into_parts();
    net.save(&a.out, Some(&adam))
        .with_context(|| format!("cannot save {}", a.out.display()))
        .map_err(bad_input)
}

fn list_graphs(dir: &Path) -> Result<Vec<PathBuf>, Failure> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("cannot read {}", dir.display()))
        .map_err(bad_input)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "gr"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(bad_input(anyhow!("no .gr files in {}", dir.display())));
    }
    Ok(files)
}

pub fn eval(a: EvalArgs) -> CmdResult {
    set_jobs(a.opts.jobs);
    let mut methods = a.methods.clone();
    if !methods.contains(&a.reference) {
        methods.push(a.reference);
    }
    let net = check_opts(&methods, &a.opts)?;
    let files = list_graphs(&a.graph_dir)?;
    let graphs = files
        .iter()
        .map(|p| read_graph(p))
        .collect::<Result<Vec<_>, _>>()?;

    let jobs: Vec<(usize, Method)> = (0..graphs.len())
        .flat_map(|i| methods.iter().map(move |&m| (i, m)))
        .collect();
    let solved = jobs
        .par_iter()
        .map(|&(i, m)| run_method(m, &graphs[i], &a.opts, net.as_ref()))
        .collect::<Result<Vec<_>, _>>()?;
    let unproven = solved.iter().any(|s| !s.proven);
    let results: Vec<Measurement> = jobs
        .iter()
        .zip(&solved)
        .map(|(&(i, m), s)| Measurement {
            graph: graph_name(&files[i]),
            method: method_name(m).to_string(),
            width: s.width,
            wall_ms: s.wall_ms,
        })
        .collect();
    let report =
        approximation_ratio(&results, method_name(a.reference)).map_err(|e| usage(anyhow!(e)))?;
    if !report.excluded.is_empty() {
        eprintln!(
            "excluded (reference width 0): {}",
            report.excluded.join(", ")
        );
    }
    if let Some(p) = &a.csv {
        write_output(Some(p), &report.rows_csv())?;
    }
    if let Some(p) = &a.json {
        write_output(Some(p), &report.to_json())?;
    }
    write_output(a.out.as_deref(), &report.summary_csv())?;
    if unproven {
        return Err(Failure {
            code: 3,
            error: anyhow!("bnb budget exhausted on some graphs; their widths are upper bounds"),
        });
    }
    Ok(())
}

pub fn entropy(a: EntropyArgs) -> CmdResult {
    let net = load_net(&a.checkpoint)?;
    let g = read_graph(&a.graph)?;
    let trace = entropy_trace(&net, &g, a.seed).map_err(|e| bad_input(anyhow!(e)))?;
    write_output(a.out.as_deref(), &trace.to_csv())
}

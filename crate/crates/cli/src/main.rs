//! `treewidth` command-line tool.
//!
//! Exit codes: 0 success, 1 usage error, 2 unreadable or malformed input,
//! 3 the branch-and-bound budget ran out before optimality was proven.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "treewidth",
    version,
    about = "Treewidth heuristics, exact search and a learned elimination policy"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write seeded Erdős–Rényi graphs in PACE .gr format.
    Generate(GenerateArgs),
    /// Compute elimination orders for .gr files and report their widths.
    Solve(SolveArgs),
    /// Train the policy network with actor-critic.
    Train(TrainArgs),
    /// Compare methods by approximation ratio over a directory of .gr files.
    Eval(EvalArgs),
    /// Record the normalised policy entropy along one sampled rollout.
    Entropy(EntropyArgs),
}

#[derive(Args, Debug)]
struct GenerateArgs {
    /// Number of nodes per graph.
    #[arg(long, required_unless_present = "sweep")]
    n: Option<usize>,
    /// Edge probability (default 5/n, capped at 1).
    #[arg(long)]
    p: Option<f64>,
    /// Number of graphs.
    #[arg(long, default_value_t = 1)]
    count: usize,
    /// Instead of --n/--count, write 100 graphs with n spread evenly over 10..=1000.
    #[arg(long, conflicts_with_all = ["n", "count"])]
    sweep: bool,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Method {
    /// Exhaustive search over all orders (at most 10 nodes).
    Exact,
    /// Branch-and-bound over eliminated sets.
    Bnb,
    MinDegree,
    MinFill,
    /// One uniformly random order.
    Random,
    /// Best of k orders sampled from a trained policy.
    Agent,
}

#[derive(Args, Debug, Clone)]
struct SolverOpts {
    /// Samples for the agent method.
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// Trained policy checkpoint (agent method).
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Seed for random and agent methods.
    #[arg(long)]
    seed: Option<u64>,
    /// Time budget in seconds for bnb, per graph.
    #[arg(long)]
    budget: Option<f64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args, Debug)]
struct SolveArgs {
    /// Input .gr files.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long, value_enum)]
    method: Method,
    #[command(flatten)]
    opts: SolverOpts,
    /// Write PACE .td decompositions: a file for one input, a directory for several.
    #[arg(long)]
    td_out: Option<PathBuf>,
    /// Report CSV destination (default stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// Train on this fixed graph.
    #[arg(long, conflicts_with = "er_n", required_unless_present = "er_n")]
    graph: Option<PathBuf>,
    /// Train on a fresh Erdős–Rényi graph of this size every update.
    #[arg(long)]
    er_n: Option<usize>,
    /// Edge probability for --er-n (default 5/n).
    #[arg(long, requires = "er_n")]
    er_p: Option<f64>,
    /// JSON or TOML training config; missing keys take defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    updates_per_epoch: Option<usize>,
    #[arg(long)]
    episodes_per_update: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    beta_value: Option<f64>,
    #[arg(long)]
    beta_entropy: Option<f64>,
    /// Hidden width of a new network.
    #[arg(long)]
    hidden: Option<usize>,
    /// Write 0 in the wall_ms log column so logs are reproducible.
    #[arg(long)]
    no_wall_time: bool,
    /// Continue from this checkpoint (parameters and optimiser state).
    #[arg(long)]
    resume: Option<PathBuf>,
    /// Output checkpoint; the network config goes to <out>.json.
    #[arg(long)]
    out: PathBuf,
    /// Training log CSV (default stdout).
    #[arg(long)]
    log: Option<PathBuf>,
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    graph_dir: PathBuf,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Method::MinDegree, Method::MinFill, Method::Random])]
    methods: Vec<Method>,
    /// Method whose widths form the ratio denominator.
    #[arg(long, value_enum, default_value_t = Method::Bnb)]
    reference: Method,
    #[command(flatten)]
    opts: SolverOpts,
    /// Per-graph CSV destination.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Full JSON report destination.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Summary CSV destination (default stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EntropyArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    seed: u64,
    /// Trace CSV destination (default stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

/// An error with the process exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

pub fn usage(error: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: 1,
        error: error.into(),
    }
}

pub fn bad_input(error: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: 2,
        error: error.into(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Generate(a) => commands::generate(a),
        Command::Solve(a) => commands::solve(a),
        Command::Train(a) => commands::train(a),
        Command::Eval(a) => commands::eval(a),
        Command::Entropy(a) => commands::entropy(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

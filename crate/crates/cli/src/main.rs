//! `embeval` command-line tool.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use embeval::synth::ScenarioKind;
use embeval::{Error, MissingPolicy, RegularizationMode, DEFAULT_CLIP_EPS};

mod commands;
mod manifest;

/// Tool version plus the JSON report schema version.
const VERSION_LINE: &str = concat!(env!("CARGO_PKG_VERSION"), " (report schema 1)");

#[derive(Debug, Parser)]
#[command(name = "embeval", version = VERSION_LINE, about = "Score embeddings against entity meta-features")]
struct Cli {
    /// Worker threads (default: all available cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Average log posterior of an embedding under a clustering.
    Eval(EvalArgs),
    /// Grow an embedding tree and write its leaves as a clustering.
    Tree(TreeArgs),
    /// Sample a synthetic Gaussian-mixture dataset.
    Synth(SynthArgs),
    /// Train a linear probe and report its accuracy.
    Probe(ProbeArgs),
    /// Pearson and Spearman correlation of two series.
    Correlate(CorrelateArgs),
    /// Cross-score two embedding sets of the same entities.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Missing {
    Error,
    Category,
}

impl From<Missing> for MissingPolicy {
    fn from(m: Missing) -> Self {
        match m {
            Missing::Error => MissingPolicy::Error,
            Missing::Category => MissingPolicy::Category,
        }
    }
}

#[derive(Debug, Args)]
struct FeatureArgs {
    /// Feature CSV (`id,<col1>,<col2>,...`).
    #[arg(long)]
    features: Option<PathBuf>,

    /// How to treat empty feature cells.
    #[arg(long, value_enum, default_value = "error")]
    missing: Missing,

    /// Bin a numeric column into quantiles before use, e.g. `year:4`.
    #[arg(long, value_name = "COL:NBINS")]
    discretize: Vec<String>,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct CriterionArgs {
    /// Cluster by the categories of one feature column.
    #[arg(long, value_name = "COL")]
    cluster_by: Option<String>,

    /// Clustering CSV (`id,cluster`).
    #[arg(long, value_name = "PATH")]
    clusters: Option<PathBuf>,

    /// Use the leaves of a saved tree JSON as clusters.
    #[arg(long, value_name = "PATH")]
    tree: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    embeddings: PathBuf,

    #[command(flatten)]
    features: FeatureArgs,

    #[command(flatten)]
    criterion: CriterionArgs,

    /// diag, auto, or tikhonov:<lambda>.
    #[arg(long, default_value = "auto")]
    reg: RegularizationMode,

    #[arg(long, default_value_t = DEFAULT_CLIP_EPS)]
    clip_eps: f64,

    /// Number of random subspace heads.
    #[arg(long)]
    heads: Option<usize>,

    /// Dimensions per head.
    #[arg(long)]
    head_dims: Option<usize>,

    /// Draw heads as disjoint blocks of one permutation.
    #[arg(long)]
    heads_partition: bool,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TreeArgs {
    #[arg(long)]
    embeddings: PathBuf,

    #[command(flatten)]
    features: FeatureArgs,

    #[arg(long, default_value_t = 10)]
    max_depth: usize,

    /// Minimum entities per node.
    #[arg(long = "min-node", default_value_t = 50)]
    min_node: usize,

    /// Override the smallest admissible split side.
    #[arg(long)]
    min_side: Option<usize>,

    #[arg(long, default_value = "auto")]
    reg: RegularizationMode,

    /// Feature prior CSV (`feature,log_prior`).
    #[arg(long)]
    prior: Option<PathBuf>,

    /// Record each split's log posterior normalized over all candidates.
    #[arg(long)]
    report_normalized: bool,

    /// Writes `<prefix>.tree.json` and `<prefix>.leaves.csv`.
    #[arg(long)]
    out_prefix: PathBuf,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    kind: ScenarioKind,

    #[arg(long, default_value_t = 10)]
    k: usize,

    #[arg(long, default_value_t = 2)]
    dim: usize,

    #[arg(long, default_value_t = 1000)]
    n_per: usize,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Standard deviation of extra isotropic noise added after sampling.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,

    /// Writes `<prefix>.embeddings.csv`, `.clusters.csv`, `.features.csv`, `.spec.json`.
    #[arg(long)]
    out_prefix: PathBuf,
}

#[derive(Debug, Args)]
struct ProbeArgs {
    #[arg(long)]
    embeddings: PathBuf,

    #[command(flatten)]
    features: FeatureArgs,

    #[command(flatten)]
    criterion: CriterionArgs,

    #[arg(long, default_value_t = 500)]
    epochs: usize,

    #[arg(long, default_value_t = 0.1)]
    lr: f64,

    #[arg(long, default_value_t = 1e-4)]
    l2: f64,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Held-out embeddings to report accuracy on.
    #[arg(long)]
    eval_embeddings: Option<PathBuf>,

    /// Labels for the held-out set; needed unless labels come from --cluster-by.
    #[arg(long, requires = "eval_embeddings")]
    eval_clusters: Option<PathBuf>,

    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CorrelateArgs {
    /// CSV with one row per layer or model.
    #[arg(long)]
    series: PathBuf,

    #[arg(long, default_value = "alp")]
    x_column: String,

    #[arg(long, default_value = "probe_acc")]
    y_column: String,

    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[arg(long)]
    embeddings_a: PathBuf,

    #[arg(long)]
    embeddings_b: PathBuf,

    #[command(flatten)]
    features: FeatureArgs,

    /// Shared criterion: one feature column.
    #[arg(long, value_name = "COL", conflicts_with_all = ["tree_a", "tree_b"])]
    cluster_by: Option<String>,

    /// Tree built on A, used as criterion A.
    #[arg(long, requires = "tree_b")]
    tree_a: Option<PathBuf>,

    /// Tree built on B, used as criterion B.
    #[arg(long, requires = "tree_a")]
    tree_b: Option<PathBuf>,

    #[arg(long, default_value = "auto")]
    reg: RegularizationMode,

    #[arg(long, default_value_t = DEFAULT_CLIP_EPS)]
    clip_eps: f64,

    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<(), Error> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Eval(a) => commands::eval(a),
        Command::Tree(a) => commands::tree(a),
        Command::Synth(a) => commands::synth(a),
        Command::Probe(a) => commands::probe(a),
        Command::Correlate(a) => commands::correlate(a),
        Command::Compare(a) => commands::compare(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("embeval: error: {msg}");
            ExitCode::from(if e.is_input_error() { 2 } else { 1 })
        }
    }
}

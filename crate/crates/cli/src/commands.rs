use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use embeval::alp::MultiHeadConfig;
use embeval::data::{load_clusters, load_features_with};
use embeval::probe::{correlate as correlate_series, train_linear_probe, LinearProbe, ProbeConfig};
use embeval::synth::{add_isotropic_noise, generate, scenario_spec};
use embeval::tree::{build_tree, leaf_clustering, FeaturePrior, TreeConfig, TreeJson, TreeParams};
use embeval::{
    align, alp_score, binarize, cluster_by_feature, compare_embeddings, discretize_numeric,
    fit_cluster_model, load_embeddings, mean_alp_multihead, Clustering, EmbeddingSet, Error,
    FeatureTable, HeadSampling, Result,
};
use serde::Serialize;

use crate::manifest::{ManifestBuilder, WithManifest};
use crate::{
    CompareArgs, CorrelateArgs, CriterionArgs, EvalArgs, FeatureArgs, ProbeArgs, SynthArgs,
    TreeArgs,
};

fn emit<T: Serialize>(report: &T, mb: ManifestBuilder, out: Option<&Path>) -> Result<()> {
    let doc = WithManifest {
        report,
        manifest: mb.finish(),
    };
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    match out {
        Some(path) => fs::write(path, text).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        }),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|source| Error::Io {
                path: "<stdout>".into(),
                source,
            }),
    }
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn load_embeddings_logged(path: &Path, mb: &mut ManifestBuilder) -> Result<EmbeddingSet> {
    mb.input(path)?;
    load_embeddings(path)
}

fn load_feature_table(args: &FeatureArgs, mb: &mut ManifestBuilder) -> Result<Option<FeatureTable>> {
    let Some(path) = &args.features else {
        if !args.discretize.is_empty() {
            return Err(Error::InvalidArgument("--discretize requires --features".into()));
        }
        return Ok(None);
    };
    mb.input(path)?;
    let mut table = load_features_with(path, args.missing.into())?;
    for spec in &args.discretize {
        let (col, bins) = spec.rsplit_once(':').ok_or_else(|| {
            Error::InvalidArgument(format!("--discretize expects COL:NBINS, got `{spec}`"))
        })?;
        let nbins = bins
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("bin count `{bins}` is not an integer")))?;
        table = discretize_numeric(&table, col, nbins)?;
    }
    Ok(Some(table))
}

/// Embeddings, plus features aligned to them when a feature file is given.
fn load_inputs(
    embeddings: &Path,
    features: &FeatureArgs,
    mb: &mut ManifestBuilder,
) -> Result<(EmbeddingSet, Option<FeatureTable>)> {
    let emb = load_embeddings_logged(embeddings, mb)?;
    match load_feature_table(features, mb)? {
        Some(table) => {
            let (emb, table) = align(&emb, &table)?;
            Ok((emb, Some(table)))
        }
        None => Ok((emb, None)),
    }
}

fn load_tree(path: &Path, mb: &mut ManifestBuilder) -> Result<TreeJson> {
    mb.input(path)?;
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(serde_json::from_str(&text)?)
}

fn feature_clustering(feats: Option<&FeatureTable>, column: &str) -> Result<Clustering> {
    let feats = feats.ok_or_else(|| Error::InvalidArgument("--cluster-by requires --features".into()))?;
    cluster_by_feature(feats, column)
}

fn resolve_criterion(
    crit: &CriterionArgs,
    ids: &[String],
    feats: Option<&FeatureTable>,
    mb: &mut ManifestBuilder,
) -> Result<Clustering> {
    if let Some(col) = &crit.cluster_by {
        feature_clustering(feats, col)
    } else if let Some(path) = &crit.clusters {
        mb.input(path)?;
        load_clusters(path, ids)
    } else if let Some(path) = &crit.tree {
        load_tree(path, mb)?.leaf_clustering(ids)
    } else {
        Err(Error::InvalidArgument(
            "one of --cluster-by, --clusters or --tree is required".into(),
        ))
    }
}

pub fn eval(args: EvalArgs) -> Result<()> {
    let mut mb = ManifestBuilder::start();
    if args.heads == Some(0) {
        return Err(Error::InvalidArgument("heads must be ≥ 1".into()));
    }
    if args.head_dims == Some(0) {
        return Err(Error::InvalidArgument("head-dims must be ≥ 1".into()));
    }
    let (emb, feats) = load_inputs(&args.embeddings, &args.features, &mut mb)?;
    let clustering = resolve_criterion(&args.criterion, emb.ids(), feats.as_ref(), &mut mb)?;
    let out = args.out.as_deref();
    let multi = args.heads.is_some() || args.head_dims.is_some() || args.heads_partition;
    if multi {
        mb.seed(args.seed);
        let cfg = MultiHeadConfig {
            v: args.head_dims.unwrap_or(emb.dim()),
            n_heads: args.heads.unwrap_or(1),
            seed: args.seed,
            clip_eps: args.clip_eps,
            sampling: if args.heads_partition {
                HeadSampling::Partition
            } else {
                HeadSampling::Independent
            },
        };
        let report = mean_alp_multihead(&emb, &clustering, args.reg, &cfg)?;
        emit(&report, mb, out)
    } else {
        let model = fit_cluster_model(&emb, &clustering, args.reg, None)?;
        let report = alp_score(&model, &emb, &clustering, args.clip_eps)?;
        emit(&report, mb, out)
    }
}

#[derive(Serialize)]
struct TreeSummary {
    tree_path: String,
    leaves_path: String,
    n_entities: usize,
    n_leaves: usize,
    depth: usize,
}

pub fn tree(args: TreeArgs) -> Result<()> {
    let mut mb = ManifestBuilder::start();
    let (emb, feats) = load_inputs(&args.embeddings, &args.features, &mut mb)?;
    let feats = feats.ok_or_else(|| Error::InvalidArgument("tree requires --features".into()))?;
    let prior = match &args.prior {
        Some(path) => {
            mb.input(path)?;
            let file = File::open(path).map_err(|source| Error::Io {
                path: path.clone(),
                source,
            })?;
            Some(FeaturePrior::from_csv(file, &binarize(&feats))?)
        }
        None => None,
    };
    let config = TreeConfig {
        params: TreeParams {
            max_depth: args.max_depth,
            min_node_size: args.min_node,
        },
        reg: args.reg,
        min_side: args.min_side,
        report_normalized: args.report_normalized,
    };
    let tree = build_tree(&emb, &feats, &config, prior.as_ref())?;

    let tree_path = with_suffix(&args.out_prefix, ".tree.json");
    let leaves_path = with_suffix(&args.out_prefix, ".leaves.csv");
    let mut text = tree.to_json().to_string_pretty()?;
    text.push('\n');
    fs::write(&tree_path, text).map_err(|source| Error::Io {
        path: tree_path.clone(),
        source,
    })?;
    let leaves = leaf_clustering(&tree);
    leaves.save(emb.ids(), &leaves_path)?;

    let summary = TreeSummary {
        tree_path: tree_path.display().to_string(),
        leaves_path: leaves_path.display().to_string(),
        n_entities: emb.len(),
        n_leaves: leaves.m(),
        depth: tree.depth(),
    };
    emit(&summary, mb, None)
}

#[derive(Serialize)]
struct SynthSummary {
    embeddings_path: String,
    clusters_path: String,
    features_path: String,
    spec_path: String,
    n_entities: usize,
    dim: usize,
}

pub fn synth(args: SynthArgs) -> Result<()> {
    let mut mb = ManifestBuilder::start();
    mb.seed(args.seed);
    if !(args.noise >= 0.0 && args.noise.is_finite()) {
        return Err(Error::InvalidArgument(format!("noise must be ≥ 0, got {}", args.noise)));
    }
    let spec = scenario_spec(args.kind, args.k, args.dim, args.n_per, args.seed)?;
    let (mut emb, clustering) = generate(&spec)?;
    if args.noise > 0.0 {
        emb = add_isotropic_noise(&emb, args.noise, args.seed)?;
    }

    let embeddings_path = with_suffix(&args.out_prefix, ".embeddings.csv");
    let clusters_path = with_suffix(&args.out_prefix, ".clusters.csv");
    let features_path = with_suffix(&args.out_prefix, ".features.csv");
    let spec_path = with_suffix(&args.out_prefix, ".spec.json");
    emb.save(&embeddings_path)?;
    clustering.save(emb.ids(), &clusters_path)?;
    let labels: Vec<String> = clustering
        .assignment()
        .iter()
        .map(|&k| clustering.labels()[k].clone())
        .collect();
    FeatureTable::from_columns(emb.ids().to_vec(), vec![("component".into(), labels)])?
        .save(&features_path)?;
    let mut text = serde_json::to_string_pretty(&spec)?;
    text.push('\n');
    fs::write(&spec_path, text).map_err(|source| Error::Io {
        path: spec_path.clone(),
        source,
    })?;

    let summary = SynthSummary {
        embeddings_path: embeddings_path.display().to_string(),
        clusters_path: clusters_path.display().to_string(),
        features_path: features_path.display().to_string(),
        spec_path: spec_path.display().to_string(),
        n_entities: emb.len(),
        dim: emb.dim(),
    };
    emit(&summary, mb, None)
}

#[derive(Serialize)]
struct ProbeReport {
    probe: LinearProbe,
    criterion: String,
    n_train: usize,
    train_accuracy: f64,
    n_eval: Option<usize>,
    eval_accuracy: Option<f64>,
}

fn accuracy_by_label(probe: &LinearProbe, emb: &EmbeddingSet, labels: &Clustering) -> Result<f64> {
    if emb.dim() != probe.dim() {
        return Err(Error::DimensionMismatch {
            expected: probe.dim(),
            actual: emb.dim(),
        });
    }
    let index: HashMap<&str, usize> = probe
        .class_labels
        .iter()
        .enumerate()
        .map(|(i, l)| (l.as_str(), i))
        .collect();
    let mut correct = 0usize;
    for (row, &k) in emb.rows().zip(labels.assignment()) {
        let name = labels.labels()[k].as_str();
        let &want = index
            .get(name)
            .ok_or_else(|| Error::InvalidArgument(format!("label `{name}` was not seen in training")))?;
        correct += usize::from(probe.predict(row) == want);
    }
    Ok(100.0 * correct as f64 / emb.len() as f64)
}

pub fn probe(args: ProbeArgs) -> Result<()> {
    let mut mb = ManifestBuilder::start();
    mb.seed(args.seed);
    let feature_table = load_feature_table(&args.features, &mut mb)?;
    let raw = load_embeddings_logged(&args.embeddings, &mut mb)?;
    let (emb, feats) = match &feature_table {
        Some(t) => {
            let (e, f) = align(&raw, t)?;
            (e, Some(f))
        }
        None => (raw, None),
    };
    let labels = resolve_criterion(&args.criterion, emb.ids(), feats.as_ref(), &mut mb)?;
    let config = ProbeConfig {
        learning_rate: args.lr,
        epochs: args.epochs,
        l2_lambda: args.l2,
        seed: args.seed,
    };
    let probe = train_linear_probe(&emb, &labels, config)?;
    let train_accuracy = accuracy_by_label(&probe, &emb, &labels)?;

    let (n_eval, eval_accuracy) = match &args.eval_embeddings {
        Some(path) => {
            let raw = load_embeddings_logged(path, &mut mb)?;
            let (eval_emb, eval_feats) = match &feature_table {
                Some(t) => {
                    let (e, f) = align(&raw, t)?;
                    (e, Some(f))
                }
                None => (raw, None),
            };
            if eval_emb.dim() != emb.dim() {
                return Err(Error::DimensionMismatch {
                    expected: emb.dim(),
                    actual: eval_emb.dim(),
                });
            }
            let eval_labels = match (&args.eval_clusters, &args.criterion.cluster_by) {
                (Some(path), _) => {
                    mb.input(path)?;
                    load_clusters(path, eval_emb.ids())?
                }
                (None, Some(col)) => feature_clustering(eval_feats.as_ref(), col)?,
                (None, None) => {
                    return Err(Error::InvalidArgument(
                        "--eval-embeddings needs --eval-clusters unless labels come from --cluster-by".into(),
                    ))
                }
            };
            (
                Some(eval_emb.len()),
                Some(accuracy_by_label(&probe, &eval_emb, &eval_labels)?),
            )
        }
        None => (None, None),
    };
    let report = ProbeReport {
        probe,
        criterion: labels.criterion().to_string(),
        n_train: emb.len(),
        train_accuracy,
        n_eval,
        eval_accuracy,
    };
    emit(&report, mb, args.out.as_deref())
}

fn read_series(path: &Path, x: &str, y: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let source = path.display().to_string();
    let file = File::open(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let mut rdr = csv::Reader::from_reader(file);
    let parse_err = |line: u64, message: String| Error::Parse {
        path: source.clone(),
        line,
        message,
    };
    let headers = rdr.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    };
    let (xi, yi) = (find(x)?, find(y)?);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec.map_err(|e| parse_err(0, e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        for (i, out) in [(xi, &mut xs), (yi, &mut ys)] {
            let cell = rec.get(i).unwrap_or("").trim();
            out.push(
                cell.parse()
                    .map_err(|_| parse_err(line, format!("`{cell}` is not a number")))?,
            );
        }
    }
    Ok((xs, ys))
}

pub fn correlate(args: CorrelateArgs) -> Result<()> {
    let mut mb = ManifestBuilder::start();
    mb.input(&args.series)?;
    let (xs, ys) = read_series(&args.series, &args.x_column, &args.y_column)?;
    let result = correlate_series(&xs, &ys)?;
    emit(&result, mb, args.out.as_deref())
}

pub fn compare(args: CompareArgs) -> Result<()> {
    let mut mb = ManifestBuilder::start();
    let (emb_a, feats) = load_inputs(&args.embeddings_a, &args.features, &mut mb)?;
    let emb_b = load_embeddings_logged(&args.embeddings_b, &mut mb)?.reindex(emb_a.ids())?;
    let (clust_a, clust_b) = match (&args.cluster_by, &args.tree_a, &args.tree_b) {
        (Some(col), _, _) => {
            let c = feature_clustering(feats.as_ref(), col)?;
            (c.clone(), c)
        }
        (None, Some(ta), Some(tb)) => (
            load_tree(ta, &mut mb)?.leaf_clustering(emb_a.ids())?,
            load_tree(tb, &mut mb)?.leaf_clustering(emb_a.ids())?,
        ),
        _ => {
            return Err(Error::InvalidArgument(
                "either --cluster-by or both --tree-a and --tree-b are required".into(),
            ))
        }
    };
    let report = compare_embeddings(&emb_a, &emb_b, &clust_a, &clust_b, args.reg, args.clip_eps)?;
    emit(&report, mb, args.out.as_deref())
}

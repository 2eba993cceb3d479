//! Embedding tree induction.
//!
//! Every node asks one yes/no question over the binarized meta-features.
//! The question is chosen to maximize the log joint likelihood of a hard
//! two-component Gaussian mixture whose components are the "no" and "yes"
//! sides, plus the feature's log prior. Leaves become clusters.

use std::collections::HashMap;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::alp::log_sum_exp;
use crate::data::{binarize, BinaryFeatureTable, Clustering, EmbeddingSet, FeatureTable};
use crate::error::{Error, Result};
use crate::gaussian::{GaussianComponent, RegularizationMode};
use crate::par;

/// Stopping rule: maximum depth and minimum entities per node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_node_size: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: 10,
            min_node_size: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeConfig {
    pub params: TreeParams,
    pub reg: RegularizationMode,
    /// Smallest admissible side of a split; `None` picks [`default_min_side`].
    pub min_side: Option<usize>,
    /// Record each chosen split's log posterior normalized over all candidates.
    pub report_normalized: bool,
}

impl TreeConfig {
    pub fn new(params: TreeParams, reg: RegularizationMode) -> Self {
        Self {
            params,
            reg,
            min_side: None,
            report_normalized: false,
        }
    }
}

/// `max(min_node_size, d + 1)` when the ridge is data-driven or tiny, since
/// fewer than `d + 1` points give a rank-deficient covariance; otherwise
/// `min_node_size`.
pub fn default_min_side(min_node_size: usize, dim: usize, reg: RegularizationMode) -> usize {
    let needs_rank = match reg {
        RegularizationMode::AutoEpsilon => true,
        RegularizationMode::Tikhonov { lambda } => lambda < 1e-6,
        RegularizationMode::Diagonal => false,
    };
    let side = if needs_rank {
        min_node_size.max(dim + 1)
    } else {
        min_node_size
    };
    side.max(1)
}

/// Log prior per binary feature; uniform by default.
#[derive(Debug, Clone, PartialEq)]
pub struct FeaturePrior {
    log_prior: Vec<f64>,
}

impl FeaturePrior {
    pub fn uniform(q: usize) -> Self {
        Self {
            log_prior: vec![0.0; q],
        }
    }

    pub fn new(log_prior: Vec<f64>) -> Result<Self> {
        if log_prior.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("feature log priors must be finite".into()));
        }
        Ok(Self { log_prior })
    }

    pub fn log_prior(&self) -> &[f64] {
        &self.log_prior
    }

    /// Parse `feature,log_prior` rows where `feature` is `column==category`.
    /// Features not listed get log prior 0.
    pub fn from_csv<R: Read>(reader: R, bin: &BinaryFeatureTable) -> Result<Self> {
        let index: HashMap<String, usize> = bin
            .columns()
            .iter()
            .enumerate()
            .map(|(i, c)| (c.name(), i))
            .collect();
        let mut log_prior = vec![0.0; bin.q()];
        let mut rdr = csv::Reader::from_reader(reader);
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::InvalidArgument(format!("prior file: {e}")))?;
            let line = rec.position().map_or(0, |p| p.line());
            if rec.len() != 2 {
                return Err(Error::Parse {
                    path: "prior".into(),
                    line,
                    message: "expected `feature,log_prior`".into(),
                });
            }
            let &i = index
                .get(rec[0].trim())
                .ok_or_else(|| Error::UnknownColumn(rec[0].trim().to_string()))?;
            log_prior[i] = rec[1].trim().parse().map_err(|_| Error::Parse {
                path: "prior".into(),
                line,
                message: format!("log prior `{}` is not a number", &rec[1]),
            })?;
        }
        Self::new(log_prior)
    }
}

/// Unnormalized log MAP score of splitting a node on one binary feature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitScore {
    pub log_joint: f64,
    pub feature_index: usize,
    /// Entities answering "no" (value 0).
    pub left_count: usize,
    /// Entities answering "yes" (value 1).
    pub right_count: usize,
}

fn side_log_likelihood(
    emb: &EmbeddingSet,
    rows: &[usize],
    reg: RegularizationMode,
    log_weight: f64,
) -> Result<f64> {
    let d = emb.dim();
    let mut points = Vec::with_capacity(rows.len() * d);
    for &i in rows {
        points.extend_from_slice(emb.row(i));
    }
    let comp = GaussianComponent::fit(&points, d, reg, log_weight)?;
    let mut scratch = Vec::with_capacity(d);
    let mut total = 0.0;
    for x in points.chunks_exact(d) {
        total += log_weight + comp.log_density_with(x, &mut scratch);
    }
    Ok(total)
}

/// Score the split of `rows` by `column` (indexed by entity, values 0/1).
///
/// Both sides get an MLE Gaussian (regularized by `reg`) and weight
/// `side size / node size`; the score is the summed log of `w · N(x)` over
/// the node plus `log_prior`. Returns `None` when either side has fewer than
/// `min_side` entities.
pub fn split_score(
    emb: &EmbeddingSet,
    rows: &[usize],
    column: &[u8],
    feature_index: usize,
    reg: RegularizationMode,
    log_prior: f64,
    min_side: usize,
) -> Result<Option<SplitScore>> {
    let (right, left): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| column[i] == 1);
    let min_side = min_side.max(1);
    if left.len() < min_side || right.len() < min_side {
        return Ok(None);
    }
    let n = rows.len() as f64;
    let ll_left = side_log_likelihood(emb, &left, reg, (left.len() as f64 / n).ln())?;
    let ll_right = side_log_likelihood(emb, &right, reg, (right.len() as f64 / n).ln())?;
    Ok(Some(SplitScore {
        log_joint: ll_left + ll_right + log_prior,
        feature_index,
        left_count: left.len(),
        right_count: right.len(),
    }))
}

/// Scores of every binary feature on a node, in feature order.
pub fn score_candidates(
    emb: &EmbeddingSet,
    rows: &[usize],
    bin: &BinaryFeatureTable,
    reg: RegularizationMode,
    prior: &FeaturePrior,
    min_side: usize,
) -> Result<Vec<Option<SplitScore>>> {
    if prior.log_prior.len() != bin.q() {
        return Err(Error::DimensionMismatch {
            expected: bin.q(),
            actual: prior.log_prior.len(),
        });
    }
    par::map_indexed(bin.q(), |k| {
        split_score(
            emb,
            rows,
            &bin.columns()[k].values,
            k,
            reg,
            prior.log_prior[k],
            min_side,
        )
    })
    .into_iter()
    .collect()
}

/// First candidate with the strictly largest score.
pub fn select_best(candidates: &[Option<SplitScore>]) -> Option<SplitScore> {
    let mut best: Option<SplitScore> = None;
    for s in candidates.iter().flatten() {
        if best.is_none_or(|b| s.log_joint > b.log_joint) {
            best = Some(*s);
        }
    }
    best
}

/// Candidate scores minus the log-sum-exp over all admissible candidates,
/// i.e. the fully normalized log posterior of each feature.
pub fn normalized_log_posteriors(candidates: &[Option<SplitScore>]) -> Vec<Option<f64>> {
    let admissible: Vec<f64> = candidates.iter().flatten().map(|s| s.log_joint).collect();
    let lse = log_sum_exp(&admissible);
    candidates
        .iter()
        .map(|c| c.map(|s| s.log_joint - lse))
        .collect()
}

/// The admissible feature with the largest score on `rows`, ties to the lowest index.
pub fn best_split(
    emb: &EmbeddingSet,
    rows: &[usize],
    bin: &BinaryFeatureTable,
    reg: RegularizationMode,
    prior: &FeaturePrior,
    min_side: usize,
) -> Result<Option<(usize, SplitScore)>> {
    let candidates = score_candidates(emb, rows, bin, reg, prior, min_side)?;
    Ok(select_best(&candidates).map(|s| (s.feature_index, s)))
}

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Split {
        feature_index: usize,
        score: SplitScore,
        normalized_log_posterior: Option<f64>,
        /// Entities with feature value 0.
        left: Box<TreeNode>,
        /// Entities with feature value 1.
        right: Box<TreeNode>,
    },
    Leaf {
        entities: Vec<usize>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTree {
    root: TreeNode,
    ids: Vec<String>,
    features: Vec<String>,
    params: TreeParams,
    reg: RegularizationMode,
}

/// Grow a tree over `emb` using the categorical columns of `feats`.
pub fn build_tree(
    emb: &EmbeddingSet,
    feats: &FeatureTable,
    config: &TreeConfig,
    prior: Option<&FeaturePrior>,
) -> Result<EmbeddingTree> {
    if emb.ids() != feats.ids() {
        return Err(Error::IdMismatch(
            "embeddings and features must be aligned before building a tree".into(),
        ));
    }
    if config.params.min_node_size < 1 {
        return Err(Error::InvalidArgument("min_node_size must be ≥ 1".into()));
    }
    let bin = binarize(feats);
    let uniform;
    let prior = match prior {
        Some(p) => p,
        None => {
            uniform = FeaturePrior::uniform(bin.q());
            &uniform
        }
    };
    let min_side = config.min_side.unwrap_or_else(|| {
        default_min_side(config.params.min_node_size, emb.dim(), config.reg)
    });
    let builder = Builder {
        emb,
        bin: &bin,
        config,
        prior,
        min_side,
    };
    let root = builder.grow((0..emb.len()).collect(), 0)?;
    Ok(EmbeddingTree {
        root,
        ids: emb.ids().to_vec(),
        features: bin.columns().iter().map(|c| c.name()).collect(),
        params: config.params,
        reg: config.reg,
    })
}

struct Builder<'a> {
    emb: &'a EmbeddingSet,
    bin: &'a BinaryFeatureTable,
    config: &'a TreeConfig,
    prior: &'a FeaturePrior,
    min_side: usize,
}

impl Builder<'_> {
    fn grow(&self, rows: Vec<usize>, depth: usize) -> Result<TreeNode> {
        let params = self.config.params;
        if depth >= params.max_depth || rows.len() < 2 * params.min_node_size {
            return Ok(TreeNode::Leaf { entities: rows });
        }
        let candidates =
            score_candidates(self.emb, &rows, self.bin, self.config.reg, self.prior, self.min_side)?;
        let Some(best) = select_best(&candidates) else {
            return Ok(TreeNode::Leaf { entities: rows });
        };
        let normalized = self
            .config
            .report_normalized
            .then(|| normalized_log_posteriors(&candidates)[best.feature_index])
            .flatten();
        let column = &self.bin.columns()[best.feature_index].values;
        let (right, left): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| column[i] == 1);
        Ok(TreeNode::Split {
            feature_index: best.feature_index,
            score: best,
            normalized_log_posterior: normalized,
            left: Box::new(self.grow(left, depth + 1)?),
            right: Box::new(self.grow(right, depth + 1)?),
        })
    }
}

impl EmbeddingTree {
    pub fn root(&self) -> &TreeNode {
        &self.root
    }

    pub fn params(&self) -> TreeParams {
        self.params
    }

    /// Binary feature names (`column==category`) indexed by feature index.
    pub fn features(&self) -> &[String] {
        &self.features
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    /// Leaves in depth-first, "no"-branch-first order with their question path.
    pub fn leaves(&self) -> Vec<(String, &[usize])> {
        let mut out = Vec::new();
        self.collect_leaves(&self.root, &mut Vec::new(), &mut out);
        out
    }

    fn collect_leaves<'t>(
        &'t self,
        node: &'t TreeNode,
        path: &mut Vec<String>,
        out: &mut Vec<(String, &'t [usize])>,
    ) {
        match node {
            TreeNode::Leaf { entities } => {
                let label = if path.is_empty() {
                    "root".to_string()
                } else {
                    path.join("/")
                };
                out.push((label, entities));
            }
            TreeNode::Split {
                feature_index,
                left,
                right,
                ..
            } => {
                let q = &self.features[*feature_index];
                path.push(format!("{q}:no"));
                self.collect_leaves(left, path, out);
                path.pop();
                path.push(format!("{q}:yes"));
                self.collect_leaves(right, path, out);
                path.pop();
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn depth(n: &TreeNode) -> usize {
            match n {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + depth(left).max(depth(right)),
            }
        }
        depth(&self.root)
    }

    pub fn to_json(&self) -> TreeJson {
        TreeJson {
            schema_version: crate::SCHEMA_VERSION.to_string(),
            max_depth: self.params.max_depth,
            min_node_size: self.params.min_node_size,
            reg: self.reg.to_string(),
            n_entities: self.ids.len(),
            root: self.node_json(&self.root),
        }
    }

    fn node_json(&self, node: &TreeNode) -> NodeJson {
        match node {
            TreeNode::Leaf { entities } => NodeJson::Leaf {
                entities: entities.iter().map(|&i| self.ids[i].clone()).collect(),
            },
            TreeNode::Split {
                feature_index,
                score,
                normalized_log_posterior,
                left,
                right,
            } => NodeJson::Split {
                feature: self.features[*feature_index].clone(),
                log_joint: score.log_joint,
                normalized_log_posterior: *normalized_log_posterior,
                left: Box::new(self.node_json(left)),
                right: Box::new(self.node_json(right)),
            },
        }
    }
}

/// Clusters are the leaves, labelled by their root-to-leaf question path.
pub fn leaf_clustering(tree: &EmbeddingTree) -> Clustering {
    let leaves = tree.leaves();
    let mut assignment = vec![0; tree.ids.len()];
    let mut labels = Vec::with_capacity(leaves.len());
    for (k, (label, entities)) in leaves.into_iter().enumerate() {
        for &i in entities {
            assignment[i] = k;
        }
        labels.push(label);
    }
    Clustering::new(assignment, labels, tree_criterion(&tree.params))
        .expect("tree leaves partition the entities")
}

fn tree_criterion(p: &TreeParams) -> String {
    format!(
        "embedding tree leaves (max_depth {}, min_node_size {})",
        p.max_depth, p.min_node_size
    )
}

/// Serialized tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeJson {
    pub schema_version: String,
    pub max_depth: usize,
    pub min_node_size: usize,
    pub reg: String,
    pub n_entities: usize,
    pub root: NodeJson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum NodeJson {
    Split {
        feature: String,
        log_joint: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        normalized_log_posterior: Option<f64>,
        left: Box<NodeJson>,
        right: Box<NodeJson>,
    },
    Leaf {
        entities: Vec<String>,
    },
}

impl TreeJson {
    pub fn to_string_pretty(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Leaf clustering of a serialized tree, ordered by `ids`.
    pub fn leaf_clustering(&self, ids: &[String]) -> Result<Clustering> {
        let mut leaf_of: HashMap<&str, usize> = HashMap::new();
        let mut labels = Vec::new();
        fn walk<'j>(
            node: &'j NodeJson,
            path: &mut Vec<String>,
            leaf_of: &mut HashMap<&'j str, usize>,
            labels: &mut Vec<String>,
        ) {
            match node {
                NodeJson::Leaf { entities } => {
                    let k = labels.len();
                    labels.push(if path.is_empty() { "root".into() } else { path.join("/") });
                    for id in entities {
                        leaf_of.insert(id.as_str(), k);
                    }
                }
                NodeJson::Split {
                    feature, left, right, ..
                } => {
                    path.push(format!("{feature}:no"));
                    walk(left, path, leaf_of, labels);
                    path.pop();
                    path.push(format!("{feature}:yes"));
                    walk(right, path, leaf_of, labels);
                    path.pop();
                }
            }
        }
        walk(&self.root, &mut Vec::new(), &mut leaf_of, &mut labels);
        let assignment = ids
            .iter()
            .map(|id| {
                leaf_of
                    .get(id.as_str())
                    .copied()
                    .ok_or_else(|| Error::IdMismatch(format!("entity `{id}` is not in the tree")))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut used = assignment.clone();
        used.sort_unstable();
        used.dedup();
        let remap: HashMap<usize, usize> = used.iter().enumerate().map(|(n, &o)| (o, n)).collect();
        Clustering::new(
            assignment.iter().map(|a| remap[a]).collect(),
            used.iter().map(|&o| labels[o].clone()).collect(),
            tree_criterion(&TreeParams {
                max_depth: self.max_depth,
                min_node_size: self.min_node_size,
            }),
        )
    }
}

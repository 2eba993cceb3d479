//! Cluster posteriors and the Average Log Posterior (ALP).
//!
//! A [`ClusterModel`] holds one Gaussian per cluster with prior weight
//! `n_k / N`. The posterior of cluster `k` for a point is the softmax of
//! `log w_k + log N(x; μ_k, Σ_k)`, and ALP averages the log posterior of
//! each entity's own cluster.

use serde::{Deserialize, Serialize};

use crate::data::{Clustering, EmbeddingSet};
use crate::error::{Error, Result};
use crate::gaussian::{GaussianComponent, RegularizationMode};
use crate::par;
use crate::rng::{self, CounterRng};

const ENTITY_CHUNK: usize = 512;

/// Per-cluster Gaussian mixture fit on a (possibly projected) embedding set.
#[derive(Debug, Clone)]
pub struct ClusterModel {
    components: Vec<GaussianComponent>,
    dims: Vec<usize>,
    input_dim: usize,
    sizes: Vec<usize>,
    reg: RegularizationMode,
    source: String,
}

impl ClusterModel {
    pub fn components(&self) -> &[GaussianComponent] {
        &self.components
    }

    /// Number of clusters `m`.
    pub fn m(&self) -> usize {
        self.components.len()
    }

    /// Embedding dimensions the model was fit on, ascending.
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Dimension of the points the model accepts (before projection).
    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    /// Training size of each cluster, `n_k`.
    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn reg(&self) -> RegularizationMode {
        self.reg
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    fn project<'a>(&self, x: &'a [f64], buf: &'a mut Vec<f64>) -> &'a [f64] {
        if self.dims.len() == self.input_dim {
            x
        } else {
            buf.clear();
            buf.extend(self.dims.iter().map(|&j| x[j]));
            buf
        }
    }

    /// `log w_k + log N(x; μ_k, Σ_k)` for every cluster.
    fn log_scores_into(&self, x: &[f64], scores: &mut Vec<f64>, proj: &mut Vec<f64>, scratch: &mut Vec<f64>) {
        let x = self.project(x, proj);
        scores.clear();
        scores.extend(
            self.components
                .iter()
                .map(|c| c.log_weight() + c.log_density_with(x, scratch)),
        );
    }

    /// Log posterior of every cluster for `x` (length [`Self::input_dim`]).
    pub fn log_posterior(&self, x: &[f64]) -> Vec<f64> {
        let mut scores = Vec::with_capacity(self.m());
        self.log_scores_into(x, &mut scores, &mut Vec::new(), &mut Vec::new());
        let lse = log_sum_exp(&scores);
        scores.iter_mut().for_each(|s| *s -= lse);
        scores
    }
}

/// `log Σ exp(v)` with max subtraction.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Index of the first maximum.
fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Neumaier-compensated sum in iteration order.
fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

fn check_dims(dims: Option<&[usize]>, d: usize) -> Result<Vec<usize>> {
    match dims {
        None => Ok((0..d).collect()),
        Some([]) => Err(Error::InvalidArgument("dimension subset is empty".into())),
        Some(dims) => {
            let mut sorted = dims.to_vec();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != dims.len() {
                return Err(Error::InvalidArgument("dimension subset has repeats".into()));
            }
            if let Some(&bad) = sorted.iter().find(|&&j| j >= d) {
                return Err(Error::InvalidArgument(format!(
                    "dimension {bad} out of range 0..{d}"
                )));
            }
            Ok(sorted)
        }
    }
}

/// Fit one regularized Gaussian per cluster, weighted by cluster size.
pub fn fit_cluster_model(
    emb: &EmbeddingSet,
    clustering: &Clustering,
    reg: RegularizationMode,
    dims: Option<&[usize]>,
) -> Result<ClusterModel> {
    if clustering.len() != emb.len() {
        return Err(Error::DimensionMismatch {
            expected: emb.len(),
            actual: clustering.len(),
        });
    }
    let dims = check_dims(dims, emb.dim())?;
    let members = clustering.members();
    let n = emb.len() as f64;
    let components = par::map_indexed(members.len(), |k| {
        let rows = &members[k];
        let mut points = Vec::with_capacity(rows.len() * dims.len());
        for &i in rows {
            let row = emb.row(i);
            points.extend(dims.iter().map(|&j| row[j]));
        }
        GaussianComponent::fit(&points, dims.len(), reg, (rows.len() as f64 / n).ln())
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(ClusterModel {
        components,
        input_dim: emb.dim(),
        sizes: members.iter().map(Vec::len).collect(),
        dims,
        reg,
        source: format!("{} | {}", emb.name(), clustering.criterion()),
    })
}

/// Posterior probability of each cluster for `x`.
pub fn posterior(model: &ClusterModel, x: &[f64]) -> Vec<f64> {
    model.log_posterior(x).into_iter().map(f64::exp).collect()
}

/// The clipping rule instantiated for one report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipThreshold {
    pub rule: String,
    pub clip_eps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterScore {
    pub label: String,
    pub size: usize,
    pub n_clipped: usize,
    /// Mean log posterior over retained members; `None` when all were clipped.
    pub mean_log_posterior: Option<f64>,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlpReport {
    pub alp: f64,
    /// Percentage of all entities whose most probable cluster is their own.
    pub accuracy: f64,
    pub n_total: usize,
    pub n_clipped: usize,
    pub clip_threshold_desc: ClipThreshold,
    pub per_cluster: Vec<ClusterScore>,
}

struct EntityScore {
    log_post: f64,
    correct: bool,
    clipped: bool,
}

/// Score `emb` under `model` with the clusters given by `clustering`.
///
/// An entity of cluster `k` is excluded from the ALP average when its
/// posterior is below `(n_k / N) · clip_eps`; `clip_eps = 0` disables
/// clipping. Accuracy always counts every entity, ties going to the lowest
/// cluster index.
pub fn alp_score(
    model: &ClusterModel,
    emb: &EmbeddingSet,
    clustering: &Clustering,
    clip_eps: f64,
) -> Result<AlpReport> {
    if !(clip_eps >= 0.0 && clip_eps.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "clip_eps must be a finite non-negative number, got {clip_eps}"
        )));
    }
    if emb.dim() != model.input_dim {
        return Err(Error::DimensionMismatch {
            expected: model.input_dim,
            actual: emb.dim(),
        });
    }
    if clustering.len() != emb.len() {
        return Err(Error::DimensionMismatch {
            expected: emb.len(),
            actual: clustering.len(),
        });
    }
    if clustering.m() != model.m() {
        return Err(Error::DimensionMismatch {
            expected: model.m(),
            actual: clustering.m(),
        });
    }
    let log_clip = clip_eps.ln();
    let assignment = clustering.assignment();
    let scores = par::map_chunked(emb.len(), ENTITY_CHUNK, |range| {
        let (mut s, mut proj, mut scratch) = (Vec::new(), Vec::new(), Vec::new());
        range
            .map(|i| {
                let k = assignment[i];
                model.log_scores_into(emb.row(i), &mut s, &mut proj, &mut scratch);
                let log_post = s[k] - log_sum_exp(&s);
                let log_w = model.components[k].log_weight();
                EntityScore {
                    log_post,
                    correct: argmax(&s) == k,
                    clipped: clip_eps > 0.0 && log_post < log_w + log_clip,
                }
            })
            .collect()
    });

    let n_clipped = scores.iter().filter(|s| s.clipped).count();
    let retained = scores.len() - n_clipped;
    if retained == 0 {
        return Err(Error::AllClipped);
    }
    let alp = compensated_sum(scores.iter().filter(|s| !s.clipped).map(|s| s.log_post))
        / retained as f64;
    let correct = scores.iter().filter(|s| s.correct).count();

    let per_cluster = clustering
        .members()
        .iter()
        .enumerate()
        .map(|(k, rows)| {
            let kept: Vec<f64> = rows
                .iter()
                .filter(|&&i| !scores[i].clipped)
                .map(|&i| scores[i].log_post)
                .collect();
            ClusterScore {
                label: clustering.labels()[k].clone(),
                size: rows.len(),
                n_clipped: rows.len() - kept.len(),
                mean_log_posterior: (!kept.is_empty())
                    .then(|| compensated_sum(kept.iter().copied()) / kept.len() as f64),
                accuracy: 100.0 * rows.iter().filter(|&&i| scores[i].correct).count() as f64
                    / rows.len() as f64,
            }
        })
        .collect();

    Ok(AlpReport {
        alp,
        accuracy: 100.0 * correct as f64 / scores.len() as f64,
        n_total: scores.len(),
        n_clipped,
        clip_threshold_desc: ClipThreshold {
            rule: "posterior < (n_k / N) * clip_eps".into(),
            clip_eps,
        },
        per_cluster,
    })
}

/// How head dimensions are drawn.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadSampling {
    /// Each head draws `v` distinct dimensions on its own; heads may overlap.
    #[default]
    Independent,
    /// One seeded permutation cut into consecutive disjoint blocks of `v`.
    Partition,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultiHeadConfig {
    /// Dimensions per head.
    pub v: usize,
    pub n_heads: usize,
    pub seed: u64,
    pub clip_eps: f64,
    pub sampling: HeadSampling,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanAlpReport {
    pub head_reports: Vec<AlpReport>,
    pub mean_alp: f64,
    pub mean_accuracy: f64,
    pub v: usize,
    pub n_heads: usize,
    pub seed: u64,
    pub sampling: HeadSampling,
    pub rng: String,
    pub head_dims: Vec<Vec<usize>>,
}

/// Dimension subsets for every head, each sorted ascending.
pub fn head_dimensions(d: usize, cfg: &MultiHeadConfig) -> Result<Vec<Vec<usize>>> {
    if cfg.v < 1 || cfg.v > d {
        return Err(Error::InvalidArgument(format!(
            "head dimension v={} must lie in 1..={d}",
            cfg.v
        )));
    }
    if cfg.n_heads < 1 {
        return Err(Error::InvalidArgument("n_heads must be ≥ 1".into()));
    }
    if cfg.v == d {
        return Ok(vec![(0..d).collect(); cfg.n_heads]);
    }
    let heads = match cfg.sampling {
        HeadSampling::Independent => (0..cfg.n_heads)
            .map(|h| CounterRng::new(cfg.seed, h as u64).sample_without_replacement(d, cfg.v))
            .collect::<Vec<_>>(),
        HeadSampling::Partition => {
            if cfg.n_heads * cfg.v > d {
                return Err(Error::InvalidArgument(format!(
                    "{} disjoint heads of {} dimensions need d ≥ {}, got {d}",
                    cfg.n_heads,
                    cfg.v,
                    cfg.n_heads * cfg.v
                )));
            }
            let perm = CounterRng::new(cfg.seed, u64::MAX).sample_without_replacement(d, d);
            perm.chunks_exact(cfg.v).take(cfg.n_heads).map(<[usize]>::to_vec).collect()
        }
    };
    Ok(heads
        .into_iter()
        .map(|mut h| {
            h.sort_unstable();
            h
        })
        .collect())
}

/// ALP averaged over random `v`-dimensional subspaces ("heads").
pub fn mean_alp_multihead(
    emb: &EmbeddingSet,
    clustering: &Clustering,
    reg: RegularizationMode,
    cfg: &MultiHeadConfig,
) -> Result<MeanAlpReport> {
    let head_dims = head_dimensions(emb.dim(), cfg)?;
    let head_reports = par::map_indexed(head_dims.len(), |h| {
        let model = fit_cluster_model(emb, clustering, reg, Some(&head_dims[h]))?;
        alp_score(&model, emb, clustering, cfg.clip_eps)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let n = head_reports.len() as f64;
    Ok(MeanAlpReport {
        mean_alp: head_reports.iter().map(|r| r.alp).sum::<f64>() / n,
        mean_accuracy: head_reports.iter().map(|r| r.accuracy).sum::<f64>() / n,
        head_reports,
        v: cfg.v,
        n_heads: cfg.n_heads,
        seed: cfg.seed,
        sampling: cfg.sampling,
        rng: rng::ALGORITHM.to_string(),
        head_dims,
    })
}

/// One like-for-like comparison: a fixed criterion, two embedding sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonPair {
    pub criterion: String,
    pub left: String,
    pub right: String,
    pub left_alp: f64,
    pub right_alp: f64,
    /// Embedding set with the higher ALP under this criterion, or `tie`.
    pub better: String,
}

/// The four cross scores. `alp_s_x` is embedding set `x` scored under
/// criterion `s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub alp_a_a: AlpReport,
    pub alp_a_b: AlpReport,
    pub alp_b_a: AlpReport,
    pub alp_b_b: AlpReport,
    pub valid_pairs: Vec<ComparisonPair>,
}

fn pair(criterion: &str, a: &AlpReport, b: &AlpReport) -> ComparisonPair {
    let better = if a.alp > b.alp {
        "A"
    } else if b.alp > a.alp {
        "B"
    } else {
        "tie"
    };
    ComparisonPair {
        criterion: criterion.into(),
        left: format!("ALP_{criterion}^A"),
        right: format!("ALP_{criterion}^B"),
        left_alp: a.alp,
        right_alp: b.alp,
        better: better.into(),
    }
}

/// Score two embedding sets of the same entities under two criteria.
/// Only scores sharing a criterion are comparable; those pairs are labelled
/// in [`ComparisonReport::valid_pairs`].
pub fn compare_embeddings(
    emb_a: &EmbeddingSet,
    emb_b: &EmbeddingSet,
    clust_a: &Clustering,
    clust_b: &Clustering,
    reg: RegularizationMode,
    clip_eps: f64,
) -> Result<ComparisonReport> {
    if emb_a.ids() != emb_b.ids() {
        return Err(Error::IdMismatch(
            "embedding sets A and B must cover the same ids in the same order".into(),
        ));
    }
    for c in [clust_a, clust_b] {
        if c.len() != emb_a.len() {
            return Err(Error::DimensionMismatch {
                expected: emb_a.len(),
                actual: c.len(),
            });
        }
    }
    let score = |emb: &EmbeddingSet, clust: &Clustering| {
        let model = fit_cluster_model(emb, clust, reg, None)?;
        alp_score(&model, emb, clust, clip_eps)
    };
    let alp_a_a = score(emb_a, clust_a)?;
    let alp_a_b = score(emb_b, clust_a)?;
    let alp_b_a = score(emb_a, clust_b)?;
    let alp_b_b = score(emb_b, clust_b)?;
    let valid_pairs = vec![pair("A", &alp_a_a, &alp_a_b), pair("B", &alp_b_a, &alp_b_b)];
    Ok(ComparisonReport {
        alp_a_a,
        alp_a_b,
        alp_b_a,
        alp_b_b,
        valid_pairs,
    })
}

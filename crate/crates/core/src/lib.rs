//! Embedding quality scoring by consistency with entity meta-features.
//!
//! Entities are split into clusters by a criterion over their meta-features
//! (one categorical column, or the leaves of an [`tree::EmbeddingTree`]).
//! Each cluster gets a Gaussian, and the Average Log Posterior (ALP) of every
//! entity's own cluster measures how well the embedding respects the split.
//!
//! Modules:
//! - [`data`]: loading, alignment, binarization, single-feature clustering
//! - [`gaussian`]: MLE fits, covariance regularization, log densities
//! - [`alp`]: cluster posteriors, ALP with clipping, multi-head Mean-ALP,
//!   cross-embedding comparison
//! - [`tree`]: embedding tree induction over binary meta-features
//! - [`probe`]: linear-probe baseline and Pearson/Spearman correlation
//! - [`synth`]: synthetic Gaussian-mixture scenarios

pub mod alp;
pub mod data;
pub mod error;
pub mod gaussian;
mod par;
pub mod probe;
pub mod rng;
pub mod synth;
pub mod tree;

pub use alp::{
    alp_score, compare_embeddings, fit_cluster_model, mean_alp_multihead, posterior,
    AlpReport, ClusterModel, ComparisonReport, HeadSampling, MeanAlpReport,
};
pub use data::{
    align, binarize, cluster_by_feature, discretize_numeric, load_embeddings, load_features,
    BinaryFeatureTable, Clustering, EmbeddingSet, FeatureTable, MissingPolicy,
};
pub use error::{Error, Result};
pub use gaussian::{auto_epsilon, fit_mle, regularize, GaussianComponent, RegularizationMode};

/// Version of the JSON report layouts.
pub const SCHEMA_VERSION: &str = "1";

/// Default clip threshold multiplier for ALP.
pub const DEFAULT_CLIP_EPS: f64 = 1e-6;

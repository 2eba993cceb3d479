//! Synthetic Gaussian-mixture datasets with known cluster labels.
//!
//! Three scenarios place `K` unit-variance components on a circle (d = 2),
//! a line (d = 1) or random directions (d > 2) at a scenario-specific
//! radius: well separated, partially overlapping, or fully coincident.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Cholesky, DMatrix};
use serde::{Deserialize, Serialize};

use crate::data::{Clustering, EmbeddingSet};
use crate::error::{Error, Result};
use crate::rng::{self, CounterRng};

/// Stream id used for drawing mean directions when d > 2.
const MEANS_STREAM: u64 = 1 << 32;
/// Stream id base for additive noise.
const NOISE_STREAM: u64 = 2 << 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioKind {
    Separated,
    Partial,
    Overlap,
}

impl ScenarioKind {
    /// Distance of every component mean from the origin, in units of σ.
    pub fn radius(self) -> f64 {
        match self {
            Self::Separated => 20.0,
            Self::Partial => 5.0,
            Self::Overlap => 0.0,
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Separated => "separated",
            Self::Partial => "partial",
            Self::Overlap => "overlap",
        })
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "separated" => Ok(Self::Separated),
            "partial" => Ok(Self::Partial),
            "overlap" => Ok(Self::Overlap),
            _ => Err(Error::InvalidArgument(format!(
                "unknown scenario `{s}` (expected separated, partial or overlap)"
            ))),
        }
    }
}

/// Full description of a Gaussian mixture to sample from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmSpec {
    pub kind: Option<ScenarioKind>,
    pub radius: f64,
    pub k: usize,
    pub d: usize,
    pub means: Vec<Vec<f64>>,
    pub covariances: Vec<Vec<Vec<f64>>>,
    pub points_per_cluster: Vec<usize>,
    pub seed: u64,
    pub rng: String,
}

/// Spec for one of the named scenarios.
pub fn scenario_spec(kind: ScenarioKind, k: usize, d: usize, n_per: usize, seed: u64) -> Result<GmmSpec> {
    let mut spec = spec_with_radius(kind.radius(), k, d, n_per, seed)?;
    spec.kind = Some(kind);
    Ok(spec)
}

/// Unit-variance components at distance `radius` from the origin.
pub fn spec_with_radius(radius: f64, k: usize, d: usize, n_per: usize, seed: u64) -> Result<GmmSpec> {
    if k < 1 || d < 1 || n_per < 1 {
        return Err(Error::InvalidArgument(format!(
            "k, dim and n-per must all be ≥ 1 (got k={k}, dim={d}, n-per={n_per})"
        )));
    }
    if !(radius >= 0.0 && radius.is_finite()) {
        return Err(Error::InvalidArgument(format!("radius must be ≥ 0, got {radius}")));
    }
    let means = match d {
        1 => (0..k)
            .map(|c| {
                let t = if k == 1 { 0.0 } else { 2.0 * c as f64 / (k - 1) as f64 - 1.0 };
                vec![radius * t]
            })
            .collect(),
        2 => (0..k)
            .map(|c| {
                let angle = 2.0 * std::f64::consts::PI * c as f64 / k as f64;
                vec![radius * angle.cos(), radius * angle.sin()]
            })
            .collect(),
        _ => {
            let mut rng = CounterRng::new(seed, MEANS_STREAM);
            (0..k)
                .map(|_| {
                    let v: Vec<f64> = (0..d).map(|_| rng.next_normal()).collect();
                    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                    v.iter().map(|x| radius * x / norm).collect()
                })
                .collect()
        }
    };
    let identity: Vec<Vec<f64>> = (0..d)
        .map(|a| (0..d).map(|b| f64::from(u8::from(a == b))).collect())
        .collect();
    Ok(GmmSpec {
        kind: None,
        radius,
        k,
        d,
        means,
        covariances: vec![identity; k],
        points_per_cluster: vec![n_per; k],
        seed,
        rng: rng::ALGORITHM.to_string(),
    })
}

/// Draw exactly `points_per_cluster[c]` points from each component `c`,
/// component `c` using stream `(seed, c)`. Rows are grouped by component.
pub fn generate(spec: &GmmSpec) -> Result<(EmbeddingSet, Clustering)> {
    let d = spec.d;
    if spec.means.len() != spec.k
        || spec.covariances.len() != spec.k
        || spec.points_per_cluster.len() != spec.k
    {
        return Err(Error::InvalidArgument("spec lists do not match k".into()));
    }
    if spec.points_per_cluster.contains(&0) {
        return Err(Error::InvalidArgument("every component needs ≥ 1 point".into()));
    }
    let total: usize = spec.points_per_cluster.iter().sum();
    let mut data = Vec::with_capacity(total * d);
    let mut assignment = Vec::with_capacity(total);
    for c in 0..spec.k {
        let mean = &spec.means[c];
        let cov = &spec.covariances[c];
        if mean.len() != d || cov.len() != d || cov.iter().any(|r| r.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: mean.len(),
            });
        }
        let cov = DMatrix::from_fn(d, d, |a, b| cov[a][b]);
        let lower = Cholesky::new(cov)
            .ok_or_else(|| Error::InvalidArgument(format!("covariance {c} is not positive definite")))?
            .l();
        let mut rng = CounterRng::new(spec.seed, c as u64);
        let mut z = vec![0.0; d];
        for _ in 0..spec.points_per_cluster[c] {
            z.iter_mut().for_each(|v| *v = rng.next_normal());
            for a in 0..d {
                let offset: f64 = (0..=a).map(|b| lower[(a, b)] * z[b]).sum();
                data.push(mean[a] + offset);
            }
            assignment.push(c);
        }
    }
    let width = total.to_string().len();
    let ids = (0..total).map(|i| format!("s{i:0width$}")).collect();
    let emb = EmbeddingSet::from_flat(ids, data, d, format!("synthetic-r{}", spec.radius))?;
    let clustering = Clustering::new(
        assignment,
        (0..spec.k).map(|c| c.to_string()).collect(),
        "generator component",
    )?;
    Ok((emb, clustering))
}

/// Copy of `emb` with i.i.d. `N(0, sigma²)` noise added to every coordinate.
pub fn add_isotropic_noise(emb: &EmbeddingSet, sigma: f64, seed: u64) -> Result<EmbeddingSet> {
    let mut rng = CounterRng::new(seed, NOISE_STREAM);
    let data = emb.as_slice().iter().map(|v| v + sigma * rng.next_normal()).collect();
    let mut out = emb.with_values(data)?;
    out.set_name(format!("{}+noise{sigma}", emb.name()));
    Ok(out)
}

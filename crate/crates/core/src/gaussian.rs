//! Gaussian components: maximum-likelihood fits, covariance regularization
//! and log-density evaluation through a Cholesky factor.
//!
//! Densities are only ever handled in log space; at a few thousand
//! dimensions the raw values underflow.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest variance / ridge ever placed on a diagonal.
pub const EPSILON_FLOOR: f64 = 1e-8;

/// Fraction of eigenvalue mass that the automatic ridge keeps above its cutoff.
pub const EIGEN_MASS_CUTOFF: f64 = 0.9999;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// How a covariance estimate is made invertible.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum RegularizationMode {
    /// Keep only the diagonal (uncorrelated dimensions).
    Diagonal,
    /// Add a fixed `lambda * I`.
    Tikhonov { lambda: f64 },
    /// Add `auto_epsilon(cov) * I`.
    AutoEpsilon,
}

impl RegularizationMode {
    pub fn tikhonov(lambda: f64) -> Result<Self> {
        if lambda > 0.0 && lambda.is_finite() {
            Ok(Self::Tikhonov { lambda })
        } else {
            Err(Error::InvalidArgument(format!(
                "tikhonov lambda must be positive, got {lambda}"
            )))
        }
    }
}

impl fmt::Display for RegularizationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Diagonal => f.write_str("diag"),
            Self::Tikhonov { lambda } => write!(f, "tikhonov:{lambda:e}"),
            Self::AutoEpsilon => f.write_str("auto"),
        }
    }
}

impl FromStr for RegularizationMode {
    type Err = Error;

    /// Accepts `diag`, `auto` or `tikhonov:<lambda>`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "diag" | "diagonal" => Ok(Self::Diagonal),
            "auto" => Ok(Self::AutoEpsilon),
            _ => {
                let lambda = s
                    .strip_prefix("tikhonov:")
                    .and_then(|v| v.parse::<f64>().ok())
                    .ok_or_else(|| {
                        Error::InvalidArgument(format!(
                            "unknown regularization `{s}` (expected diag, auto or tikhonov:<lambda>)"
                        ))
                    })?;
                Self::tikhonov(lambda)
            }
        }
    }
}

/// Sample mean and biased (divisor `n`) covariance of `n` row-major points.
pub fn fit_mle(points: &[f64], dim: usize) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = point_count(points, dim)?;
    let mean = mean_of(points, dim, n);
    let mut cov = DMatrix::zeros(dim, dim);
    let mut centered = vec![0.0; dim];
    for row in points.chunks_exact(dim) {
        for (c, (x, m)) in centered.iter_mut().zip(row.iter().zip(&mean)) {
            *c = x - m;
        }
        for a in 0..dim {
            let ca = centered[a];
            for b in a..dim {
                cov[(a, b)] += ca * centered[b];
            }
        }
    }
    let inv_n = 1.0 / n as f64;
    for a in 0..dim {
        for b in a..dim {
            let v = cov[(a, b)] * inv_n;
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }
    Ok((mean, cov))
}

fn point_count(points: &[f64], dim: usize) -> Result<usize> {
    if dim == 0 || !points.len().is_multiple_of(dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: points.len(),
        });
    }
    match points.len() / dim {
        0 => Err(Error::InvalidArgument("cannot fit a Gaussian to zero points".into())),
        n => Ok(n),
    }
}

fn mean_of(points: &[f64], dim: usize, n: usize) -> Vec<f64> {
    let mut mean = vec![0.0; dim];
    for row in points.chunks_exact(dim) {
        for (m, x) in mean.iter_mut().zip(row) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    mean
}

/// Per-dimension biased variances; equals the diagonal of [`fit_mle`]'s covariance.
fn fit_mle_diagonal(points: &[f64], dim: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = point_count(points, dim)?;
    let mean = mean_of(points, dim, n);
    let mut var = vec![0.0; dim];
    for row in points.chunks_exact(dim) {
        for ((v, x), m) in var.iter_mut().zip(row).zip(&mean) {
            let c = x - m;
            *v += c * c;
        }
    }
    var.iter_mut().for_each(|v| *v /= n as f64);
    Ok((mean, var))
}

fn check_symmetric(cov: &DMatrix<f64>) -> Result<()> {
    if !cov.is_square() {
        return Err(Error::DimensionMismatch {
            expected: cov.nrows(),
            actual: cov.ncols(),
        });
    }
    let scale = cov.amax().max(f64::MIN_POSITIVE);
    let mut worst = 0.0f64;
    for a in 0..cov.nrows() {
        for b in a + 1..cov.ncols() {
            worst = worst.max((cov[(a, b)] - cov[(b, a)]).abs());
        }
    }
    if worst > 1e-12 * scale {
        Err(Error::Asymmetric(worst))
    } else {
        Ok(())
    }
}

/// Ridge size from the eigen-spectrum of `cov`.
///
/// With eigenvalues sorted so that `λ_0 ≥ λ_1 ≥ …` (negatives clamped to 0),
/// `k` is the first index whose cumulative share of the total exceeds
/// [`EIGEN_MASS_CUTOFF`], and the ridge is `max(λ_k · λ_0 / (10·D), 1e-8)`.
pub fn auto_epsilon(cov: &DMatrix<f64>) -> Result<f64> {
    check_symmetric(cov)?;
    let dim = cov.nrows();
    let mut eig: Vec<f64> = SymmetricEigen::new(cov.clone())
        .eigenvalues
        .iter()
        .map(|&l| l.max(0.0))
        .collect();
    eig.sort_by(|a, b| b.total_cmp(a));
    let total: f64 = eig.iter().sum();
    if total <= 0.0 {
        return Ok(EPSILON_FLOOR);
    }
    let mut cum = 0.0;
    let mut k = eig.len() - 1;
    for (i, l) in eig.iter().enumerate() {
        cum += l;
        if cum / total > EIGEN_MASS_CUTOFF {
            k = i;
            break;
        }
    }
    Ok((eig[k] * eig[0] / (10.0 * dim as f64)).max(EPSILON_FLOOR))
}

/// The ridge actually applied to a component's covariance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegApplied {
    pub mode: RegularizationMode,
    /// Multiple of the identity added (0 for diagonal mode).
    pub epsilon: f64,
    /// True when the first Cholesky attempt failed and the ridge was doubled.
    pub retried: bool,
}

fn regularize_inner(cov: &DMatrix<f64>, mode: RegularizationMode) -> Result<(DMatrix<f64>, f64)> {
    check_symmetric(cov)?;
    let mut out = cov.clone();
    let eps = match mode {
        RegularizationMode::Diagonal => {
            out.fill_lower_triangle(0.0, 1);
            out.fill_upper_triangle(0.0, 1);
            for i in 0..out.nrows() {
                if out[(i, i)] <= 0.0 {
                    out[(i, i)] = EPSILON_FLOOR;
                }
            }
            return Ok((out, 0.0));
        }
        RegularizationMode::Tikhonov { lambda } => lambda,
        RegularizationMode::AutoEpsilon => auto_epsilon(cov)?,
    };
    for i in 0..out.nrows() {
        out[(i, i)] += eps;
    }
    Ok((out, eps))
}

/// Apply `mode` to a symmetric covariance matrix.
pub fn regularize(cov: &DMatrix<f64>, mode: RegularizationMode) -> Result<DMatrix<f64>> {
    regularize_inner(cov, mode).map(|(m, _)| m)
}

#[derive(Debug, Clone)]
enum Factor {
    /// Standard deviations of a diagonal covariance.
    Diagonal(Vec<f64>),
    /// Row-major lower Cholesky factor.
    Lower(Vec<f64>),
}

/// One weighted Gaussian `w · N(μ, Σ)` with a factorized covariance.
#[derive(Debug, Clone)]
pub struct GaussianComponent {
    mean: Vec<f64>,
    covariance: DMatrix<f64>,
    log_weight: f64,
    reg_applied: RegApplied,
    factor: Factor,
    log_norm: f64,
}

impl GaussianComponent {
    /// Build from an already positive-definite covariance.
    pub fn new(mean: Vec<f64>, covariance: DMatrix<f64>, log_weight: f64) -> Result<Self> {
        let reg = RegApplied {
            mode: RegularizationMode::Tikhonov { lambda: 0.0 },
            epsilon: 0.0,
            retried: false,
        };
        Self::from_parts(mean, covariance, log_weight, reg)
            .ok_or_else(|| Error::Internal("covariance is not positive definite".into()))
    }

    /// Fit mean and covariance to `points` (row-major, `dim` columns) and regularize.
    ///
    /// If the regularized covariance still fails Cholesky, the ridge is doubled
    /// once before giving up.
    pub fn fit(points: &[f64], dim: usize, mode: RegularizationMode, log_weight: f64) -> Result<Self> {
        if mode == RegularizationMode::Diagonal {
            let (mean, mut var) = fit_mle_diagonal(points, dim)?;
            var.iter_mut()
                .filter(|v| **v <= 0.0)
                .for_each(|v| *v = EPSILON_FLOOR);
            let reg = RegApplied {
                mode,
                epsilon: 0.0,
                retried: false,
            };
            let cov = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(var));
            return Self::from_parts(mean, cov, log_weight, reg)
                .ok_or_else(|| Error::Internal("diagonal covariance not positive".into()));
        }
        let (mean, cov) = fit_mle(points, dim)?;
        Self::from_covariance(mean, &cov, mode, log_weight)
    }

    /// Regularize a raw covariance estimate and factorize it.
    pub fn from_covariance(
        mean: Vec<f64>,
        cov: &DMatrix<f64>,
        mode: RegularizationMode,
        log_weight: f64,
    ) -> Result<Self> {
        let (reg_cov, eps) = regularize_inner(cov, mode)?;
        let reg = RegApplied {
            mode,
            epsilon: eps,
            retried: false,
        };
        if let Some(c) = Self::from_parts(mean.clone(), reg_cov.clone(), log_weight, reg) {
            return Ok(c);
        }
        let extra = if eps > 0.0 { eps } else { EPSILON_FLOOR };
        let mut retry = reg_cov;
        for i in 0..retry.nrows() {
            retry[(i, i)] += extra;
        }
        let reg = RegApplied {
            mode,
            epsilon: eps + extra,
            retried: true,
        };
        Self::from_parts(mean, retry, log_weight, reg).ok_or_else(|| {
            Error::Internal(format!(
                "covariance not positive definite after regularization ({mode}, epsilon {:e})",
                eps + extra
            ))
        })
    }

    fn from_parts(
        mean: Vec<f64>,
        covariance: DMatrix<f64>,
        log_weight: f64,
        reg_applied: RegApplied,
    ) -> Option<Self> {
        let dim = mean.len();
        if covariance.nrows() != dim || covariance.ncols() != dim || dim == 0 {
            return None;
        }
        let is_diagonal = (0..dim).all(|a| (0..dim).all(|b| a == b || covariance[(a, b)] == 0.0));
        let (factor, log_det) = if is_diagonal {
            let diag: Vec<f64> = (0..dim).map(|i| covariance[(i, i)]).collect();
            if diag.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                return None;
            }
            let log_det = diag.iter().map(|v| v.ln()).sum::<f64>();
            (Factor::Diagonal(diag.iter().map(|v| v.sqrt()).collect()), log_det)
        } else {
            let chol = Cholesky::new(covariance.clone())?;
            let l = chol.l();
            let mut lower = vec![0.0; dim * dim];
            let mut log_det = 0.0;
            for i in 0..dim {
                for j in 0..=i {
                    lower[i * dim + j] = l[(i, j)];
                }
                let pivot = l[(i, i)];
                if !(pivot > 0.0 && pivot.is_finite()) {
                    return None;
                }
                log_det += 2.0 * pivot.ln();
            }
            (Factor::Lower(lower), log_det)
        };
        Some(Self {
            log_norm: -0.5 * (dim as f64 * LN_2PI + log_det),
            mean,
            covariance,
            log_weight,
            reg_applied,
            factor,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// The regularized covariance.
    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn log_weight(&self) -> f64 {
        self.log_weight
    }

    pub fn reg_applied(&self) -> RegApplied {
        self.reg_applied
    }

    /// `log N(x; μ, Σ)`, excluding the weight.
    pub fn log_density(&self, x: &[f64]) -> f64 {
        let mut scratch = Vec::with_capacity(self.dim());
        self.log_density_with(x, &mut scratch)
    }

    /// As [`Self::log_density`], reusing `scratch` for the triangular solve.
    pub fn log_density_with(&self, x: &[f64], scratch: &mut Vec<f64>) -> f64 {
        assert_eq!(x.len(), self.dim(), "point dimension mismatch");
        let quad = match &self.factor {
            Factor::Diagonal(sd) => x
                .iter()
                .zip(&self.mean)
                .zip(sd)
                .map(|((xi, mi), s)| {
                    let z = (xi - mi) / s;
                    z * z
                })
                .sum::<f64>(),
            Factor::Lower(lower) => {
                let d = self.dim();
                scratch.clear();
                let mut quad = 0.0;
                for i in 0..d {
                    let row = &lower[i * d..i * d + i];
                    let dot: f64 = row.iter().zip(scratch.iter()).map(|(l, y)| l * y).sum();
                    let y = (x[i] - self.mean[i] - dot) / lower[i * d + i];
                    scratch.push(y);
                    quad += y * y;
                }
                quad
            }
        };
        self.log_norm - 0.5 * quad
    }
}

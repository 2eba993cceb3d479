use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A correlation coefficient, or the reason it does not exist.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Coefficient {
    Defined(f64),
    /// One of the series has zero variance.
    ZeroVariance,
}

impl Coefficient {
    pub fn value(self) -> Option<f64> {
        match self {
            Self::Defined(v) => Some(v),
            Self::ZeroVariance => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub pearson: Option<f64>,
    pub spearman: Option<f64>,
    pub n: usize,
    pub undefined_reason: Option<String>,
}

fn check(xs: &[f64], ys: &[f64]) -> Result<()> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch {
            expected: xs.len(),
            actual: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "correlation needs at least 2 points, got {}",
            xs.len()
        )));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("correlation inputs must be finite".into()));
    }
    Ok(())
}

fn pearson_unchecked(xs: &[f64], ys: &[f64]) -> Coefficient {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Coefficient::ZeroVariance;
    }
    Coefficient::Defined((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Sample Pearson correlation.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<Coefficient> {
    check(xs, ys)?;
    Ok(pearson_unchecked(xs, ys))
}

/// 1-based ranks; tied values share their average rank.
fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation (Pearson over average ranks).
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<Coefficient> {
    check(xs, ys)?;
    Ok(pearson_unchecked(&average_ranks(xs), &average_ranks(ys)))
}

/// Both coefficients over the same pair of series.
pub fn correlate(xs: &[f64], ys: &[f64]) -> Result<CorrelationResult> {
    let p = pearson(xs, ys)?;
    let s = spearman(xs, ys)?;
    let undefined = matches!(p, Coefficient::ZeroVariance) || matches!(s, Coefficient::ZeroVariance);
    Ok(CorrelationResult {
        pearson: p.value(),
        spearman: s.value(),
        n: xs.len(),
        undefined_reason: undefined.then(|| "zero variance".to_string()),
    })
}

use serde::{Deserialize, Serialize};

use crate::alp::log_sum_exp;
use crate::data::{Clustering, EmbeddingSet};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2_lambda: f64,
    /// Recorded for provenance; initialization is all-zero.
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            epochs: 500,
            l2_lambda: 1e-4,
            seed: 0,
        }
    }
}

/// Multinomial logistic regression over standardized inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearProbe {
    /// `m x d`, row per class.
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    pub class_labels: Vec<String>,
    pub feature_mean: Vec<f64>,
    /// `1 / std` per dimension; 0 for constant dimensions.
    pub feature_inv_std: Vec<f64>,
    pub training_config: ProbeConfig,
    /// Training loss after the last update.
    pub converged: f64,
}

/// Gradient of the mean cross-entropy plus `l2/2 · ‖W‖²`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

/// Loss and gradient of the probe objective on row-major inputs `x` (`d` columns).
pub fn loss_and_gradient(
    weights: &[Vec<f64>],
    bias: &[f64],
    x: &[f64],
    d: usize,
    labels: &[usize],
    l2_lambda: f64,
) -> (f64, Gradient) {
    let m = weights.len();
    let n = labels.len();
    let mut grad = Gradient {
        weights: vec![vec![0.0; d]; m],
        bias: vec![0.0; m],
    };
    let mut logits = vec![0.0; m];
    let mut loss = 0.0;
    for (row, &y) in x.chunks_exact(d).zip(labels) {
        for (k, l) in logits.iter_mut().enumerate() {
            *l = bias[k] + weights[k].iter().zip(row).map(|(w, v)| w * v).sum::<f64>();
        }
        let lse = log_sum_exp(&logits);
        loss += lse - logits[y];
        for (k, ((l, gb), gw)) in logits.iter().zip(&mut grad.bias).zip(&mut grad.weights).enumerate() {
            let delta = (l - lse).exp() - f64::from(u8::from(k == y));
            *gb += delta;
            for (g, v) in gw.iter_mut().zip(row) {
                *g += delta * v;
            }
        }
    }
    let inv_n = 1.0 / n as f64;
    let mut penalty = 0.0;
    for ((gb, gw), wk) in grad.bias.iter_mut().zip(&mut grad.weights).zip(weights) {
        *gb *= inv_n;
        for (g, w) in gw.iter_mut().zip(wk) {
            *g = *g * inv_n + l2_lambda * w;
            penalty += w * w;
        }
    }
    (loss * inv_n + 0.5 * l2_lambda * penalty, grad)
}

fn standardize(emb: &EmbeddingSet, mean: &[f64], inv_std: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(emb.as_slice().len());
    for row in emb.rows() {
        out.extend(row.iter().zip(mean).zip(inv_std).map(|((x, m), s)| (x - m) * s));
    }
    out
}

/// Full-batch gradient descent from zero weights for a fixed number of epochs.
pub fn train_linear_probe(
    emb: &EmbeddingSet,
    labels: &Clustering,
    config: ProbeConfig,
) -> Result<LinearProbe> {
    let m = labels.m();
    if m < 2 {
        return Err(Error::InvalidArgument(format!(
            "a probe needs at least 2 classes, got {m}"
        )));
    }
    if config.epochs < 1 {
        return Err(Error::InvalidArgument("epochs must be ≥ 1".into()));
    }
    if !(config.learning_rate > 0.0 && config.learning_rate.is_finite()) {
        return Err(Error::InvalidArgument("learning rate must be positive".into()));
    }
    if !(config.l2_lambda >= 0.0 && config.l2_lambda.is_finite()) {
        return Err(Error::InvalidArgument("l2 penalty must be non-negative".into()));
    }
    if labels.len() != emb.len() {
        return Err(Error::DimensionMismatch {
            expected: emb.len(),
            actual: labels.len(),
        });
    }
    let d = emb.dim();
    let n = emb.len() as f64;
    let mut mean = vec![0.0; d];
    for row in emb.rows() {
        mean.iter_mut().zip(row).for_each(|(m, x)| *m += x);
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; d];
    for row in emb.rows() {
        var.iter_mut()
            .zip(row.iter().zip(&mean))
            .for_each(|(v, (x, m))| *v += (x - m) * (x - m));
    }
    let inv_std: Vec<f64> = var
        .iter()
        .map(|v| {
            let sd = (v / n).sqrt();
            if sd > 0.0 {
                1.0 / sd
            } else {
                0.0
            }
        })
        .collect();
    let x = standardize(emb, &mean, &inv_std);
    let y = labels.assignment();

    let mut weights = vec![vec![0.0; d]; m];
    let mut bias = vec![0.0; m];
    let lr = config.learning_rate;
    for _ in 0..config.epochs {
        let (_, g) = loss_and_gradient(&weights, &bias, &x, d, y, config.l2_lambda);
        for k in 0..m {
            bias[k] -= lr * g.bias[k];
            weights[k]
                .iter_mut()
                .zip(&g.weights[k])
                .for_each(|(w, gw)| *w -= lr * gw);
        }
    }
    let (loss, _) = loss_and_gradient(&weights, &bias, &x, d, y, config.l2_lambda);
    Ok(LinearProbe {
        weights,
        bias,
        class_labels: labels.labels().to_vec(),
        feature_mean: mean,
        feature_inv_std: inv_std,
        training_config: config,
        converged: loss,
    })
}

impl LinearProbe {
    /// A probe with all-zero parameters and identity standardization.
    pub fn zeros(class_labels: Vec<String>, d: usize) -> Self {
        let m = class_labels.len();
        Self {
            weights: vec![vec![0.0; d]; m],
            bias: vec![0.0; m],
            class_labels,
            feature_mean: vec![0.0; d],
            feature_inv_std: vec![1.0; d],
            training_config: ProbeConfig::default(),
            converged: f64::NAN,
        }
    }

    pub fn dim(&self) -> usize {
        self.feature_mean.len()
    }

    /// Predicted class for one raw (unstandardized) point; ties to the lowest index.
    pub fn predict(&self, x: &[f64]) -> usize {
        let z: Vec<f64> = x
            .iter()
            .zip(&self.feature_mean)
            .zip(&self.feature_inv_std)
            .map(|((v, m), s)| (v - m) * s)
            .collect();
        let mut best = 0;
        let mut best_logit = f64::NEG_INFINITY;
        for (k, (w, b)) in self.weights.iter().zip(&self.bias).enumerate() {
            let logit = b + w.iter().zip(&z).map(|(a, c)| a * c).sum::<f64>();
            if logit > best_logit {
                best = k;
                best_logit = logit;
            }
        }
        best
    }
}

/// Percentage of entities whose predicted class equals their label index.
pub fn probe_accuracy(probe: &LinearProbe, emb: &EmbeddingSet, labels: &Clustering) -> Result<f64> {
    if emb.dim() != probe.dim() {
        return Err(Error::DimensionMismatch {
            expected: probe.dim(),
            actual: emb.dim(),
        });
    }
    if labels.len() != emb.len() {
        return Err(Error::DimensionMismatch {
            expected: emb.len(),
            actual: labels.len(),
        });
    }
    let correct = emb
        .rows()
        .zip(labels.assignment())
        .filter(|(x, &y)| probe.predict(x) == y)
        .count();
    Ok(100.0 * correct as f64 / emb.len() as f64)
}

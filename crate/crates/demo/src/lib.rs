//! Browser bindings for a few interactive views. Every export returns a JSON
//! string; the page in `www/` draws it on a canvas.

use embeval::alp::log_sum_exp;
use embeval::synth::{add_isotropic_noise, generate, spec_with_radius};
use embeval::{alp_score, fit_cluster_model, GaussianComponent, RegularizationMode};
use nalgebra::DMatrix;
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Debug, Serialize)]
pub struct ScenarioView {
    pub points: Vec<[f64; 2]>,
    pub labels: Vec<usize>,
    pub alp: f64,
    pub accuracy: f64,
    pub n_clipped: usize,
}

/// Sample `k` unit Gaussians on a circle of `radius` and score them.
pub fn scenario_view(radius: f64, k: usize, n_per: usize, seed: u64, reg: &str) -> Result<ScenarioView, String> {
    let reg: RegularizationMode = reg.parse().map_err(|e: embeval::Error| e.to_string())?;
    let spec = spec_with_radius(radius, k, 2, n_per, seed).map_err(|e| e.to_string())?;
    let (emb, clust) = generate(&spec).map_err(|e| e.to_string())?;
    let model = fit_cluster_model(&emb, &clust, reg, None).map_err(|e| e.to_string())?;
    let report = alp_score(&model, &emb, &clust, embeval::DEFAULT_CLIP_EPS).map_err(|e| e.to_string())?;
    Ok(ScenarioView {
        points: emb.rows().map(|r| [r[0], r[1]]).collect(),
        labels: clust.assignment().to_vec(),
        alp: report.alp,
        accuracy: report.accuracy,
        n_clipped: report.n_clipped,
    })
}

#[derive(Debug, Serialize)]
pub struct PosteriorCurve {
    pub x: Vec<f64>,
    /// Posterior of the first component at each `x`.
    pub p0: Vec<f64>,
}

/// Posterior of component 0 for two weighted 1D Gaussians over `[lo, hi]`.
#[allow(clippy::too_many_arguments)]
pub fn posterior_curve(
    mu0: f64,
    sd0: f64,
    mu1: f64,
    sd1: f64,
    w0: f64,
    lo: f64,
    hi: f64,
    steps: usize,
) -> Result<PosteriorCurve, String> {
    if !(w0 > 0.0 && w0 < 1.0) {
        return Err(format!("weight must lie in (0, 1), got {w0}"));
    }
    if !(sd0 > 0.0 && sd1 > 0.0) {
        return Err("standard deviations must be positive".into());
    }
    if steps < 2 || hi.is_nan() || lo.is_nan() || hi <= lo {
        return Err("need steps ≥ 2 and hi > lo".into());
    }
    let comp = |mu: f64, sd: f64, w: f64| {
        GaussianComponent::new(vec![mu], DMatrix::from_element(1, 1, sd * sd), w.ln()).map_err(|e| e.to_string())
    };
    let (c0, c1) = (comp(mu0, sd0, w0)?, comp(mu1, sd1, 1.0 - w0)?);
    let x: Vec<f64> = (0..steps)
        .map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64)
        .collect();
    let p0 = x
        .iter()
        .map(|&v| {
            let s = [
                c0.log_weight() + c0.log_density(&[v]),
                c1.log_weight() + c1.log_density(&[v]),
            ];
            (s[0] - log_sum_exp(&s)).exp()
        })
        .collect();
    Ok(PosteriorCurve { x, p0 })
}

#[derive(Debug, Serialize)]
pub struct NoiseSweep {
    pub sigma: Vec<f64>,
    pub alp: Vec<f64>,
    pub accuracy: Vec<f64>,
}

/// ALP and accuracy as isotropic noise of growing scale is added.
pub fn noise_sweep(radius: f64, k: usize, n_per: usize, seed: u64, max_sigma: f64, steps: usize) -> Result<NoiseSweep, String> {
    if steps < 2 || max_sigma.is_nan() || max_sigma <= 0.0 {
        return Err("need steps ≥ 2 and max_sigma > 0".into());
    }
    let spec = spec_with_radius(radius, k, 2, n_per, seed).map_err(|e| e.to_string())?;
    let (emb, clust) = generate(&spec).map_err(|e| e.to_string())?;
    let mut out = NoiseSweep {
        sigma: Vec::with_capacity(steps),
        alp: Vec::with_capacity(steps),
        accuracy: Vec::with_capacity(steps),
    };
    for i in 0..steps {
        let sigma = max_sigma * i as f64 / (steps - 1) as f64;
        let noisy = add_isotropic_noise(&emb, sigma, seed).map_err(|e| e.to_string())?;
        let model = fit_cluster_model(&noisy, &clust, RegularizationMode::Diagonal, None).map_err(|e| e.to_string())?;
        let r = alp_score(&model, &noisy, &clust, embeval::DEFAULT_CLIP_EPS).map_err(|e| e.to_string())?;
        out.sigma.push(sigma);
        out.alp.push(r.alp);
        out.accuracy.push(r.accuracy);
    }
    Ok(out)
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsValue> {
    r.and_then(|v| serde_json::to_string(&v).map_err(|e| e.to_string()))
        .map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn scenario(radius: f64, k: usize, n_per: usize, seed: u32, reg: &str) -> Result<String, JsValue> {
    to_js(scenario_view(radius, k, n_per, u64::from(seed), reg))
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn posterior(mu0: f64, sd0: f64, mu1: f64, sd1: f64, w0: f64, lo: f64, hi: f64, steps: usize) -> Result<String, JsValue> {
    to_js(posterior_curve(mu0, sd0, mu1, sd1, w0, lo, hi, steps))
}

#[wasm_bindgen]
pub fn sweep(radius: f64, k: usize, n_per: usize, seed: u32, max_sigma: f64, steps: usize) -> Result<String, JsValue> {
    to_js(noise_sweep(radius, k, n_per, u64::from(seed), max_sigma, steps))
}

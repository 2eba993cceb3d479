//! Acceptance checks. Runs as a plain binary so every criterion prints one
//! PASS/FAIL line; exits non-zero if any fails.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

use embeval::alp::MultiHeadConfig;
use embeval::data::{binarize, BinaryFeatureTable};
use embeval::probe::{correlate, loss_and_gradient, pearson, probe_accuracy, spearman, train_linear_probe, ProbeConfig};
use embeval::rng::CounterRng;
use embeval::synth::{add_isotropic_noise, generate, scenario_spec, spec_with_radius, ScenarioKind};
use embeval::tree::{
    build_tree, leaf_clustering, normalized_log_posteriors, score_candidates, select_best, FeaturePrior,
    TreeConfig, TreeParams,
};
use embeval::{
    alp_score, auto_epsilon, compare_embeddings, fit_cluster_model, mean_alp_multihead, posterior, regularize,
    Clustering, EmbeddingSet, FeatureTable, HeadSampling, RegularizationMode,
};
use nalgebra::{Cholesky, DMatrix};

type Outcome = Result<String, String>;
type Criterion = (&'static str, &'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn separated(n_per: usize, seed: u64) -> (EmbeddingSet, Clustering) {
    generate(&scenario_spec(ScenarioKind::Separated, 10, 2, n_per, seed).unwrap()).unwrap()
}

fn score(emb: &EmbeddingSet, clust: &Clustering, reg: RegularizationMode, clip: f64) -> embeval::AlpReport {
    let model = fit_cluster_model(emb, clust, reg, None).unwrap();
    alp_score(&model, emb, clust, clip).unwrap()
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let out = f();
    (out, t.elapsed())
}

fn c1_separated() -> Outcome {
    let (emb, clust) = separated(1000, 7);
    let (r, took) = timed(|| score(&emb, &clust, RegularizationMode::Diagonal, 1e-6));
    ensure!(r.alp >= -1e-3, "alp {}", r.alp);
    ensure!(r.accuracy == 100.0, "accuracy {}", r.accuracy);
    ensure!(took < Duration::from_secs(5), "took {took:?}");
    Ok(format!("alp {:.3e}, accuracy {}%, {took:.2?}", r.alp, r.accuracy))
}

fn c2_ordering() -> Outcome {
    let seed = 11;
    let (reports, took) = timed(|| {
        [ScenarioKind::Separated, ScenarioKind::Partial, ScenarioKind::Overlap].map(|kind| {
            let (emb, clust) = generate(&scenario_spec(kind, 10, 2, 1000, seed).unwrap()).unwrap();
            score(&emb, &clust, RegularizationMode::Diagonal, 1e-6)
        })
    });
    let [s, p, o] = &reports;
    ensure!(s.alp > p.alp && p.alp > o.alp, "alp order {} {} {}", s.alp, p.alp, o.alp);
    ensure!(
        s.accuracy >= p.accuracy && p.accuracy >= o.accuracy,
        "accuracy order {} {} {}",
        s.accuracy,
        p.accuracy,
        o.accuracy
    );
    ensure!((-0.6..=-0.15).contains(&p.alp), "partial alp {}", p.alp);
    ensure!((80.0..=95.0).contains(&p.accuracy), "partial accuracy {}", p.accuracy);
    ensure!(took < Duration::from_secs(10), "took {took:?}");
    Ok(format!(
        "alp {:.4} > {:.4} > {:.4}, partial accuracy {:.2}%, {took:.2?}",
        s.alp, p.alp, o.alp, p.accuracy
    ))
}

/// Independent reference: explicit loops, Gauss-Jordan inverse, direct formula.
mod oracle {
    pub fn mean_cov(points: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
        let d = points[0].len();
        let n = points.len() as f64;
        let mut mean = vec![0.0; d];
        for p in points {
            for j in 0..d {
                mean[j] += p[j] / n;
            }
        }
        let mut cov = vec![vec![0.0; d]; d];
        for p in points {
            for a in 0..d {
                for b in 0..d {
                    cov[a][b] += (p[a] - mean[a]) * (p[b] - mean[b]) / n;
                }
            }
        }
        (mean, cov)
    }

    pub fn inverse_and_logdet(m: &[Vec<f64>]) -> (Vec<Vec<f64>>, f64) {
        let d = m.len();
        let mut a: Vec<Vec<f64>> = m.to_vec();
        let mut inv: Vec<Vec<f64>> = (0..d).map(|i| (0..d).map(|j| f64::from(u8::from(i == j))).collect()).collect();
        let mut logdet = 0.0;
        for col in 0..d {
            let piv = (col..d).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs())).unwrap();
            a.swap(col, piv);
            inv.swap(col, piv);
            let p = a[col][col];
            logdet += p.abs().ln();
            for j in 0..d {
                a[col][j] /= p;
                inv[col][j] /= p;
            }
            for r in 0..d {
                if r != col {
                    let f = a[r][col];
                    for j in 0..d {
                        a[r][j] -= f * a[col][j];
                        inv[r][j] -= f * inv[col][j];
                    }
                }
            }
        }
        (inv, logdet)
    }

    pub fn log_density(x: &[f64], mean: &[f64], inv: &[Vec<f64>], logdet: f64) -> f64 {
        let d = x.len();
        let mut q = 0.0;
        for a in 0..d {
            for b in 0..d {
                q += (x[a] - mean[a]) * inv[a][b] * (x[b] - mean[b]);
            }
        }
        -0.5 * d as f64 * (2.0 * std::f64::consts::PI).ln() - 0.5 * logdet - 0.5 * q
    }
}

fn c3_oracle() -> Outcome {
    let mut worst = 0.0f64;
    for inst in 0..50u64 {
        let mut rng = CounterRng::new(2024, inst);
        let m = 1 + rng.next_below(4);
        let d = 1 + rng.next_below(3);
        let n = (5 * m + rng.next_below(200 - 5 * m + 1)).min(200);
        let reg = match rng.next_below(3) {
            0 => RegularizationMode::Diagonal,
            1 => RegularizationMode::tikhonov(1e-3).unwrap(),
            _ => RegularizationMode::tikhonov(0.1).unwrap(),
        };
        let centers: Vec<Vec<f64>> = (0..m).map(|_| (0..d).map(|_| 3.0 * rng.next_normal()).collect()).collect();
        let labels: Vec<usize> = (0..n).map(|i| if i < 5 * m { i % m } else { rng.next_below(m) }).collect();
        let rows: Vec<Vec<f64>> = labels
            .iter()
            .map(|&k| centers[k].iter().map(|c| c + rng.next_normal()).collect())
            .collect();
        let ids = (0..n).map(|i| format!("x{i}")).collect();
        let emb = EmbeddingSet::new(ids, rows.clone(), "oracle").unwrap();
        let clust = Clustering::new(labels.clone(), (0..m).map(|k| k.to_string()).collect(), "o").unwrap();

        let mut params = Vec::new();
        for k in 0..m {
            let pts: Vec<Vec<f64>> = rows.iter().zip(&labels).filter(|(_, &l)| l == k).map(|(r, _)| r.clone()).collect();
            let (mean, mut cov) = oracle::mean_cov(&pts);
            match reg {
                RegularizationMode::Diagonal => {
                    for a in 0..d {
                        for b in 0..d {
                            if a != b {
                                cov[a][b] = 0.0;
                            }
                        }
                        if cov[a][a] == 0.0 {
                            cov[a][a] = 1e-8;
                        }
                    }
                }
                RegularizationMode::Tikhonov { lambda } => (0..d).for_each(|a| cov[a][a] += lambda),
                RegularizationMode::AutoEpsilon => unreachable!(),
            }
            let (inv, logdet) = oracle::inverse_and_logdet(&cov);
            params.push((mean, inv, logdet, (pts.len() as f64 / n as f64).ln()));
        }

        let model = fit_cluster_model(&emb, &clust, reg, None).unwrap();
        let report = alp_score(&model, &emb, &clust, 0.0).unwrap();
        let mut total = 0.0;
        for (x, &own) in rows.iter().zip(&labels) {
            let logs: Vec<f64> = params.iter().map(|(mu, inv, ld, lw)| lw + oracle::log_density(x, mu, inv, *ld)).collect();
            let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = logs.iter().map(|l| (l - max).exp()).sum();
            let want: Vec<f64> = logs.iter().map(|l| (l - max).exp() / z).collect();
            let got = posterior(&model, x);
            for (g, w) in got.iter().zip(&want) {
                worst = worst.max((g - w).abs());
            }
            total += logs[own] - max - z.ln();
        }
        let alp = total / n as f64;
        worst = worst.max((report.alp - alp).abs());
        ensure!(worst <= 1e-8, "instance {inst} (m={m}, d={d}, n={n}): deviation {worst:e}");
    }
    Ok(format!("50 instances, max deviation {worst:.1e}"))
}

fn c4_regularizer() -> Outcome {
    let cases = [
        (DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![4.0, 1.0, 1e-12])), 4.0 / 30.0),
        (DMatrix::identity(2, 2), 0.05),
        (DMatrix::zeros(2, 2), 1e-8),
    ];
    for (m, want) in &cases {
        let got = auto_epsilon(m).unwrap();
        ensure!((got - want).abs() <= 1e-12, "auto_epsilon {got} vs {want}");
    }
    let modes = [
        RegularizationMode::AutoEpsilon,
        RegularizationMode::Diagonal,
        RegularizationMode::tikhonov(1e-9).unwrap(),
        RegularizationMode::tikhonov(1e-3).unwrap(),
    ];
    let mut checked = 0;
    for t in 0..60u64 {
        let mut rng = CounterRng::new(77, t);
        let d = 1 + rng.next_below(8);
        let rank = rng.next_below(d + 1);
        let scale = 10f64.powi(rng.next_below(9) as i32 - 4);
        let b = DMatrix::from_fn(d, rank, |_, _| scale * rng.next_normal());
        let cov = &b * b.transpose();
        for mode in modes {
            // A fixed ridge below the round-off of the entries cannot restore definiteness.
            if let RegularizationMode::Tikhonov { lambda } = mode {
                if lambda < 1e-12 * cov.amax() {
                    continue;
                }
            }
            let r = regularize(&cov, mode).unwrap();
            ensure!(Cholesky::new(r).is_some(), "Cholesky failed: d={d} rank={rank} scale={scale} {mode}");
            checked += 1;
        }
    }
    Ok(format!("worked examples exact, {checked} regularized matrices factorized"))
}

fn blob_fixture() -> (EmbeddingSet, FeatureTable, Vec<usize>) {
    let mut rng = CounterRng::new(5, 0);
    let (mut ids, mut rows, mut f1, mut f2, mut truth) = (vec![], vec![], vec![], vec![], vec![]);
    for i in 0..200 {
        let (a, b) = (i % 2, (i / 2) % 2);
        ids.push(format!("e{i:03}"));
        rows.push(vec![8.0 * a as f64 + rng.next_normal(), 8.0 * b as f64 + rng.next_normal()]);
        f1.push(a.to_string());
        f2.push(b.to_string());
        truth.push(2 * a + b);
    }
    let emb = EmbeddingSet::new(ids.clone(), rows, "blobs").unwrap();
    let feats = FeatureTable::from_columns(ids, vec![("f1".into(), f1), ("f2".into(), f2)]).unwrap();
    (emb, feats, truth)
}

fn random_node(seed: u64) -> (EmbeddingSet, BinaryFeatureTable, Vec<usize>) {
    let mut rng = CounterRng::new(seed, 3);
    let d = 1 + rng.next_below(3);
    let n = 40 + rng.next_below(60);
    let ids: Vec<String> = (0..n).map(|i| format!("r{i}")).collect();
    let rows = (0..n).map(|_| (0..d).map(|_| 2.0 * rng.next_normal()).collect()).collect();
    let emb = EmbeddingSet::new(ids.clone(), rows, "node").unwrap();
    let cols = (0..4)
        .map(|c| (format!("g{c}"), (0..n).map(|_| rng.next_below(3).to_string()).collect()))
        .collect();
    let bin = binarize(&FeatureTable::from_columns(ids, cols).unwrap());
    let rows: Vec<usize> = (0..n).filter(|_| rng.next_below(4) != 0).collect();
    (emb, bin, rows)
}

fn c5_tree() -> Outcome {
    let (emb, feats, truth) = blob_fixture();
    let cfg = TreeConfig::new(TreeParams { max_depth: 4, min_node_size: 10 }, RegularizationMode::Diagonal);
    let tree = build_tree(&emb, &feats, &cfg, None).unwrap();
    let leaves = leaf_clustering(&tree);
    ensure!(leaves.m() == 4, "{} leaves", leaves.m());
    for k in 0..4 {
        let cells: Vec<usize> = leaves.assignment().iter().zip(&truth).filter(|(&l, _)| l == k).map(|(_, &t)| t).collect();
        ensure!(cells.iter().all(|&t| t == cells[0]), "leaf {k} mixes cells");
    }
    let a = tree.to_json().to_string_pretty().unwrap();
    let b = build_tree(&emb, &feats, &cfg, None).unwrap().to_json().to_string_pretty().unwrap();
    ensure!(a == b, "tree JSON differs between runs");

    for s in 0..20 {
        let (emb, bin, rows) = random_node(s);
        let prior = FeaturePrior::uniform(bin.q());
        let cands = score_candidates(&emb, &rows, &bin, RegularizationMode::tikhonov(1e-3).unwrap(), &prior, 3).unwrap();
        let raw = select_best(&cands).map(|c| c.feature_index);
        let norm = normalized_log_posteriors(&cands);
        let mut best: Option<(usize, f64)> = None;
        for (i, v) in norm.iter().enumerate() {
            if let Some(v) = v {
                if best.is_none_or(|(_, b)| *v > b) {
                    best = Some((i, *v));
                }
            }
        }
        ensure!(raw == best.map(|b| b.0), "node {s}: {raw:?} vs {best:?}");
    }
    Ok("4 ground-truth leaves, byte-identical JSON, 20 nodes agree".into())
}

fn c6_multihead() -> Outcome {
    let (emb, clust) = generate(&scenario_spec(ScenarioKind::Partial, 5, 6, 200, 3).unwrap()).unwrap();
    let reg = RegularizationMode::AutoEpsilon;
    let full = |v, heads, seed| MultiHeadConfig {
        v,
        n_heads: heads,
        seed,
        clip_eps: 1e-6,
        sampling: HeadSampling::Independent,
    };
    let single = mean_alp_multihead(&emb, &clust, reg, &full(6, 1, 0)).unwrap();
    let plain = score(&emb, &clust, reg, 1e-6);
    ensure!((single.mean_alp - plain.alp).abs() <= 1e-12, "{} vs {}", single.mean_alp, plain.alp);

    let cfg = full(3, 8, 99);
    let a = mean_alp_multihead(&emb, &clust, reg, &cfg).unwrap();
    let b = mean_alp_multihead(&emb, &clust, reg, &cfg).unwrap();
    ensure!(a == b, "fixed-seed runs differ");
    ensure!(a.mean_alp.to_bits() == b.mean_alp.to_bits(), "mean_alp bits differ");

    let serial = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| (mean_alp_multihead(&emb, &clust, reg, &cfg).unwrap(), score(&emb, &clust, reg, 1e-6)));
    ensure!((serial.0.mean_alp - a.mean_alp).abs() <= 1e-12, "serial/parallel mean_alp differ");
    ensure!((serial.1.alp - plain.alp).abs() <= 1e-12, "serial/parallel alp differ");
    Ok(format!("mean_alp {:.6} reproducible; serial == parallel", a.mean_alp))
}

fn with_outlier(emb: &EmbeddingSet, clust: &Clustering, point: Vec<f64>) -> (EmbeddingSet, Clustering) {
    let mut ids = emb.ids().to_vec();
    ids.push("outlier".into());
    let mut data = emb.as_slice().to_vec();
    data.extend(point);
    let mut assign = clust.assignment().to_vec();
    assign.push(0);
    (
        EmbeddingSet::from_flat(ids, data, emb.dim(), "dirty").unwrap(),
        Clustering::new(assign, clust.labels().to_vec(), "dirty").unwrap(),
    )
}

fn c7_clipping() -> Outcome {
    let spec = scenario_spec(ScenarioKind::Separated, 10, 2, 100, 21).unwrap();
    let (emb, clust) = generate(&spec).unwrap();
    let n = emb.len() as f64;
    let model = fit_cluster_model(&emb, &clust, RegularizationMode::Diagonal, None).unwrap();
    let (m0, m1) = (&spec.means[0], &spec.means[1]);
    let gap = ((m1[0] - m0[0]).powi(2) + (m1[1] - m0[1]).powi(2)).sqrt();
    let outlier = (0..2).map(|j| m0[j] + 1e6 * (m1[j] - m0[j]) / gap).collect();
    let (dirty, dirty_clust) = with_outlier(&emb, &clust, outlier);
    let delta = |clip| {
        let clean = alp_score(&model, &emb, &clust, clip).unwrap().alp;
        let noisy = alp_score(&model, &dirty, &dirty_clust, clip).unwrap().alp;
        (noisy - clean).abs()
    };
    let (clipped, unclipped) = (delta(1e-6), delta(0.0));
    ensure!(clipped < 10.0 / n, "clip 1e-6: |dALP| {clipped:e}");
    ensure!(unclipped > 100.0 / n, "clip 0: |dALP| {unclipped:e}");
    Ok(format!("|dALP| {clipped:.1e} (clipped) vs {unclipped:.1e} (unclipped), N={n}"))
}

fn c8_probe() -> Outcome {
    let mut worst = 0.0f64;
    for inst in 0..20u64 {
        let mut rng = CounterRng::new(8, inst);
        let m = 2 + rng.next_below(3);
        let d = 1 + rng.next_below(4);
        let n = 5 + rng.next_below(20);
        let x: Vec<f64> = (0..n * d).map(|_| rng.next_normal()).collect();
        let y: Vec<usize> = (0..n).map(|_| rng.next_below(m)).collect();
        let w: Vec<Vec<f64>> = (0..m).map(|_| (0..d).map(|_| rng.next_normal()).collect()).collect();
        let b: Vec<f64> = (0..m).map(|_| rng.next_normal()).collect();
        let l2 = 0.01 * rng.next_f64();
        let (_, g) = loss_and_gradient(&w, &b, &x, d, &y, l2);
        let h = 1e-6;
        let loss = |w: &[Vec<f64>], b: &[f64]| loss_and_gradient(w, b, &x, d, &y, l2).0;
        let rel = |a: f64, num: f64| (a - num).abs() / a.abs().max(num.abs()).max(1e-6);
        for k in 0..m {
            for j in 0..d {
                let (mut wp, mut wm) = (w.clone(), w.clone());
                wp[k][j] += h;
                wm[k][j] -= h;
                let num = (loss(&wp, &b) - loss(&wm, &b)) / (2.0 * h);
                worst = worst.max(rel(g.weights[k][j], num));
            }
            let (mut bp, mut bm) = (b.clone(), b.clone());
            bp[k] += h;
            bm[k] -= h;
            let num = (loss(&w, &bp) - loss(&w, &bm)) / (2.0 * h);
            worst = worst.max(rel(g.bias[k], num));
        }
    }
    ensure!(worst <= 1e-5, "max relative gradient error {worst:e}");
    let (emb, clust) = separated(50, 4);
    let probe = train_linear_probe(&emb, &clust, ProbeConfig::default()).unwrap();
    let acc = probe_accuracy(&probe, &emb, &clust).unwrap();
    ensure!(acc >= 99.0, "separable probe accuracy {acc}");
    Ok(format!("max relative gradient error {worst:.1e}, separable accuracy {acc}%"))
}

fn c9_correlation() -> Outcome {
    let r = pearson(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap().value().unwrap();
    let rho = spearman(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap().value().unwrap();
    ensure!((r - 0.5).abs() <= 1e-12 && (rho - 0.5).abs() <= 1e-12, "half case {r} {rho}");
    let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
    let up: Vec<f64> = xs.iter().map(|x| 3.0 * x - 7.0).collect();
    let down: Vec<f64> = xs.iter().map(|x| -0.5 * x + 2.0).collect();
    for (ys, want) in [(&up, 1.0), (&down, -1.0)] {
        let r = pearson(&xs, ys).unwrap().value().unwrap();
        let rho = spearman(&xs, ys).unwrap().value().unwrap();
        ensure!((r - want).abs() <= 1e-12 && (rho - want).abs() <= 1e-12, "linear case {r} {rho}");
    }
    let flat = correlate(&xs, &[2.0; 5]).unwrap();
    ensure!(flat.pearson.is_none() && flat.spearman.is_none(), "zero variance reported as {flat:?}");
    ensure!(flat.undefined_reason.is_some(), "no reason for undefined result");
    Ok("0.5/0.5, exact +-1, zero variance undefined".into())
}

fn c10_comparison() -> Outcome {
    let (emb, clust) = generate(&scenario_spec(ScenarioKind::Partial, 10, 2, 200, 13).unwrap()).unwrap();
    let reg = RegularizationMode::AutoEpsilon;
    let same = compare_embeddings(&emb, &emb, &clust, &clust, reg, 1e-6).unwrap();
    let v = same.alp_a_a.alp;
    ensure!(
        [same.alp_a_b.alp, same.alp_b_a.alp, same.alp_b_b.alp].iter().all(|&x| x == v),
        "A=B scores differ"
    );
    let noisy = add_isotropic_noise(&emb, 2.0, 13).unwrap();
    let r = compare_embeddings(&emb, &noisy, &clust, &clust, reg, 1e-6).unwrap();
    ensure!(r.alp_a_a.alp > r.alp_a_b.alp, "ALP_S^A {} <= ALP_S^B {}", r.alp_a_a.alp, r.alp_a_b.alp);
    Ok(format!("A=B all {v:.4}; noisy B {:.4} < A {:.4}", r.alp_a_b.alp, r.alp_a_a.alp))
}

fn c11_scale() -> Outcome {
    let (emb, clust) = generate(&spec_with_radius(6.0, 10, 128, 10_000, 1).unwrap()).unwrap();
    let (r, took) = timed(|| score(&emb, &clust, RegularizationMode::Diagonal, 1e-6));
    ensure!(r.n_total == 100_000, "n_total {}", r.n_total);
    ensure!(took < Duration::from_secs(60), "took {took:?}");
    Ok(format!("N=100000 d=128 m=10 in {took:.2?}, alp {:.4}", r.alp))
}

/// Progressively noised copies of one dataset stand in for model layers.
fn layers() -> Outcome {
    let (emb, clust) = generate(&scenario_spec(ScenarioKind::Separated, 5, 8, 100, 17).unwrap()).unwrap();
    let sigmas = [0.0, 2.0, 4.0, 8.0, 16.0, 32.0];
    let cfg = ProbeConfig { epochs: 200, ..ProbeConfig::default() };
    let (mut alps, mut accs) = (Vec::new(), Vec::new());
    for (i, s) in sigmas.iter().enumerate() {
        let layer = add_isotropic_noise(&emb, *s, i as u64).unwrap();
        alps.push(score(&layer, &clust, RegularizationMode::Diagonal, 1e-6).alp);
        let probe = train_linear_probe(&layer, &clust, cfg).unwrap();
        accs.push(probe_accuracy(&probe, &layer, &clust).unwrap());
    }
    ensure!(alps.windows(2).all(|w| w[0] >= w[1]), "ALP not monotone in noise: {alps:?}");
    let r = pearson(&alps, &accs).unwrap().value().ok_or("probe accuracy constant")?;
    ensure!(r > 0.9, "pearson(ALP, probe accuracy) = {r}");
    Ok(format!("ALP monotone over {} layers, pearson {r:.4}", sigmas.len()))
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("1", "separated scenario", c1_separated),
        ("2", "scenario ordering", c2_ordering),
        ("3", "posterior oracle", c3_oracle),
        ("4", "regularizer", c4_regularizer),
        ("5", "tree determinism", c5_tree),
        ("6", "multi-head degeneracy", c6_multihead),
        ("7", "clipping efficacy", c7_clipping),
        ("8", "probe gradient", c8_probe),
        ("9", "correlation values", c9_correlation),
        ("10", "comparison sanity", c10_comparison),
        ("11", "scale", c11_scale),
        ("L", "noised layers correlation", layers),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (id, name, check) in criteria {
        let outcome = panic::catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|e| Err(format!("panicked: {}", e.downcast_ref::<String>().cloned().unwrap_or_default())));
        match outcome {
            Ok(detail) => println!("criterion {id:>2} PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {id:>2} FAIL  {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

use std::collections::BTreeSet;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use hpslpred::balance::{boundary_balance, fit_balancing_svm, BalanceParams, SelectionMethod};
use hpslpred::config::PipelineConfig;
use hpslpred::dataset::{BinaryDataset, AMINO_ACIDS};
use hpslpred::eval::{label_ranks, macro_ap, multilabel_metrics, ranking_ap};
use hpslpred::features::{
    extract_188, extract_aac, extract_pc_pseaac, extract_sc_pseaac, FeatureMatrix, FeatureSchema, ScaleId,
};
use hpslpred::pipeline;
use hpslpred::select::{coarse_grid, mrmd_rank, two_layer_search, DistanceMetric};
use hpslpred::svm::{kernel_eval, train_svm, KernelSpec, SvmParams};
use hpslpred::synthetic::{write_synthetic, SyntheticParams};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------- 1

const PER_CLASS_188D: [f64; 10] = [74.33, 77.19, 70.71, 72.05, 78.53, 73.04, 66.24, 72.84, 64.88, 74.65];
const PER_CLASS_PSEAAC: [f64; 10] = [77.02, 77.46, 70.65, 75.08, 78.80, 74.69, 66.26, 77.58, 67.32, 77.20];
const PER_CLASS_350D: [f64; 10] = [77.67, 79.77, 71.38, 74.44, 81.56, 76.73, 66.00, 75.47, 66.08, 76.46];

fn metric_arithmetic() -> Outcome {
    let mut parts = Vec::new();
    for (name, column, reported) in [("188D", PER_CLASS_188D, 72.45), ("PseAAC", PER_CLASS_PSEAAC, 74.21), ("350D", PER_CLASS_350D, 74.56)] {
        let fractions: Vec<f64> = column.iter().map(|v| v / 100.0).collect();
        let ap = macro_ap(&fractions).map_err(|e| e.to_string())? * 100.0;
        ensure((ap - reported).abs() <= 0.005 + 1e-9, || format!("{name}: {ap:.4}% vs {reported}%"))?;
        parts.push(format!("{name} {ap:.3}%"));
    }
    Ok(parts.join(", "))
}

// ---------------------------------------------------------------- 2

fn random_sequence(r: &mut ChaCha8Rng, min: usize, max: usize) -> String {
    let len = r.gen_range(min..=max);
    (0..len).map(|_| AMINO_ACIDS[r.gen_range(0..20)] as char).collect()
}

fn feature_dimensions() -> Outcome {
    let mut r = rng(2);
    let schema = FeatureSchema::default();
    let pc: Vec<_> = [ScaleId::Hydrophobicity, ScaleId::Hydrophilicity].map(|s| s.scale()).to_vec();
    let mut worst = 0.0f64;
    for i in 0..1000 {
        let seq = random_sequence(&mut r, schema.min_length(), 600);
        let err = |e: hpslpred::features::FeatureError| format!("sequence {i}: {e}");
        let dims = [
            extract_188(&seq).map_err(err)?.values.len(),
            extract_pc_pseaac(&seq, 2, 0.05, &pc).map_err(err)?.values.len(),
            extract_sc_pseaac(&seq, 3, 0.05, &pc).map_err(err)?.values.len(),
            schema.extract(&seq).map_err(err)?.values.len(),
        ];
        ensure(dims == [188, 22, 26, 350], || format!("sequence {i}: dimensions {dims:?}"))?;
        let aac: f64 = extract_aac(&seq).map_err(err)?.values.iter().sum();
        worst = worst.max((aac - 1.0).abs());
        ensure((aac - 1.0).abs() <= 1e-9, || format!("sequence {i}: AAC sums to {aac}"))?;
    }
    Ok(format!("1000 sequences, max |sum(AAC) - 1| = {worst:.1e}"))
}

// ---------------------------------------------------------------- 3

/// Euclidean projection onto `{0 <= a <= c, y.a = 0}` by bisection on the
/// multiplier of the equality constraint.
fn project(v: &[f64], y: &[f64], c: f64) -> Vec<f64> {
    let at = |mu: f64| -> Vec<f64> { v.iter().zip(y).map(|(vi, yi)| (vi - mu * yi).clamp(0.0, c)).collect() };
    let h = |mu: f64| -> f64 { at(mu).iter().zip(y).map(|(a, yi)| a * yi).sum() };
    let bound = v.iter().fold(0.0f64, |m, x| m.max(x.abs())) + c + 1.0;
    let (mut lo, mut hi) = (-bound, bound);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(0.5 * (lo + hi))
}

/// Accelerated projected-gradient ascent on the C-SVC dual.
fn qp_oracle(k: &[Vec<f64>], y: &[f64], c: f64) -> (Vec<f64>, f64) {
    let n = y.len();
    let q: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| y[i] * y[j] * k[i][j]).collect()).collect();
    let lip = q.iter().map(|row| row.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max).max(1e-12);
    let objective = |a: &[f64]| -> f64 {
        let quad: f64 = (0..n).map(|i| (0..n).map(|j| a[i] * q[i][j] * a[j]).sum::<f64>()).sum();
        a.iter().sum::<f64>() - 0.5 * quad
    };
    let mut a = vec![0.0; n];
    let mut z = a.clone();
    let mut t = 1.0f64;
    for _ in 0..200_000 {
        let grad: Vec<f64> = (0..n).map(|i| 1.0 - (0..n).map(|j| q[i][j] * z[j]).sum::<f64>()).collect();
        let step: Vec<f64> = z.iter().zip(&grad).map(|(zi, g)| zi + g / lip).collect();
        let next = project(&step, y, c);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let moved: f64 = next.iter().zip(&a).map(|(p, q)| (p - q).abs()).sum();
        z = next.iter().zip(&a).map(|(p, q)| p + (t - 1.0) / t_next * (p - q)).collect();
        if objective(&z) < objective(&next) {
            // restart momentum when it stops helping
            z = next.clone();
            t = 1.0;
        } else {
            t = t_next;
        }
        a = next;
        if moved < 1e-15 {
            break;
        }
    }
    let obj = objective(&a);
    (a, obj)
}

fn oracle_decisions(k: &[Vec<f64>], y: &[f64], a: &[f64], c: f64) -> Vec<f64> {
    let n = y.len();
    let raw: Vec<f64> = (0..n).map(|i| (0..n).map(|j| a[j] * y[j] * k[j][i]).sum()).collect();
    let eps = 1e-7 * c.max(1.0);
    let free: Vec<usize> = (0..n).filter(|&i| a[i] > eps && a[i] < c - eps).collect();
    let b = if free.is_empty() {
        // feasible interval for b from the bound constraints
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for i in 0..n {
            let g = y[i] - raw[i];
            let at_upper = a[i] >= c - eps;
            // y f <= 1 at the upper bound, y f >= 1 at zero
            if (y[i] > 0.0) != at_upper {
                lo = lo.max(g);
            } else {
                hi = hi.min(g);
            }
        }
        0.5 * (lo + hi)
    } else {
        free.iter().map(|&i| y[i] - raw[i]).sum::<f64>() / free.len() as f64
    };
    raw.iter().map(|r| r + b).collect()
}

fn smo_oracle() -> Outcome {
    let mut r = rng(3);
    let mut worst = 0.0f64;
    let mut datasets = 0;
    while datasets < 240 {
        let n = r.gen_range(2..=8);
        let d = r.gen_range(1..=3);
        let x: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| r.gen_range(-2.0..2.0)).collect()).collect();
        let w: Vec<f64> = (0..d).map(|_| r.gen_range(-1.0..1.0)).collect();
        let y: Vec<i8> = x
            .iter()
            .map(|row| {
                let s: f64 = row.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() + r.gen_range(-0.5..0.5);
                if s > 0.0 {
                    1
                } else {
                    -1
                }
            })
            .collect();
        if !(y.contains(&1) && y.contains(&-1)) {
            continue;
        }
        let c = [0.1, 1.0, 10.0][datasets % 3];
        let kernel = if datasets % 2 == 0 { KernelSpec::Linear } else { KernelSpec::Rbf { gamma: r.gen_range(0.2..2.0) } };
        let mut params = SvmParams::new(c, kernel);
        params.standardize = false;
        let model = train_svm(&x, &y, &params).map_err(|e| format!("dataset {datasets}: {e}"))?;
        ensure(model.converged, || format!("dataset {datasets}: SMO did not converge"))?;
        let k: Vec<Vec<f64>> = x.iter().map(|a| x.iter().map(|b| kernel_eval(a, b, &kernel).unwrap()).collect()).collect();
        let yf: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();
        let (alpha, obj) = qp_oracle(&k, &yf, c);
        let gap = (obj - model.dual_objective).abs();
        worst = worst.max(gap);
        ensure(gap <= 1e-4, || format!("dataset {datasets}: objective {} vs oracle {obj}", model.dual_objective))?;
        let oracle_f = oracle_decisions(&k, &yf, &alpha, c);
        for (i, row) in x.iter().enumerate() {
            let f = model.decision_value(row).unwrap();
            ensure((f > 0.0) == (oracle_f[i] > 0.0), || {
                format!("dataset {datasets}, sample {i}: SMO f = {f}, oracle f = {}", oracle_f[i])
            })?;
        }
        datasets += 1;
    }
    Ok(format!("{datasets} datasets, max objective gap {worst:.1e}"))
}

// ---------------------------------------------------------------- 4

fn balance_contract() -> Outcome {
    let mut r = rng(4);
    let params = BalanceParams::default();
    let mut boundary = 0;
    for fixture in 0..50 {
        let d = r.gen_range(2..=3);
        let n_min = r.gen_range(4..=10);
        let n_maj = r.gen_range(2 * n_min..=5 * n_min);
        let mut rows = Vec::new();
        let mut minority = Vec::new();
        let mut majority = Vec::new();
        // minority core, majority ring, shuffled together
        let mut kinds: Vec<bool> = (0..n_min + n_maj).map(|i| i < n_min).collect();
        kinds.shuffle(&mut r);
        for (i, is_min) in kinds.into_iter().enumerate() {
            let radius = if is_min { r.gen_range(0.0..1.2) } else { r.gen_range(0.8..3.0) };
            let mut v: Vec<f64> = (0..d).map(|_| r.gen_range(-1.0..1.0)).collect();
            let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt().max(1e-9);
            v.iter_mut().for_each(|a| *a *= radius / norm);
            rows.push(v);
            if is_min {
                minority.push(i);
            } else {
                majority.push(i);
            }
        }
        let x = FeatureMatrix {
            schema_id: "fixture".into(),
            column_names: (0..d).map(|j| format!("f{j}")).collect(),
            ids: (0..rows.len()).map(|i| format!("s{i}")).collect(),
            rows,
        };
        let positive_minority = fixture % 2 == 0;
        let binary = if positive_minority {
            BinaryDataset { label_index: 0, positives: minority.clone(), negatives: majority.clone() }
        } else {
            BinaryDataset { label_index: 0, positives: majority.clone(), negatives: minority.clone() }
        };
        let seed = 1000 + fixture as u64;
        let out = boundary_balance(&binary, &x, &params, seed).map_err(|e| format!("fixture {fixture}: {e}"))?;
        ensure(out.positives.len() == out.negatives.len(), || format!("fixture {fixture}: unequal sides"))?;
        let (kept_min, kept_maj) =
            if positive_minority { (&out.positives, &out.negatives) } else { (&out.negatives, &out.positives) };
        ensure(*kept_min == minority, || format!("fixture {fixture}: minority altered"))?;
        match out.provenance {
            SelectionMethod::SvmBoundary { .. } => {
                let (_, model) = fit_balancing_svm(&binary, &x, &params, seed).map_err(|e| e.to_string())?;
                let mut ranked: Vec<(f64, usize)> =
                    majority.iter().map(|&i| (model.decision_value(&x.rows[i]).unwrap().abs(), i)).collect();
                ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                let mut expected: Vec<usize> = ranked[..minority.len()].iter().map(|p| p.1).collect();
                expected.sort_unstable();
                ensure(*kept_maj == expected, || format!("fixture {fixture}: {kept_maj:?} vs oracle {expected:?}"))?;
                boundary += 1;
            }
            ref other => return Err(format!("fixture {fixture}: unexpected selection {other:?}")),
        }
    }
    Ok(format!("50 fixtures, {boundary} boundary selections match the |f| oracle"))
}

// ---------------------------------------------------------------- 5

fn naive_mrmd(x: &[Vec<f64>], y: &[f64], w_r: f64, w_d: f64, metric: DistanceMetric) -> Vec<usize> {
    let n = x.len();
    let d = x[0].len();
    let mut mr = vec![0.0; d];
    let mut z = vec![vec![0.0; n]; d];
    for j in 0..d {
        let mut mx = 0.0;
        let mut my = 0.0;
        for i in 0..n {
            mx += x[i][j];
            my += y[i];
        }
        mx /= n as f64;
        my /= n as f64;
        let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
        for i in 0..n {
            sxy += (x[i][j] - mx) * (y[i] - my);
            sxx += (x[i][j] - mx) * (x[i][j] - mx);
            syy += (y[i] - my) * (y[i] - my);
        }
        mr[j] = if sxx == 0.0 || syy == 0.0 { 0.0 } else { (sxy / (sxx * syy).sqrt()).abs() };
        let sd = (sxx / n as f64).sqrt();
        for i in 0..n {
            z[j][i] = if sd == 0.0 { 0.0 } else { (x[i][j] - mx) / sd };
        }
    }
    let mut md = vec![0.0; d];
    for a in 0..d {
        let mut total = 0.0;
        for b in 0..d {
            if a == b {
                continue;
            }
            let (mut dot, mut na, mut nb, mut sq) = (0.0, 0.0, 0.0, 0.0);
            for i in 0..n {
                dot += z[a][i] * z[b][i];
                na += z[a][i] * z[a][i];
                nb += z[b][i] * z[b][i];
                sq += (z[a][i] - z[b][i]) * (z[a][i] - z[b][i]);
            }
            total += match metric {
                DistanceMetric::Euclidean => sq.sqrt(),
                DistanceMetric::Cosine if na == 0.0 && nb == 0.0 => 0.0,
                DistanceMetric::Cosine if na == 0.0 || nb == 0.0 => 1.0,
                DistanceMetric::Cosine => 1.0 - dot / (na.sqrt() * nb.sqrt()),
                DistanceMetric::Tanimoto if na + nb - dot == 0.0 => 0.0,
                DistanceMetric::Tanimoto => 1.0 - dot / (na + nb - dot),
            };
        }
        md[a] = if d > 1 { total / (d - 1) as f64 } else { 0.0 };
    }
    let norm = |v: &[f64]| -> Vec<f64> {
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        v.iter().map(|x| if hi > lo { (x - lo) / (hi - lo) } else { 0.0 }).collect()
    };
    let (mr, md) = (norm(&mr), norm(&md));
    let combined: Vec<f64> = (0..d).map(|j| w_r * mr[j] + w_d * md[j]).collect();
    // selection sort: highest score first, lowest index among equals
    let mut remaining: Vec<usize> = (0..d).collect();
    let mut order = Vec::new();
    while !remaining.is_empty() {
        let mut best = 0;
        for p in 1..remaining.len() {
            if combined[remaining[p]] > combined[remaining[best]] {
                best = p;
            }
        }
        order.push(remaining.remove(best));
    }
    order
}

fn mrmd_oracle() -> Outcome {
    let mut r = rng(5);
    let metrics = [DistanceMetric::Euclidean, DistanceMetric::Cosine, DistanceMetric::Tanimoto];
    for m in 0..100 {
        let mut x: Vec<Vec<f64>> = (0..30).map(|_| (0..20).map(|_| r.gen_range(-3.0..3.0)).collect()).collect();
        let y: Vec<f64> = (0..30).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        if m % 4 == 1 {
            // duplicated and constant columns exercise the tie rule
            for row in x.iter_mut() {
                row[7] = row[3];
                row[12] = 2.5;
            }
        }
        let (w_r, w_d) = if m % 5 == 0 { (1.0, 1.0) } else { (r.gen_range(0.05..1.0), r.gen_range(0.05..1.0)) };
        let metric = metrics[m % 3];
        let got = mrmd_rank(&x, &y, w_r, w_d, metric).map_err(|e| e.to_string())?;
        let want = naive_mrmd(&x, &y, w_r, w_d, metric);
        ensure(got.order == want, || format!("matrix {m} ({metric:?}): {:?} vs {want:?}", got.order))?;
    }
    Ok("100 matrices, identical rankings".into())
}

// ---------------------------------------------------------------- 6

fn unimodal(r: &mut ChaCha8Rng) -> impl Fn(usize) -> f64 + Sync + Send {
    let peak = r.gen_range(1..=350) as f64;
    let shape = r.gen_range(0..3);
    let (a, b, w) = (r.gen_range(0.001..0.01), r.gen_range(0.001..0.01), r.gen_range(5.0..120.0));
    move |k: usize| {
        let k = k as f64;
        match shape {
            0 if k <= peak => 0.9 - a * (peak - k),
            0 => 0.9 - b * (k - peak),
            1 => 0.5 + 0.4 * (-((k - peak) / w).powi(2)).exp(),
            _ => 0.8 - ((k - peak) / 350.0).powi(2),
        }
    }
}

fn ok<F: Fn(usize) -> f64 + Sync + Send>(f: &F) -> impl Fn(usize) -> Result<f64, String> + Sync + Send + '_ {
    move |k| Ok(f(k))
}

fn search_exhaustive() -> Outcome {
    let mut r = rng(6);
    for e in 0..50 {
        let f = unimodal(&mut r);
        let (mut best_k, mut best) = (1, f(1));
        for k in 2..=350 {
            if f(k) > best {
                best = f(k);
                best_k = k;
            }
        }
        let res = two_layer_search(ok(&f), 10, 350, 4).map_err(|e| e.to_string())?;
        ensure(res.best_k == best_k && res.best_score == best, || {
            format!("evaluator {e}: search {} vs exhaustive {best_k}", res.best_k)
        })?;
        for workers in [1, 8] {
            let other = two_layer_search(ok(&f), 10, 350, workers).map_err(|e| e.to_string())?;
            ensure(other == res, || format!("evaluator {e}: traces differ with {workers} workers"))?;
        }
    }
    for e in 0..50u64 {
        let salt = r.gen::<u64>();
        let f = move |k: usize| -> f64 {
            let mut g = ChaCha8Rng::seed_from_u64(salt ^ (k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            g.gen::<f64>()
        };
        let coarse_max = coarse_grid(10, 350).into_iter().map(f).fold(f64::NEG_INFINITY, f64::max);
        let res = two_layer_search(ok(&f), 10, 350, 4).map_err(|e| e.to_string())?;
        ensure(res.best_score >= coarse_max, || format!("arbitrary evaluator {e}: below coarse maximum"))?;
        for workers in [1, 8] {
            let other = two_layer_search(ok(&f), 10, 350, workers).map_err(|e| e.to_string())?;
            ensure(other == res, || format!("arbitrary evaluator {e}: traces differ with {workers} workers"))?;
        }
    }
    Ok("50 unimodal evaluators match exhaustive argmax; 50 arbitrary evaluators >= coarse max; workers 1/4/8 agree".into())
}

// ---------------------------------------------------------------- 7

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect();
    files.sort();
    files
}

fn end_to_end() -> Outcome {
    let start = Instant::now();
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let files = write_synthetic(tmp.path(), &SyntheticParams::default(), 20240601).map_err(|e| e.to_string())?;
    let cfg = PipelineConfig::load(&files.config).map_err(|e| e.to_string())?;
    let (a, b) = (tmp.path().join("run-a"), tmp.path().join("run-b"));
    let report = pipeline::run(&cfg, &a, None, None).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    pipeline::run(&cfg, &b, None, None).map_err(|e| e.to_string())?;
    let holdout = report.holdout.ok_or("no hold-out metrics")?;
    let identical = dir_bytes(&a.join(pipeline::BUNDLE_DIR)) == dir_bytes(&b.join(pipeline::BUNDLE_DIR));
    let summary = format!(
        "hold-out macro AP {:.4}, subset accuracy {:.4}, dimension {}, cv macro AP {:.4}, first run {:.1?}",
        holdout.macro_ap, holdout.subset_accuracy, report.dimension, report.cv_macro_ap, elapsed
    );
    ensure(holdout.macro_ap >= 0.85, || format!("macro AP below 0.85: {summary}"))?;
    ensure(holdout.subset_accuracy >= 0.80, || format!("subset accuracy below 0.80: {summary}"))?;
    ensure(identical, || format!("bundles differ between runs: {summary}"))?;
    ensure(elapsed < Duration::from_secs(300), || format!("too slow: {summary}"))?;
    Ok(summary)
}

// ---------------------------------------------------------------- 8

fn brute_rank(s: &[f64], j: usize) -> usize {
    1 + (0..s.len()).filter(|&l| s[l] > s[j] || (s[l] == s[j] && l < j)).count()
}

fn metric_oracles() -> Outcome {
    let mut r = rng(8);
    for inst in 0..100 {
        let n = r.gen_range(1..=20);
        let l = r.gen_range(2..=8);
        let tied = inst % 3 == 0;
        let scores: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                (0..l)
                    .map(|_| if tied { f64::from(r.gen_range(0..3)) } else { r.gen_range(-1.0..1.0) })
                    .collect()
            })
            .collect();
        let subset = |r: &mut ChaCha8Rng, nonempty: bool| -> BTreeSet<usize> {
            loop {
                let s: BTreeSet<usize> = (0..l).filter(|_| r.gen_bool(0.4)).collect();
                if !nonempty || !s.is_empty() {
                    return s;
                }
            }
        };
        let truth: Vec<BTreeSet<usize>> = (0..n).map(|_| subset(&mut r, true)).collect();
        let preds: Vec<BTreeSet<usize>> = (0..n).map(|_| subset(&mut r, false)).collect();
        let rep = multilabel_metrics(&preds, &scores, &truth).map_err(|e| e.to_string())?;

        let (mut hl, mut oe, mut cov, mut rl, mut ap) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for i in 0..n {
            let s = &scores[i];
            let t = &truth[i];
            hl += (0..l).filter(|j| preds[i].contains(j) != t.contains(j)).count() as f64 / l as f64;
            let top = (0..l).find(|&j| brute_rank(s, j) == 1).unwrap();
            if !t.contains(&top) {
                oe += 1.0;
            }
            cov += t.iter().map(|&j| brute_rank(s, j)).max().unwrap() as f64 - 1.0;
            let falses: Vec<usize> = (0..l).filter(|j| !t.contains(j)).collect();
            let mut wrong = 0;
            for &a in t {
                for &b in &falses {
                    if brute_rank(s, b) < brute_rank(s, a) {
                        wrong += 1;
                    }
                }
            }
            if !falses.is_empty() {
                rl += wrong as f64 / (t.len() * falses.len()) as f64;
            }
            let mut acc = 0.0;
            for &a in t {
                let ra = brute_rank(s, a);
                acc += t.iter().filter(|&&b| brute_rank(s, b) <= ra).count() as f64 / ra as f64;
            }
            ap += acc / t.len() as f64;
        }
        let nf = n as f64;
        for (name, got, want) in [
            ("hamming_loss", rep.hamming_loss, hl / nf),
            ("one_error", rep.one_error, oe / nf),
            ("coverage", rep.coverage, cov / nf),
            ("ranking_loss", rep.ranking_loss, rl / nf),
            ("ranking_ap", rep.ranking_ap, ap / nf),
        ] {
            ensure((got - want).abs() <= 1e-12, || format!("instance {inst}: {name} {got} vs oracle {want}"))?;
        }
        for (i, s) in scores.iter().enumerate() {
            let ranks = label_ranks(s);
            ensure((0..l).all(|j| ranks[j] == brute_rank(s, j)), || format!("instance {inst}: ranks of sample {i}"))?;
        }

        // a perfect ranking: every true label scores above every false one
        let perfect: Vec<Vec<f64>> = truth
            .iter()
            .map(|t| (0..l).map(|j| if t.contains(&j) { 1.0 + r.gen::<f64>() } else { -r.gen::<f64>() }).collect())
            .collect();
        let p = ranking_ap(&perfect, &truth).map_err(|e| e.to_string())?;
        ensure(p == 1.0, || format!("instance {inst}: perfect ranking gives {p}"))?;
    }
    Ok("100 instances agree with pair-counting oracles; perfect rankings give AP 1".into())
}

// ----------------------------------------------------------------

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("1 metric arithmetic vs reference values", metric_arithmetic),
        ("2 feature dimension contract", feature_dimensions),
        ("3 SMO vs projected-gradient QP oracle", smo_oracle),
        ("4 boundary balance contract", balance_contract),
        ("5 MRMD vs double-loop oracle", mrmd_oracle),
        ("6 two-layer search", search_exhaustive),
        ("7 end-to-end synthetic", end_to_end),
        ("8 metric properties", metric_oracles),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  criterion {name} ({secs:.1}s): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  criterion {name} ({secs:.1}s): {detail}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criterion/criteria failed");
        std::process::exit(1);
    }
    println!("all 8 criteria passed");
}

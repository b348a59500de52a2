use std::collections::BTreeSet;
use std::fmt::Display;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::SelectError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionSearchResult {
    pub best_k: usize,
    pub best_score: f64,
    pub coarse_trace: Vec<(usize, f64)>,
    pub fine_trace: Vec<(usize, f64)>,
}

impl DimensionSearchResult {
    /// Best `(k, score)` of the coarse round, smallest k on ties.
    pub fn coarse_best(&self) -> (usize, f64) {
        argmax(&self.coarse_trace)
    }

    /// CSV of `round,k,ap`, coarse rows first.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("round,k,ap\n");
        for (round, trace) in [("coarse", &self.coarse_trace), ("fine", &self.fine_trace)] {
            for (k, s) in trace {
                out.push_str(&format!("{round},{k},{s}\n"));
            }
        }
        out
    }
}

fn argmax(trace: &[(usize, f64)]) -> (usize, f64) {
    let mut best = trace[0];
    for &(k, s) in &trace[1..] {
        if s > best.1 || (s == best.1 && k < best.0) {
            best = (k, s);
        }
    }
    best
}

/// Coarse grid `{step, 2 step, ...} ∪ {total}`.
pub fn coarse_grid(coarse_step: usize, total: usize) -> Vec<usize> {
    let mut grid: Vec<usize> = (1..).map(|m| m * coarse_step).take_while(|&k| k <= total).collect();
    if grid.last() != Some(&total) {
        grid.push(total);
    }
    grid
}

/// Fine window around `k1`, minus already evaluated points.
pub fn fine_grid(k1: usize, coarse_step: usize, total: usize, done: &BTreeSet<usize>) -> Vec<usize> {
    let lo = (k1 + 1).saturating_sub(coarse_step).max(1);
    let hi = (k1 + coarse_step - 1).min(total);
    (lo..=hi).filter(|k| !done.contains(k)).collect()
}

fn evaluate_round<F, E>(ks: &[usize], evaluator: &F) -> Result<Vec<(usize, f64)>, SelectError>
where
    F: Fn(usize) -> Result<f64, E> + Sync,
    E: Display,
{
    let results: Vec<Result<f64, SelectError>> = ks
        .par_iter()
        .map(|&k| match evaluator(k) {
            Ok(s) if s.is_finite() => Ok(s),
            Ok(s) => Err(SelectError::Evaluator { k, message: format!("non-finite score {s}") }),
            Err(e) => Err(SelectError::Evaluator { k, message: e.to_string() }),
        })
        .collect();
    // first failure in k order, so the reported error does not depend on scheduling
    ks.iter().zip(results).map(|(&k, r)| r.map(|s| (k, s))).collect()
}

/// Two-round dimension search over `[1, total]`.
///
/// Round one scores the coarse grid, round two every unevaluated integer
/// within `coarse_step - 1` of the coarse winner. Rounds run on a pool of
/// `workers` threads (0 = rayon default); traces are in ascending k, so the
/// result does not depend on the worker count.
pub fn two_layer_search<F, E>(
    evaluator: F,
    coarse_step: usize,
    total: usize,
    workers: usize,
) -> Result<DimensionSearchResult, SelectError>
where
    F: Fn(usize) -> Result<f64, E> + Sync + Send,
    E: Display,
{
    if coarse_step == 0 {
        return Err(SelectError::BadParameter("coarse_step must be at least 1".into()));
    }
    if total == 0 {
        return Err(SelectError::BadParameter("total dimension must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| SelectError::BadParameter(format!("thread pool: {e}")))?;
    pool.install(|| {
        let coarse = coarse_grid(coarse_step, total);
        let coarse_trace = evaluate_round(&coarse, &evaluator)?;
        let (k1, _) = argmax(&coarse_trace);
        let done: BTreeSet<usize> = coarse.iter().copied().collect();
        let fine = fine_grid(k1, coarse_step, total, &done);
        let fine_trace = evaluate_round(&fine, &evaluator)?;
        let all: Vec<(usize, f64)> = coarse_trace.iter().chain(&fine_trace).copied().collect();
        let (best_k, best_score) = argmax(&all);
        log::info!("dimension search: coarse winner {k1}, best k = {best_k} (score {best_score})");
        Ok(DimensionSearchResult { best_k, best_score, coarse_trace, fine_trace })
    })
}

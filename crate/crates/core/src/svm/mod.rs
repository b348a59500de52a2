//! Binary kernel SVM trained with an SMO dual solver.

mod kernel;
mod smo;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use kernel::{kernel_eval, KernelSpec};

use crate::eval::kfold_split;
use crate::scaling::Standardizer;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SvmError {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("invalid SVM parameter: {0}")]
    BadParameter(String),
    #[error("training data must contain both classes")]
    SingleClass,
    #[error("labels must be +1 or -1")]
    BadLabel,
    #[error("empty training set")]
    Empty,
    #[error("every cross-validation fold was degenerate")]
    AllFoldsDegenerate,
    #[error("fold plan: {0}")]
    Folds(String),
}

pub const DEFAULT_TOL: f64 = 1e-3;
const MAX_PAIR_UPDATES: usize = 1_000_000;

/// Training parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub c: f64,
    pub kernel: KernelSpec,
    pub tol: f64,
    /// Pair-update budget; `None` means `min(10 n^2, 10^6)`.
    pub max_iter: Option<usize>,
    /// Standardize columns with training-split moments before solving.
    pub standardize: bool,
}

impl SvmParams {
    pub fn new(c: f64, kernel: KernelSpec) -> Self {
        SvmParams {
            c,
            kernel,
            tol: DEFAULT_TOL,
            max_iter: None,
            standardize: true,
        }
    }

    pub fn validate(&self) -> Result<(), SvmError> {
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(SvmError::BadParameter(format!("C must be positive, got {}", self.c)));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(SvmError::BadParameter(format!("tol must be positive, got {}", self.tol)));
        }
        self.kernel.validate()
    }
}

/// A trained binary SVM. Support vectors are stored in the standardized
/// space when `scaler` is present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub support_vectors: Vec<Vec<f64>>,
    /// `alpha_i * y_i` per support vector.
    pub dual_coefficients: Vec<f64>,
    pub bias: f64,
    pub kernel: KernelSpec,
    pub c: f64,
    pub scaler: Option<Standardizer>,
    pub dim: usize,
    pub dual_objective: f64,
    pub max_violation: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl SvmModel {
    /// `f(x) = sum_i alpha_i y_i K(sv_i, x) + b` on one raw input row.
    pub fn decision_value(&self, x: &[f64]) -> Result<f64, SvmError> {
        if x.len() != self.dim {
            return Err(SvmError::DimensionMismatch { expected: self.dim, actual: x.len() });
        }
        Ok(self.decision_unchecked(x))
    }

    pub(crate) fn decision_unchecked(&self, x: &[f64]) -> f64 {
        let scaled;
        let x = match &self.scaler {
            Some(s) => {
                scaled = s.transform_row(x);
                scaled.as_slice()
            }
            None => x,
        };
        self.support_vectors
            .iter()
            .zip(&self.dual_coefficients)
            .map(|(sv, coef)| coef * self.kernel.eval_unchecked(sv, x))
            .sum::<f64>()
            + self.bias
    }

    pub fn predict(&self, x: &[f64]) -> Result<i8, SvmError> {
        Ok(if self.decision_value(x)? > 0.0 { 1 } else { -1 })
    }
}

fn check_labels(y: &[i8]) -> Result<(), SvmError> {
    if y.iter().any(|&v| v != 1 && v != -1) {
        return Err(SvmError::BadLabel);
    }
    if !(y.contains(&1) && y.contains(&-1)) {
        return Err(SvmError::SingleClass);
    }
    Ok(())
}

/// Train a C-SVC on rows `x` with labels `y` in {+1, -1}.
///
/// A run that exhausts its pair-update budget still returns its last iterate
/// with `converged = false`.
pub fn train_svm(x: &[Vec<f64>], y: &[i8], params: &SvmParams) -> Result<SvmModel, SvmError> {
    params.validate()?;
    if x.is_empty() {
        return Err(SvmError::Empty);
    }
    if x.len() != y.len() {
        return Err(SvmError::DimensionMismatch { expected: x.len(), actual: y.len() });
    }
    let dim = x[0].len();
    if let Some(bad) = x.iter().find(|r| r.len() != dim) {
        return Err(SvmError::DimensionMismatch { expected: dim, actual: bad.len() });
    }
    check_labels(y)?;

    let scaler = params.standardize.then(|| Standardizer::fit(x));
    let scaled;
    let train: &[Vec<f64>] = match &scaler {
        Some(s) => {
            scaled = s.transform(x);
            &scaled
        }
        None => x,
    };
    let yf: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();
    let n = x.len();
    let budget = params
        .max_iter
        .unwrap_or_else(|| (10usize.saturating_mul(n).saturating_mul(n)).min(MAX_PAIR_UPDATES));
    let sol = smo::solve(train, &yf, params.c, params.kernel, params.tol, budget);
    if !sol.converged {
        log::warn!(
            "SMO stopped after {} pair updates with violation {:.3e} (tol {:.1e})",
            sol.iterations,
            sol.max_violation,
            params.tol
        );
    }

    let mut support_vectors = Vec::new();
    let mut dual_coefficients = Vec::new();
    for (t, &a) in sol.alpha.iter().enumerate() {
        if a > 0.0 {
            support_vectors.push(train[t].clone());
            dual_coefficients.push(a * yf[t]);
        }
    }
    Ok(SvmModel {
        support_vectors,
        dual_coefficients,
        bias: -sol.rho,
        kernel: params.kernel,
        c: params.c,
        scaler,
        dim,
        dual_objective: sol.objective,
        max_violation: sol.max_violation,
        iterations: sol.iterations,
        converged: sol.converged,
    })
}

pub fn decision_values(model: &SvmModel, x: &[Vec<f64>]) -> Result<Vec<f64>, SvmError> {
    x.iter().map(|r| model.decision_value(r)).collect()
}

/// Outcome of an RBF grid search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCvResult {
    pub c: f64,
    pub gamma: f64,
    pub accuracy: f64,
    /// `(C, gamma, mean fold accuracy)` for every grid point, in grid order.
    pub table: Vec<(f64, f64, f64)>,
}

/// Pick `(C, gamma)` maximizing mean stratified-fold accuracy. Ties go to the
/// smaller C, then the smaller gamma. Folds whose training split lacks a class
/// are skipped.
pub fn grid_cv_svm(
    x: &[Vec<f64>],
    y: &[i8],
    c_grid: &[f64],
    gamma_grid: &[f64],
    folds: usize,
    seed: u64,
) -> Result<GridCvResult, SvmError> {
    if folds < 2 {
        return Err(SvmError::BadParameter(format!("folds must be at least 2, got {folds}")));
    }
    if c_grid.is_empty() || gamma_grid.is_empty() {
        return Err(SvmError::BadParameter("empty hyperparameter grid".into()));
    }
    if x.len() != y.len() {
        return Err(SvmError::DimensionMismatch { expected: x.len(), actual: y.len() });
    }
    check_labels(y)?;
    let strata: Vec<usize> = y.iter().map(|&v| usize::from(v > 0)).collect();
    let plan = kfold_split(x.len(), folds, seed, &strata).map_err(|e| SvmError::Folds(e.to_string()))?;
    let splits: Vec<(Vec<usize>, Vec<usize>)> = (0..folds).map(|f| plan.split(f)).collect();

    let mut grid: Vec<(f64, f64)> = c_grid
        .iter()
        .flat_map(|&c| gamma_grid.iter().map(move |&g| (c, g)))
        .collect();
    grid.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    grid.dedup();

    let tasks: Vec<(usize, usize)> = (0..grid.len()).flat_map(|g| (0..folds).map(move |f| (g, f))).collect();
    let results: Vec<Result<Option<f64>, SvmError>> = tasks
        .par_iter()
        .map(|&(g, f)| {
            let (train, test) = &splits[f];
            let ty: Vec<i8> = train.iter().map(|&i| y[i]).collect();
            if test.is_empty() || check_labels(&ty).is_err() {
                return Ok(None);
            }
            let tx: Vec<Vec<f64>> = train.iter().map(|&i| x[i].clone()).collect();
            let (c, gamma) = grid[g];
            let model = train_svm(&tx, &ty, &SvmParams::new(c, KernelSpec::Rbf { gamma }))?;
            let correct = test
                .iter()
                .filter(|&&i| (model.decision_unchecked(&x[i]) > 0.0) == (y[i] > 0))
                .count();
            Ok(Some(correct as f64 / test.len() as f64))
        })
        .collect();

    let mut table = Vec::with_capacity(grid.len());
    let mut best: Option<(usize, f64)> = None;
    let mut any_fold = false;
    for (g, &(c, gamma)) in grid.iter().enumerate() {
        let mut accs = Vec::new();
        for f in 0..folds {
            if let Some(acc) = results[g * folds + f].clone()? {
                accs.push(acc);
            }
        }
        if accs.is_empty() {
            continue;
        }
        any_fold = true;
        let mean = accs.iter().sum::<f64>() / accs.len() as f64;
        table.push((c, gamma, mean));
        if best.is_none_or(|(_, b)| mean > b) {
            best = Some((g, mean));
        }
    }
    if !any_fold {
        return Err(SvmError::AllFoldsDegenerate);
    }
    let (g, accuracy) = best.expect("at least one scored grid point");
    Ok(GridCvResult {
        c: grid[g].0,
        gamma: grid[g].1,
        accuracy,
        table,
    })
}

/// Default RBF grid for `d` features: C in {0.1, 1, 10, 100},
/// gamma in {1/d, 0.01, 0.1, 1}.
pub fn default_grids(d: usize) -> (Vec<f64>, Vec<f64>) {
    let mut gammas = vec![1.0 / d.max(1) as f64, 0.01, 0.1, 1.0];
    gammas.sort_by(f64::total_cmp);
    gammas.dedup();
    (vec![0.1, 1.0, 10.0, 100.0], gammas)
}

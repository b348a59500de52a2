//! Boundary under-sampling: keep the whole minority side and the majority
//! samples with the smallest absolute SVM decision value.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::BinaryDataset;
use crate::features::FeatureMatrix;
use crate::rng;
use crate::svm::{self, GridCvResult, KernelSpec, SvmError, SvmModel, SvmParams};

#[derive(Debug, Error)]
pub enum BalanceError {
    #[error("label {label}: {message}")]
    Label { label: usize, message: String },
    #[error("label {label}: SVM failure: {source}")]
    Svm {
        label: usize,
        #[source]
        source: SvmError,
    },
}

/// Hyperparameter grids for the balancing SVM. Empty `gamma_grid` means the
/// default grid for the feature dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BalanceParams {
    pub c_grid: Vec<f64>,
    pub gamma_grid: Vec<f64>,
    pub folds: usize,
}

impl Default for BalanceParams {
    fn default() -> Self {
        BalanceParams {
            c_grid: vec![0.1, 1.0, 10.0, 100.0],
            gamma_grid: Vec::new(),
            folds: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum SelectionMethod {
    /// Majority side was already no larger than the minority side.
    AlreadyBalanced,
    /// Smallest |f(x)| under an RBF SVM with the given parameters.
    SvmBoundary { c: f64, gamma: f64, cv_accuracy: f64 },
    /// Seeded random draw after the SVM failed to converge.
    RandomFallback { c: f64, gamma: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalancedBinaryDataset {
    pub label_index: usize,
    pub positives: Vec<usize>,
    pub negatives: Vec<usize>,
    pub provenance: SelectionMethod,
}

impl BalancedBinaryDataset {
    /// `(sample index, +1/-1)` pairs, positives first.
    pub fn samples(&self) -> Vec<(usize, i8)> {
        self.positives
            .iter()
            .map(|&i| (i, 1))
            .chain(self.negatives.iter().map(|&i| (i, -1)))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.positives.len() + self.negatives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Rank majority samples by ascending `|f|` (ties by sample index) and keep the
/// first `m`. Returned indices are ascending.
pub fn select_nearest(majority: &[usize], decision: &[f64], m: usize) -> Vec<usize> {
    let mut ranked: Vec<(usize, f64)> = majority.iter().copied().zip(decision.iter().map(|d| d.abs())).collect();
    ranked.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    let mut kept: Vec<usize> = ranked.into_iter().take(m).map(|(i, _)| i).collect();
    kept.sort_unstable();
    kept
}

/// Grid-search and fit the RBF SVM used to rank majority samples. Exposed so
/// callers can inspect the decision values behind a selection.
pub fn fit_balancing_svm(
    binary: &BinaryDataset,
    x: &FeatureMatrix,
    params: &BalanceParams,
    seed: u64,
) -> Result<(GridCvResult, SvmModel), BalanceError> {
    let label = binary.label_index;
    let mut indices: Vec<usize> = binary.positives.iter().chain(&binary.negatives).copied().collect();
    indices.sort_unstable();
    let rows: Vec<Vec<f64>> = indices.iter().map(|&i| x.rows[i].clone()).collect();
    let positives: std::collections::HashSet<usize> = binary.positives.iter().copied().collect();
    let y: Vec<i8> = indices.iter().map(|i| if positives.contains(i) { 1 } else { -1 }).collect();
    let gamma_grid = if params.gamma_grid.is_empty() {
        svm::default_grids(x.n_cols()).1
    } else {
        params.gamma_grid.clone()
    };
    let minority = binary.positives.len().min(binary.negatives.len());
    let folds = params.folds.min(minority).max(2);
    let svm_seed = rng::derive_seed(seed, &format!("balance/label{label}/cv"));
    let best = svm::grid_cv_svm(&rows, &y, &params.c_grid, &gamma_grid, folds, svm_seed)
        .map_err(|source| BalanceError::Svm { label, source })?;
    let model = svm::train_svm(&rows, &y, &SvmParams::new(best.c, KernelSpec::Rbf { gamma: best.gamma }))
        .map_err(|source| BalanceError::Svm { label, source })?;
    Ok((best, model))
}

pub fn boundary_balance(
    binary: &BinaryDataset,
    x: &FeatureMatrix,
    params: &BalanceParams,
    seed: u64,
) -> Result<BalancedBinaryDataset, BalanceError> {
    let label = binary.label_index;
    let pos_is_minority = binary.positives.len() <= binary.negatives.len();
    let (minority, majority) = if pos_is_minority {
        (&binary.positives, &binary.negatives)
    } else {
        (&binary.negatives, &binary.positives)
    };
    if minority.is_empty() {
        return Err(BalanceError::Label { label, message: "minority class is empty".into() });
    }
    let finish = |kept_majority: Vec<usize>, provenance| {
        let (positives, negatives) = if pos_is_minority {
            (minority.clone(), kept_majority)
        } else {
            (kept_majority, minority.clone())
        };
        BalancedBinaryDataset { label_index: label, positives, negatives, provenance }
    };
    if majority.len() == minority.len() {
        return Ok(finish(majority.clone(), SelectionMethod::AlreadyBalanced));
    }

    let (best, model) = fit_balancing_svm(binary, x, params, seed)?;

    if !model.converged {
        log::warn!("label {label}: balancing SVM did not converge, falling back to random under-sampling");
        let mut r = rng::stream(seed, &format!("balance/label{label}/fallback"));
        let mut pool = majority.clone();
        pool.shuffle(&mut r);
        let mut kept: Vec<usize> = pool.into_iter().take(minority.len()).collect();
        kept.sort_unstable();
        return Ok(finish(kept, SelectionMethod::RandomFallback { c: best.c, gamma: best.gamma }));
    }

    let decision: Vec<f64> = majority.iter().map(|&i| model.decision_unchecked(&x.rows[i])).collect();
    let kept = select_nearest(majority, &decision, minority.len());
    Ok(finish(kept, SelectionMethod::SvmBoundary { c: best.c, gamma: best.gamma, cv_accuracy: best.accuracy }))
}

/// Balance every label independently. Output is ordered by label index.
pub fn balance_all(
    binaries: &[BinaryDataset],
    x: &FeatureMatrix,
    params: &BalanceParams,
    seed: u64,
) -> Result<Vec<BalancedBinaryDataset>, BalanceError> {
    let mut out: Vec<BalancedBinaryDataset> = binaries
        .par_iter()
        .map(|b| boundary_balance(b, x, params, seed))
        .collect::<Result<_, _>>()?;
    out.sort_by_key(|b| b.label_index);
    Ok(out)
}

/// JSON manifest of retained indices and provenance per label.
pub fn balance_manifest(sets: &[BalancedBinaryDataset]) -> String {
    serde_json::to_string_pretty(sets).expect("balanced sets serialize")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn matrix(rows: Vec<Vec<f64>>) -> FeatureMatrix {
        let d = rows[0].len();
        FeatureMatrix {
            schema_id: "test".into(),
            column_names: (0..d).map(|i| format!("f{i}")).collect(),
            ids: (0..rows.len()).map(|i| i.to_string()).collect(),
            rows,
        }
    }

    fn blobs(n_pos: usize, n_neg: usize, seed: u64) -> (BinaryDataset, FeatureMatrix) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::new();
        for _ in 0..n_pos {
            rows.push(vec![rng.gen_range(0.5..2.5), rng.gen_range(-1.0..1.0)]);
        }
        for _ in 0..n_neg {
            rows.push(vec![rng.gen_range(-2.5..1.0), rng.gen_range(-1.0..1.0)]);
        }
        let b = BinaryDataset {
            label_index: 0,
            positives: (0..n_pos).collect(),
            negatives: (n_pos..n_pos + n_neg).collect(),
        };
        (b, matrix(rows))
    }

    #[test]
    fn ten_vs_hundred() {
        let (b, x) = blobs(10, 100, 1);
        let out = boundary_balance(&b, &x, &BalanceParams::default(), 3).unwrap();
        assert_eq!(out.positives, b.positives);
        assert_eq!(out.negatives.len(), 10);
        assert!(out.negatives.iter().all(|i| b.negatives.contains(i)));
        assert!(matches!(out.provenance, SelectionMethod::SvmBoundary { .. }));
    }

    #[test]
    fn already_balanced_is_identity() {
        let (b, x) = blobs(12, 12, 2);
        let out = boundary_balance(&b, &x, &BalanceParams::default(), 3).unwrap();
        assert_eq!((out.positives.clone(), out.negatives.clone()), (b.positives.clone(), b.negatives.clone()));
    }

    #[test]
    fn positive_majority_is_swapped() {
        let (b, x) = blobs(40, 8, 5);
        let out = boundary_balance(&b, &x, &BalanceParams::default(), 3).unwrap();
        assert_eq!(out.negatives, b.negatives);
        assert_eq!(out.positives.len(), 8);
    }

    #[test]
    fn empty_minority_is_an_error() {
        let (mut b, x) = blobs(5, 5, 5);
        b.positives.clear();
        assert!(boundary_balance(&b, &x, &BalanceParams::default(), 3).is_err());
    }

    #[test]
    fn select_nearest_ties_by_index() {
        let kept = select_nearest(&[7, 3, 9, 1], &[0.5, -0.5, 0.1, 2.0], 2);
        assert_eq!(kept, vec![3, 9]);
    }

    #[test]
    fn order_independent_and_deterministic() {
        let (b0, x) = blobs(10, 50, 7);
        let b1 = BinaryDataset { label_index: 1, positives: b0.negatives[..15].to_vec(), negatives: {
            let mut v = b0.positives.clone();
            v.extend_from_slice(&b0.negatives[15..]);
            v.sort_unstable();
            v
        } };
        let params = BalanceParams::default();
        let fwd = balance_all(&[b0.clone(), b1.clone()], &x, &params, 11).unwrap();
        let rev = balance_all(&[b1, b0], &x, &params, 11).unwrap();
        assert_eq!(fwd, rev);
        assert_eq!(fwd.len(), 2);
        assert!(fwd.iter().all(|o| o.positives.len() == o.negatives.len()));
    }
}

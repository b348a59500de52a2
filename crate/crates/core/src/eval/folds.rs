use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::rng;

/// Per-sample fold ids in `[0, k)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    pub assignments: Vec<usize>,
}

impl FoldPlan {
    /// `(train, test)` index lists for fold `f`, both ascending.
    pub fn split(&self, f: usize) -> (Vec<usize>, Vec<usize>) {
        let mut train = Vec::new();
        let mut test = Vec::new();
        for (i, &a) in self.assignments.iter().enumerate() {
            if a == f {
                test.push(i);
            } else {
                train.push(i);
            }
        }
        (train, test)
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }
}

/// Stratified shuffled k-fold assignment.
///
/// Samples are grouped by stratum (ascending stratum value), each group is
/// shuffled with the seeded stream, and the concatenation is dealt to folds
/// round-robin. Fold sizes therefore differ by at most one and every stratum
/// is spread as evenly as possible.
pub fn kfold_split(n: usize, k: usize, seed: u64, strata: &[usize]) -> Result<FoldPlan, EvalError> {
    if k == 0 || k > n {
        return Err(EvalError::BadFolds { k, n });
    }
    if !strata.is_empty() && strata.len() != n {
        return Err(EvalError::LengthMismatch { expected: n, actual: strata.len() });
    }
    let mut rng = rng::stream(seed, "kfold");
    let mut order: Vec<usize> = Vec::with_capacity(n);
    if strata.is_empty() {
        let mut all: Vec<usize> = (0..n).collect();
        all.shuffle(&mut rng);
        order = all;
    } else {
        let mut values: Vec<usize> = strata.to_vec();
        values.sort_unstable();
        values.dedup();
        for v in values {
            let mut members: Vec<usize> = (0..n).filter(|&i| strata[i] == v).collect();
            members.shuffle(&mut rng);
            order.extend(members);
        }
    }
    let mut assignments = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        assignments[i] = pos % k;
    }
    Ok(FoldPlan { k, seed, assignments })
}

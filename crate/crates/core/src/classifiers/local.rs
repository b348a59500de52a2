use serde::{Deserialize, Serialize};

use crate::scaling::Standardizer;

/// k-nearest neighbours on standardized inputs, euclidean distance.
/// Distance ties go to the lower training index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub scaler: Standardizer,
    pub rows: Vec<Vec<f64>>,
    pub positive: Vec<bool>,
}

impl KnnModel {
    pub fn fit(x: &[Vec<f64>], y: &[i8], k: usize) -> KnnModel {
        let scaler = Standardizer::fit(x);
        KnnModel {
            k: k.min(x.len()),
            rows: scaler.transform(x),
            scaler,
            positive: y.iter().map(|&v| v > 0).collect(),
        }
    }

    /// Fraction of positive labels among the k nearest training rows.
    pub fn probability(&self, x: &[f64]) -> f64 {
        let z = self.scaler.transform_row(x);
        let mut dist: Vec<(f64, usize)> = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| (r.iter().zip(&z).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(), i))
            .collect();
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if self.k < dist.len() {
            dist.select_nth_unstable_by(self.k - 1, cmp);
            dist.truncate(self.k);
        }
        let hits = dist.iter().filter(|&&(_, i)| self.positive[i]).count();
        hits as f64 / self.k as f64
    }
}

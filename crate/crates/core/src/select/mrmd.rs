use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::SelectError;

/// Distance between standardized feature columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceMetric {
    #[default]
    Euclidean,
    Cosine,
    Tanimoto,
}

impl DistanceMetric {
    /// Zero vectors: distance 0 to another zero vector, 1 to anything else
    /// under cosine and Tanimoto.
    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            DistanceMetric::Euclidean => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt(),
            DistanceMetric::Cosine => {
                let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                let na: f64 = a.iter().map(|x| x * x).sum::<f64>();
                let nb: f64 = b.iter().map(|x| x * x).sum::<f64>();
                match (na == 0.0, nb == 0.0) {
                    (true, true) => 0.0,
                    (true, false) | (false, true) => 1.0,
                    _ => 1.0 - dot / (na.sqrt() * nb.sqrt()),
                }
            }
            DistanceMetric::Tanimoto => {
                let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                let na: f64 = a.iter().map(|x| x * x).sum::<f64>();
                let nb: f64 = b.iter().map(|x| x * x).sum::<f64>();
                let denom = na + nb - dot;
                if denom == 0.0 {
                    0.0
                } else {
                    1.0 - dot / denom
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureScore {
    pub mr: f64,
    pub md: f64,
    pub combined: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRanking {
    pub scores: Vec<FeatureScore>,
    /// Feature indices by descending combined score, ties by ascending index.
    pub order: Vec<usize>,
    pub weights: (f64, f64),
    pub metric: DistanceMetric,
}

fn column(x: &[Vec<f64>], j: usize) -> Vec<f64> {
    x.iter().map(|r| r[j]).collect()
}

/// Absolute Pearson correlation; 0 when either side is constant.
pub fn abs_pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return 0.0;
    }
    (sab / (saa.sqrt() * sbb.sqrt())).abs().min(1.0)
}

/// Population z-scores; a constant column becomes all zeros.
pub fn standardize_column(v: &[f64]) -> Vec<f64> {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let sd = (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n).sqrt();
    if sd <= 1e-12 {
        vec![0.0; v.len()]
    } else {
        v.iter().map(|x| (x - m) / sd).collect()
    }
}

/// Min-max rescale to [0, 1]; all zeros when the values are constant.
pub fn min_max(v: &[f64]) -> Vec<f64> {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi > lo {
        v.iter().map(|x| (x - lo) / (hi - lo)).collect()
    } else {
        vec![0.0; v.len()]
    }
}

fn check_weight(name: &str, w: f64) -> Result<(), SelectError> {
    if w.is_finite() && w > 0.0 && w <= 1.0 {
        Ok(())
    } else {
        Err(SelectError::BadParameter(format!("{name} must lie in (0, 1], got {w}")))
    }
}

/// Max-Relevance-Max-Distance ranking of the columns of `x` against binary
/// targets `y` (any two distinct values).
pub fn mrmd_rank(
    x: &[Vec<f64>],
    y: &[f64],
    w_r: f64,
    w_d: f64,
    metric: DistanceMetric,
) -> Result<FeatureRanking, SelectError> {
    check_weight("w_r", w_r)?;
    check_weight("w_d", w_d)?;
    if x.is_empty() {
        return Err(SelectError::Empty);
    }
    if x.len() != y.len() {
        return Err(SelectError::LengthMismatch { expected: x.len(), actual: y.len() });
    }
    let d = x[0].len();
    if d == 0 || x.iter().any(|r| r.len() != d) {
        return Err(SelectError::BadParameter("feature rows must be non-empty and equally long".into()));
    }
    if x.len() < 2 {
        return Err(SelectError::BadParameter("at least two samples are required".into()));
    }
    let first = y[0];
    if y.iter().all(|&v| v == first) {
        return Err(SelectError::SingleClass);
    }

    let columns: Vec<Vec<f64>> = (0..d).map(|j| column(x, j)).collect();
    let mr: Vec<f64> = columns.par_iter().map(|c| abs_pearson(c, y)).collect();
    let z: Vec<Vec<f64>> = columns.par_iter().map(|c| standardize_column(c)).collect();
    let md: Vec<f64> = (0..d)
        .into_par_iter()
        .map(|i| {
            if d == 1 {
                return 0.0;
            }
            let total: f64 = (0..d).filter(|&j| j != i).map(|j| metric.distance(&z[i], &z[j])).sum();
            total / (d - 1) as f64
        })
        .collect();
    let mr_n = min_max(&mr);
    let md_n = min_max(&md);
    let scores: Vec<FeatureScore> = (0..d)
        .map(|i| FeatureScore {
            mr: mr[i],
            md: md[i],
            combined: w_r * mr_n[i] + w_d * md_n[i],
        })
        .collect();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| scores[b].combined.total_cmp(&scores[a].combined).then(a.cmp(&b)));
    Ok(FeatureRanking { scores, order, weights: (w_r, w_d), metric })
}

pub fn select_top_k(ranking: &FeatureRanking, k: usize) -> Result<Vec<usize>, SelectError> {
    let total = ranking.order.len();
    if k == 0 || k > total {
        return Err(SelectError::KOutOfRange { k, total });
    }
    Ok(ranking.order[..k].to_vec())
}

impl FeatureRanking {
    /// CSV with one row per feature in ranking order.
    pub fn to_csv(&self, names: &[String]) -> Result<String, SelectError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| SelectError::Io(e.to_string());
        w.write_record(["rank", "index", "name", "mr", "md", "combined"]).map_err(err)?;
        for (rank, &i) in self.order.iter().enumerate() {
            let s = &self.scores[i];
            let name = names.get(i).map(String::as_str).unwrap_or("");
            w.write_record([
                (rank + 1).to_string(),
                i.to_string(),
                name.to_string(),
                s.mr.to_string(),
                s.md.to_string(),
                s.combined.to_string(),
            ])
            .map_err(err)?;
        }
        let bytes = w.into_inner().map_err(|e| SelectError::Io(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

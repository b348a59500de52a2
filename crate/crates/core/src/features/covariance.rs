//! Auto covariance (AC), cross covariance (CC) and their concatenation (ACC)
//! over standardized residue scales.

use serde::{Deserialize, Serialize};

use super::properties::{PropertyScale, ScaleId};
use super::{check_canonical, FeatureError, FeatureVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CovarianceMode {
    Ac,
    Cc,
    Acc,
}

/// Which scales feed the auto and cross blocks, and up to which lag.
///
/// Output layout: every auto scale over lags `1..=max_lag`, then every cross
/// pair over lags `1..=max_lag`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CovarianceSpec {
    pub auto: Vec<ScaleId>,
    pub cross: Vec<(ScaleId, ScaleId)>,
    pub max_lag: usize,
}

impl CovarianceSpec {
    /// Spec for one of the three modes over `properties`: AC uses each scale,
    /// CC uses every ordered pair of distinct scales, ACC uses both.
    pub fn for_mode(mode: CovarianceMode, properties: &[ScaleId], max_lag: usize) -> Result<Self, FeatureError> {
        let pairs: Vec<(ScaleId, ScaleId)> = properties
            .iter()
            .flat_map(|&a| properties.iter().filter(move |&&b| b != a).map(move |&b| (a, b)))
            .collect();
        let needs_pair = matches!(mode, CovarianceMode::Cc | CovarianceMode::Acc);
        if properties.is_empty() || (needs_pair && properties.len() < 2) {
            return Err(FeatureError::BadParameter(format!(
                "{mode:?} needs at least {} properties",
                if needs_pair { 2 } else { 1 }
            )));
        }
        let (auto, cross) = match mode {
            CovarianceMode::Ac => (properties.to_vec(), Vec::new()),
            CovarianceMode::Cc => (Vec::new(), pairs),
            CovarianceMode::Acc => (properties.to_vec(), pairs),
        };
        Ok(CovarianceSpec { auto, cross, max_lag })
    }

    pub fn dimension(&self) -> usize {
        (self.auto.len() + self.cross.len()) * self.max_lag
    }

    pub(crate) fn validate(&self) -> Result<(), FeatureError> {
        if self.max_lag == 0 {
            return Err(FeatureError::BadParameter("max_lag must be at least 1".into()));
        }
        if self.auto.is_empty() && self.cross.is_empty() {
            return Err(FeatureError::BadParameter("covariance block has no scales".into()));
        }
        if self.cross.iter().any(|(a, b)| a == b) {
            return Err(FeatureError::BadParameter("cross pair must use two distinct scales".into()));
        }
        Ok(())
    }

    pub(crate) fn column_names(&self, prefix: &str) -> Vec<String> {
        let mut names = Vec::with_capacity(self.dimension());
        for s in &self.auto {
            for lag in 1..=self.max_lag {
                names.push(format!("{prefix}.ac.{}.lag{lag}", s.name()));
            }
        }
        for (a, b) in &self.cross {
            for lag in 1..=self.max_lag {
                names.push(format!("{prefix}.cc.{}>{}.lag{lag}", a.name(), b.name()));
            }
        }
        names
    }
}

fn profile(seq: &[u8], scale: &PropertyScale) -> (Vec<f64>, f64) {
    let p: Vec<f64> = seq.iter().map(|&b| scale.value(b)).collect();
    let mean = p.iter().sum::<f64>() / p.len() as f64;
    (p, mean)
}

/// `(1 / (L - lag)) * sum_i (P1(i) - mean1) * (P2(i + lag) - mean2)`.
fn covariance(a: &(Vec<f64>, f64), b: &(Vec<f64>, f64), lag: usize) -> f64 {
    let n = a.0.len() - lag;
    let sum: f64 = (0..n).map(|i| (a.0[i] - a.1) * (b.0[i + lag] - b.1)).sum();
    sum / n as f64
}

pub(crate) fn covariance_values(seq: &[u8], spec: &CovarianceSpec) -> Vec<f64> {
    let mut out = Vec::with_capacity(spec.dimension());
    for s in &spec.auto {
        let p = profile(seq, &s.scale());
        out.extend((1..=spec.max_lag).map(|lag| covariance(&p, &p, lag)));
    }
    for (a, b) in &spec.cross {
        let pa = profile(seq, &a.scale());
        let pb = profile(seq, &b.scale());
        out.extend((1..=spec.max_lag).map(|lag| covariance(&pa, &pb, lag)));
    }
    out
}

/// Covariance descriptor for the given mode over `properties` and lags
/// `1..=max_lag`.
pub fn extract_autocorr(
    seq: &str,
    mode: CovarianceMode,
    properties: &[ScaleId],
    max_lag: usize,
) -> Result<FeatureVector, FeatureError> {
    let spec = CovarianceSpec::for_mode(mode, properties, max_lag)?;
    extract_covariance(seq, &spec)
}

pub fn extract_covariance(seq: &str, spec: &CovarianceSpec) -> Result<FeatureVector, FeatureError> {
    spec.validate()?;
    let bytes = seq.as_bytes();
    if bytes.len() <= spec.max_lag {
        return Err(FeatureError::TooShort { required: spec.max_lag + 1, actual: bytes.len() });
    }
    check_canonical(bytes)?;
    Ok(FeatureVector::new(
        covariance_values(bytes, spec),
        format!("cov:{}a{}c:lag{}", spec.auto.len(), spec.cross.len(), spec.max_lag),
    ))
}

/// Covariance over arbitrary (already standardized) scales; used where the
/// scales are not among the shipped [`ScaleId`]s.
pub fn auto_covariance_with(seq: &str, scale: &PropertyScale, lag: usize) -> Result<f64, FeatureError> {
    let bytes = seq.as_bytes();
    if bytes.len() <= lag || lag == 0 {
        return Err(FeatureError::TooShort { required: lag + 1, actual: bytes.len() });
    }
    check_canonical(bytes)?;
    let p = profile(bytes, scale);
    Ok(covariance(&p, &p, lag))
}

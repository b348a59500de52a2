//! Pseudo amino acid composition, parallel and series correlation forms.
//!
//! Both forms append correlation factors to the 20 residue frequencies and
//! normalize the whole vector by `1 + w * sum(theta)`, so every vector sums to
//! one. Correlation between two residues is the squared difference of their
//! standardized scale values; the parallel form averages it over all channels
//! while the series form keeps one factor per channel.

use super::classic::aac_values;
use super::properties::PropertyScale;
use super::{check_canonical, FeatureError, FeatureVector};

fn check_params(seq: &[u8], lambda: usize, weight: f64, channels: &[PropertyScale]) -> Result<(), FeatureError> {
    if !(weight > 0.0 && weight <= 1.0) {
        return Err(FeatureError::BadParameter(format!("weight {weight} outside (0, 1]")));
    }
    if lambda > 0 && channels.is_empty() {
        return Err(FeatureError::BadParameter("at least one property channel is required".into()));
    }
    if seq.len() <= lambda {
        return Err(FeatureError::TooShort { required: lambda + 1, actual: seq.len() });
    }
    check_canonical(seq)
}

fn lag_correlation(seq: &[u8], lag: usize, channel: &PropertyScale) -> f64 {
    let pairs = seq.len() - lag;
    let sum: f64 = (0..pairs)
        .map(|i| {
            let d = channel.value(seq[i]) - channel.value(seq[i + lag]);
            d * d
        })
        .sum();
    sum / pairs as f64
}

fn normalize(seq: &[u8], weight: f64, thetas: &[f64]) -> Vec<f64> {
    let freqs = aac_values(seq);
    let denom = 1.0 + weight * thetas.iter().sum::<f64>();
    freqs
        .iter()
        .map(|f| f / denom)
        .chain(thetas.iter().map(|t| weight * t / denom))
        .collect()
}

pub(crate) fn pc_values(seq: &[u8], lambda: usize, weight: f64, channels: &[PropertyScale]) -> Vec<f64> {
    let thetas: Vec<f64> = (1..=lambda)
        .map(|k| {
            channels.iter().map(|c| lag_correlation(seq, k, c)).sum::<f64>() / channels.len() as f64
        })
        .collect();
    normalize(seq, weight, &thetas)
}

pub(crate) fn sc_values(seq: &[u8], lambda: usize, weight: f64, channels: &[PropertyScale]) -> Vec<f64> {
    let thetas: Vec<f64> = (1..=lambda)
        .flat_map(|k| channels.iter().map(move |c| lag_correlation(seq, k, c)))
        .collect();
    normalize(seq, weight, &thetas)
}

/// Parallel-correlation PseAAC: `20 + lambda` values.
pub fn extract_pc_pseaac(
    seq: &str,
    lambda: usize,
    weight: f64,
    channels: &[PropertyScale],
) -> Result<FeatureVector, FeatureError> {
    let bytes = seq.as_bytes();
    check_params(bytes, lambda, weight, channels)?;
    Ok(FeatureVector::new(
        pc_values(bytes, lambda, weight, channels),
        format!("pc-pseaac:l{lambda}:w{weight}"),
    ))
}

/// Series-correlation PseAAC: `20 + lambda * channels` values, lag-major.
pub fn extract_sc_pseaac(
    seq: &str,
    lambda: usize,
    weight: f64,
    channels: &[PropertyScale],
) -> Result<FeatureVector, FeatureError> {
    let bytes = seq.as_bytes();
    check_params(bytes, lambda, weight, channels)?;
    Ok(FeatureVector::new(
        sc_values(bytes, lambda, weight, channels),
        format!("sc-pseaac:l{lambda}:w{weight}"),
    ))
}

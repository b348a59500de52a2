//! Feature ranking and dimension search.

mod mrmd;
mod search;

use thiserror::Error;

pub use mrmd::{
    abs_pearson, min_max, mrmd_rank, select_top_k, standardize_column, DistanceMetric, FeatureRanking, FeatureScore,
};
pub use search::{coarse_grid, fine_grid, two_layer_search, DimensionSearchResult};

#[derive(Debug, Error)]
pub enum SelectError {
    #[error("no samples to rank")]
    Empty,
    #[error("length mismatch: {expected} rows but {actual} targets")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("targets contain a single class")]
    SingleClass,
    #[error("k = {k} outside [1, {total}]")]
    KOutOfRange { k: usize, total: usize },
    #[error("invalid parameter: {0}")]
    BadParameter(String),
    #[error("evaluator failed at k = {k}: {message}")]
    Evaluator { k: usize, message: String },
    #[error("export failed: {0}")]
    Io(String),
}

//! Fold plans and multi-label metrics.

mod folds;
mod metrics;

use thiserror::Error;

pub use folds::{kfold_split, FoldPlan};
pub use metrics::{label_ranks, macro_ap, multilabel_metrics, ranking_ap, MetricReport};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("cannot split {n} samples into {k} folds")]
    BadFolds { k: usize, n: usize },
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("sample {0} has an empty truth set")]
    EmptyTruth(usize),
    #[error("label {label} outside vocabulary of {labels}")]
    LabelOutOfRange { label: usize, labels: usize },
    #[error("empty input")]
    Empty,
    #[error("score rows have inconsistent lengths")]
    Ragged,
    #[error("precision {0} outside [0, 1]")]
    OutOfUnitRange(f64),
}

//! Multi-label protein subcellular localization.
//!
//! The pipeline decomposes a multi-label localization dataset into one binary
//! problem per compartment, balances each binary problem by keeping the
//! majority samples closest to a kernel SVM decision boundary, describes every
//! sequence with a 350-dimensional hybrid feature vector, ranks features with
//! Max-Relevance-Max-Distance and searches the best dimension in two rounds,
//! and finally picks, per label, the base classifier with the highest
//! cross-validated precision.
//!
//! Module map:
//!
//! - [`dataset`]: FASTA / label ingestion, UniProt pages, vocabulary, redundancy
//!   filtering and binary relevance.
//! - [`features`]: AAC, CTD, the 188D classical vector, PseAAC variants,
//!   auto/cross covariance and the 350D hybrid.
//! - [`svm`]: kernels and an SMO dual solver.
//! - [`balance`]: boundary under-sampling.
//! - [`select`]: MRMD ranking and the two-layer dimension search.
//! - [`classifiers`] and [`ensemble`]: the base classifier zoo and the per-label
//!   champion ensemble.
//! - [`eval`]: fold plans and multi-label metrics.
//! - [`config`], [`bundle`], [`pipeline`]: orchestration and persistence.

pub mod balance;
pub mod bundle;
pub mod classifiers;
pub mod config;
pub mod dataset;
pub mod ensemble;
pub mod error;
pub mod eval;
pub mod features;
pub mod pipeline;
pub mod rng;
pub mod scaling;
pub mod select;
pub mod svm;
pub mod synthetic;

pub use error::{Error, Result};

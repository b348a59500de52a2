use thiserror::Error;

use crate::balance::BalanceError;
use crate::bundle::BundleError;
use crate::classifiers::ClassifierError;
use crate::config::ConfigError;
use crate::dataset::DatasetError;
use crate::ensemble::EnsembleError;
use crate::eval::EvalError;
use crate::features::FeatureError;
use crate::select::SelectError;
use crate::svm::SvmError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Svm(#[from] SvmError),
    #[error(transparent)]
    Balance(#[from] BalanceError),
    #[error(transparent)]
    Select(#[from] SelectError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Bundle(#[from] BundleError),
    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Format(String),
}

impl Error {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Whether the error comes from configuration validation rather than a
    /// runtime failure.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Config(_) => true,
            Error::Stage { source, .. } => source.is_validation(),
            _ => false,
        }
    }
}

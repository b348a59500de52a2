//! TOML pipeline configuration.
//!
//! Relative paths resolve against the directory holding the config file. The
//! seed has no default.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::balance::BalanceParams;
use crate::classifiers::{default_zoo, BaseClassifierSpec, ClassifierKind};
use crate::dataset::uniprot::DEFAULT_ENDPOINT;
use crate::features::FeatureSchema;
use crate::select::DistanceMetric;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {message}")]
    Read { path: String, message: String },
    #[error("invalid config: {0}")]
    Parse(String),
    #[error("referenced file does not exist: {0}")]
    MissingFile(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniprotConfig {
    pub query: String,
    #[serde(default = "default_page_limit")]
    pub page_limit: usize,
    #[serde(default = "default_endpoint")]
    pub endpoint: String,
}

fn default_page_limit() -> usize {
    20
}

fn default_endpoint() -> String {
    DEFAULT_ENDPOINT.to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// FASTA with one record per protein; requires `labels`.
    pub fasta: Option<PathBuf>,
    /// Tab-separated `accession<TAB>loc1,loc2,...`.
    pub labels: Option<PathBuf>,
    pub uniprot: Option<UniprotConfig>,
    pub top_n: usize,
    pub identity_threshold: f64,
    /// Fraction of samples held out of every training stage for evaluation.
    pub holdout_fraction: f64,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            fasta: None,
            labels: None,
            uniprot: None,
            top_n: 10,
            identity_threshold: 0.7,
            holdout_fraction: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectConfig {
    pub w_r: f64,
    pub w_d: f64,
    pub metric: DistanceMetric,
    pub coarse_step: usize,
    /// Search worker threads; 0 = one per core.
    pub workers: usize,
}

impl Default for SelectConfig {
    fn default() -> Self {
        SelectConfig { w_r: 1.0, w_d: 1.0, metric: DistanceMetric::Euclidean, coarse_step: 10, workers: 0 }
    }
}

/// Classifiers scored at every candidate dimension during the search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    pub folds: usize,
    pub classifiers: Vec<BaseClassifierSpec>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            folds: 10,
            classifiers: vec![
                BaseClassifierSpec::new(ClassifierKind::NaiveBayes),
                BaseClassifierSpec::new(ClassifierKind::KNearestNeighbors),
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleConfig {
    pub folds: usize,
    pub decision_offset: f64,
    pub classifiers: Vec<BaseClassifierSpec>,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig { folds: 10, decision_offset: 0.0, classifiers: default_zoo() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub features: FeatureSchema,
    #[serde(default)]
    pub balance: BalanceParams,
    #[serde(default)]
    pub select: SelectConfig,
    #[serde(default)]
    pub search: SearchConfig,
    #[serde(default)]
    pub ensemble: EnsembleConfig,
}

fn invalid(message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(message.into())
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    /// Read, resolve relative paths and validate.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        cfg.resolve_paths(base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        for p in [&mut self.data.fasta, &mut self.data.labels].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let d = &self.data;
        match (&d.fasta, &d.labels, &d.uniprot) {
            (Some(_), Some(_), None) | (None, None, Some(_)) => {}
            (Some(_), None, _) => return Err(invalid("data.fasta requires data.labels")),
            (None, Some(_), _) => return Err(invalid("data.labels requires data.fasta")),
            (Some(_), Some(_), Some(_)) => return Err(invalid("set either data.fasta/labels or data.uniprot, not both")),
            (None, None, None) => return Err(invalid("no data source: set data.fasta and data.labels, or data.uniprot")),
        }
        for p in [&d.fasta, &d.labels].into_iter().flatten() {
            if !p.is_file() {
                return Err(ConfigError::MissingFile(p.display().to_string()));
            }
        }
        if let Some(u) = &d.uniprot {
            if u.query.trim().is_empty() || u.page_limit == 0 {
                return Err(invalid("data.uniprot needs a query and page_limit >= 1"));
            }
        }
        if d.top_n == 0 {
            return Err(invalid("data.top_n must be at least 1"));
        }
        if !(d.identity_threshold > 0.0 && d.identity_threshold <= 1.0) {
            return Err(invalid(format!("data.identity_threshold must lie in (0, 1], got {}", d.identity_threshold)));
        }
        if !(0.0..1.0).contains(&d.holdout_fraction) {
            return Err(invalid(format!("data.holdout_fraction must lie in [0, 1), got {}", d.holdout_fraction)));
        }
        self.features.validate().map_err(|e| invalid(format!("features: {e}")))?;
        let b = &self.balance;
        if b.folds < 2 || b.c_grid.is_empty() || b.c_grid.iter().chain(&b.gamma_grid).any(|v| !(v.is_finite() && *v > 0.0))
        {
            return Err(invalid("balance: folds >= 2 and positive, non-empty grids required"));
        }
        let s = &self.select;
        for (name, w) in [("w_r", s.w_r), ("w_d", s.w_d)] {
            if !(w > 0.0 && w <= 1.0) {
                return Err(invalid(format!("select.{name} must lie in (0, 1], got {w}")));
            }
        }
        if s.coarse_step == 0 {
            return Err(invalid("select.coarse_step must be at least 1"));
        }
        for (section, folds, specs) in [
            ("search", self.search.folds, &self.search.classifiers),
            ("ensemble", self.ensemble.folds, &self.ensemble.classifiers),
        ] {
            if folds < 2 {
                return Err(invalid(format!("{section}.folds must be at least 2")));
            }
            if specs.is_empty() {
                return Err(invalid(format!("{section}.classifiers must not be empty")));
            }
            for spec in specs {
                spec.expand().map_err(|e| invalid(format!("{section}: {e}")))?;
            }
        }
        if !self.ensemble.decision_offset.is_finite() {
            return Err(invalid("ensemble.decision_offset must be finite"));
        }
        Ok(())
    }
}

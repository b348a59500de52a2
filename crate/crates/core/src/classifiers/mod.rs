//! Base classifier zoo used by the per-label ensemble.
//!
//! Every classifier trains on rows with labels in {+1, -1} and exposes a
//! real-valued score. Probabilistic kinds score in [0, 1] with threshold 0.5;
//! margin kinds score on the real line with threshold 0.

mod linear;
mod local;
mod tree;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::svm::{self, KernelSpec, SvmError, SvmModel, SvmParams};

pub use linear::{GaussianNb, LinearModel};
pub use local::KnnModel;
pub use tree::{Boosted, Forest, GradientBoosted, Node, Tree, TreeOptions};

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("{kind}: invalid parameter: {message}")]
    BadParameter { kind: ClassifierKind, message: String },
    #[error("invalid grid for {kind}: {message}")]
    Grid { kind: ClassifierKind, message: String },
    #[error("no training samples")]
    Empty,
    #[error("training labels must contain both +1 and -1")]
    SingleClass,
    #[error("labels must be +1 or -1")]
    BadLabel,
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("input has {actual} features, model expects {expected}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error(transparent)]
    Svm(#[from] SvmError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClassifierKind {
    NaiveBayes,
    LogisticRegression,
    KNearestNeighbors,
    DecisionTree,
    RandomForest,
    AdaptiveBoosting,
    LinearSvm,
    RbfSvm,
    ExtraTrees,
    Bagging,
    GradientBoosting,
    SgdLinear,
}

impl ClassifierKind {
    pub const CORE: [ClassifierKind; 8] = [
        ClassifierKind::NaiveBayes,
        ClassifierKind::LogisticRegression,
        ClassifierKind::KNearestNeighbors,
        ClassifierKind::DecisionTree,
        ClassifierKind::RandomForest,
        ClassifierKind::AdaptiveBoosting,
        ClassifierKind::LinearSvm,
        ClassifierKind::RbfSvm,
    ];
    pub const OPTIONAL: [ClassifierKind; 4] = [
        ClassifierKind::ExtraTrees,
        ClassifierKind::Bagging,
        ClassifierKind::GradientBoosting,
        ClassifierKind::SgdLinear,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ClassifierKind::NaiveBayes => "naive-bayes",
            ClassifierKind::LogisticRegression => "logistic-regression",
            ClassifierKind::KNearestNeighbors => "k-nearest-neighbors",
            ClassifierKind::DecisionTree => "decision-tree",
            ClassifierKind::RandomForest => "random-forest",
            ClassifierKind::AdaptiveBoosting => "adaptive-boosting",
            ClassifierKind::LinearSvm => "linear-svm",
            ClassifierKind::RbfSvm => "rbf-svm",
            ClassifierKind::ExtraTrees => "extra-trees",
            ClassifierKind::Bagging => "bagging",
            ClassifierKind::GradientBoosting => "gradient-boosting",
            ClassifierKind::SgdLinear => "sgd-linear",
        }
    }

    /// Scores are probabilities of the positive class.
    pub fn is_probabilistic(self) -> bool {
        !matches!(
            self,
            ClassifierKind::AdaptiveBoosting | ClassifierKind::LinearSvm | ClassifierKind::RbfSvm | ClassifierKind::SgdLinear
        )
    }

    pub fn threshold(self) -> f64 {
        if self.is_probabilistic() {
            0.5
        } else {
            0.0
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NaiveBayesParams {
    /// Added to every variance, as a fraction of the largest feature variance.
    pub var_smoothing: f64,
}

impl Default for NaiveBayesParams {
    fn default() -> Self {
        NaiveBayesParams { var_smoothing: 1e-9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogisticParams {
    /// Inverse L2 strength.
    pub c: f64,
    pub max_iter: usize,
}

impl Default for LogisticParams {
    fn default() -> Self {
        LogisticParams { c: 1.0, max_iter: 300 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KnnParams {
    pub k: usize,
}

impl Default for KnnParams {
    fn default() -> Self {
        KnnParams { k: 5 }
    }
}

/// `max_depth = 0` means unlimited.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams { max_depth: 0, min_samples_split: 2, min_samples_leaf: 1 }
    }
}

/// Random forest and extra trees. Each split considers `sqrt(d)` features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams { n_trees: 100, max_depth: 0, min_samples_leaf: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdaBoostParams {
    pub n_estimators: usize,
    pub learning_rate: f64,
}

impl Default for AdaBoostParams {
    fn default() -> Self {
        AdaBoostParams { n_estimators: 50, learning_rate: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinearSvmParams {
    pub c: f64,
}

impl Default for LinearSvmParams {
    fn default() -> Self {
        LinearSvmParams { c: 1.0 }
    }
}

/// `gamma = 0` means `1 / d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RbfSvmParams {
    pub c: f64,
    pub gamma: f64,
}

impl Default for RbfSvmParams {
    fn default() -> Self {
        RbfSvmParams { c: 1.0, gamma: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaggingParams {
    pub n_estimators: usize,
    pub max_depth: usize,
}

impl Default for BaggingParams {
    fn default() -> Self {
        BaggingParams { n_estimators: 10, max_depth: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GradientBoostingParams {
    pub n_estimators: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
}

impl Default for GradientBoostingParams {
    fn default() -> Self {
        GradientBoostingParams { n_estimators: 100, learning_rate: 0.1, max_depth: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SgdParams {
    /// L2 strength.
    pub alpha: f64,
    pub epochs: usize,
}

impl Default for SgdParams {
    fn default() -> Self {
        SgdParams { alpha: 1e-4, epochs: 20 }
    }
}

/// One grid point: a kind together with its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ClassifierParams {
    NaiveBayes(NaiveBayesParams),
    LogisticRegression(LogisticParams),
    KNearestNeighbors(KnnParams),
    DecisionTree(TreeParams),
    RandomForest(ForestParams),
    AdaptiveBoosting(AdaBoostParams),
    LinearSvm(LinearSvmParams),
    RbfSvm(RbfSvmParams),
    ExtraTrees(ForestParams),
    Bagging(BaggingParams),
    GradientBoosting(GradientBoostingParams),
    SgdLinear(SgdParams),
}

fn positive(kind: ClassifierKind, name: &str, v: f64) -> Result<(), ClassifierError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(ClassifierError::BadParameter { kind, message: format!("{name} must be positive, got {v}") })
    }
}

fn at_least(kind: ClassifierKind, name: &str, v: usize, min: usize) -> Result<(), ClassifierError> {
    if v >= min {
        Ok(())
    } else {
        Err(ClassifierError::BadParameter { kind, message: format!("{name} must be at least {min}, got {v}") })
    }
}

impl ClassifierParams {
    pub fn kind(&self) -> ClassifierKind {
        match self {
            ClassifierParams::NaiveBayes(_) => ClassifierKind::NaiveBayes,
            ClassifierParams::LogisticRegression(_) => ClassifierKind::LogisticRegression,
            ClassifierParams::KNearestNeighbors(_) => ClassifierKind::KNearestNeighbors,
            ClassifierParams::DecisionTree(_) => ClassifierKind::DecisionTree,
            ClassifierParams::RandomForest(_) => ClassifierKind::RandomForest,
            ClassifierParams::AdaptiveBoosting(_) => ClassifierKind::AdaptiveBoosting,
            ClassifierParams::LinearSvm(_) => ClassifierKind::LinearSvm,
            ClassifierParams::RbfSvm(_) => ClassifierKind::RbfSvm,
            ClassifierParams::ExtraTrees(_) => ClassifierKind::ExtraTrees,
            ClassifierParams::Bagging(_) => ClassifierKind::Bagging,
            ClassifierParams::GradientBoosting(_) => ClassifierKind::GradientBoosting,
            ClassifierParams::SgdLinear(_) => ClassifierKind::SgdLinear,
        }
    }

    pub fn default_for(kind: ClassifierKind) -> Self {
        match kind {
            ClassifierKind::NaiveBayes => ClassifierParams::NaiveBayes(Default::default()),
            ClassifierKind::LogisticRegression => ClassifierParams::LogisticRegression(Default::default()),
            ClassifierKind::KNearestNeighbors => ClassifierParams::KNearestNeighbors(Default::default()),
            ClassifierKind::DecisionTree => ClassifierParams::DecisionTree(Default::default()),
            ClassifierKind::RandomForest => ClassifierParams::RandomForest(Default::default()),
            ClassifierKind::AdaptiveBoosting => ClassifierParams::AdaptiveBoosting(Default::default()),
            ClassifierKind::LinearSvm => ClassifierParams::LinearSvm(Default::default()),
            ClassifierKind::RbfSvm => ClassifierParams::RbfSvm(Default::default()),
            ClassifierKind::ExtraTrees => ClassifierParams::ExtraTrees(Default::default()),
            ClassifierKind::Bagging => ClassifierParams::Bagging(Default::default()),
            ClassifierKind::GradientBoosting => ClassifierParams::GradientBoosting(Default::default()),
            ClassifierKind::SgdLinear => ClassifierParams::SgdLinear(Default::default()),
        }
    }

    pub fn validate(&self) -> Result<(), ClassifierError> {
        let kind = self.kind();
        match self {
            ClassifierParams::NaiveBayes(p) => {
                if !(p.var_smoothing.is_finite() && p.var_smoothing >= 0.0) {
                    return Err(ClassifierError::BadParameter {
                        kind,
                        message: format!("var_smoothing must be non-negative, got {}", p.var_smoothing),
                    });
                }
                Ok(())
            }
            ClassifierParams::LogisticRegression(p) => {
                positive(kind, "c", p.c)?;
                at_least(kind, "max_iter", p.max_iter, 1)
            }
            ClassifierParams::KNearestNeighbors(p) => at_least(kind, "k", p.k, 1),
            ClassifierParams::DecisionTree(p) => {
                at_least(kind, "min_samples_split", p.min_samples_split, 2)?;
                at_least(kind, "min_samples_leaf", p.min_samples_leaf, 1)
            }
            ClassifierParams::RandomForest(p) | ClassifierParams::ExtraTrees(p) => {
                at_least(kind, "n_trees", p.n_trees, 1)?;
                at_least(kind, "min_samples_leaf", p.min_samples_leaf, 1)
            }
            ClassifierParams::AdaptiveBoosting(p) => {
                at_least(kind, "n_estimators", p.n_estimators, 1)?;
                positive(kind, "learning_rate", p.learning_rate)
            }
            ClassifierParams::LinearSvm(p) => positive(kind, "c", p.c),
            ClassifierParams::RbfSvm(p) => {
                positive(kind, "c", p.c)?;
                if !(p.gamma.is_finite() && p.gamma >= 0.0) {
                    return Err(ClassifierError::BadParameter {
                        kind,
                        message: format!("gamma must be non-negative, got {}", p.gamma),
                    });
                }
                Ok(())
            }
            ClassifierParams::Bagging(p) => at_least(kind, "n_estimators", p.n_estimators, 1),
            ClassifierParams::GradientBoosting(p) => {
                at_least(kind, "n_estimators", p.n_estimators, 1)?;
                at_least(kind, "max_depth", p.max_depth, 1)?;
                positive(kind, "learning_rate", p.learning_rate)
            }
            ClassifierParams::SgdLinear(p) => {
                positive(kind, "alpha", p.alpha)?;
                at_least(kind, "epochs", p.epochs, 1)
            }
        }
    }

    /// Compact `key=value` rendering of the hyperparameters.
    pub fn describe(&self) -> String {
        let value = serde_json::to_value(self).expect("params serialize");
        let obj = value.as_object().expect("params serialize to an object");
        obj.iter()
            .filter(|(k, _)| k.as_str() != "kind")
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(";")
    }
}

/// A classifier kind with a hyperparameter grid: parameter name to the list
/// of values to try. Unlisted parameters keep their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseClassifierSpec {
    pub kind: ClassifierKind,
    #[serde(default)]
    pub grid: BTreeMap<String, Vec<serde_json::Value>>,
}

impl BaseClassifierSpec {
    pub fn new(kind: ClassifierKind) -> Self {
        BaseClassifierSpec { kind, grid: BTreeMap::new() }
    }

    pub fn with(mut self, name: &str, values: impl IntoIterator<Item = serde_json::Value>) -> Self {
        self.grid.insert(name.to_string(), values.into_iter().collect());
        self
    }

    /// Cartesian product of the grid, keys in lexicographic order with the
    /// last key varying fastest. Every point is validated.
    pub fn expand(&self) -> Result<Vec<ClassifierParams>, ClassifierError> {
        let kind = self.kind;
        if let Some((name, _)) = self.grid.iter().find(|(_, v)| v.is_empty()) {
            return Err(ClassifierError::Grid { kind, message: format!("parameter `{name}` has no values") });
        }
        let keys: Vec<&String> = self.grid.keys().collect();
        let mut points: Vec<serde_json::Map<String, serde_json::Value>> = vec![serde_json::Map::new()];
        for key in &keys {
            let mut next = Vec::new();
            for p in &points {
                for v in &self.grid[*key] {
                    let mut q = p.clone();
                    q.insert((*key).clone(), v.clone());
                    next.push(q);
                }
            }
            points = next;
        }
        points
            .into_iter()
            .map(|mut obj| {
                obj.insert("kind".into(), serde_json::Value::String(kind.name().into()));
                let params: ClassifierParams = serde_json::from_value(serde_json::Value::Object(obj))
                    .map_err(|e| ClassifierError::Grid { kind, message: e.to_string() })?;
                params.validate()?;
                Ok(params)
            })
            .collect()
    }
}

/// Default zoo: the eight core kinds with small grids.
pub fn default_zoo() -> Vec<BaseClassifierSpec> {
    use serde_json::json;
    use ClassifierKind::*;
    vec![
        BaseClassifierSpec::new(NaiveBayes),
        BaseClassifierSpec::new(LogisticRegression).with("c", [json!(0.1), json!(1.0), json!(10.0)]),
        BaseClassifierSpec::new(KNearestNeighbors).with("k", [json!(1), json!(3), json!(5), json!(7)]),
        BaseClassifierSpec::new(DecisionTree).with("max_depth", [json!(3), json!(5), json!(10), json!(0)]),
        BaseClassifierSpec::new(RandomForest).with("n_trees", [json!(100)]),
        BaseClassifierSpec::new(AdaptiveBoosting).with("n_estimators", [json!(50)]),
        BaseClassifierSpec::new(LinearSvm).with("c", [json!(0.1), json!(1.0), json!(10.0)]),
        BaseClassifierSpec::new(RbfSvm).with("c", [json!(1.0), json!(10.0)]),
    ]
}

/// Default grids for the four optional kinds.
pub fn optional_zoo() -> Vec<BaseClassifierSpec> {
    use serde_json::json;
    use ClassifierKind::*;
    vec![
        BaseClassifierSpec::new(ExtraTrees).with("n_trees", [json!(100)]),
        BaseClassifierSpec::new(Bagging).with("n_estimators", [json!(10)]),
        BaseClassifierSpec::new(GradientBoosting).with("n_estimators", [json!(100)]),
        BaseClassifierSpec::new(SgdLinear).with("alpha", [json!(1e-4), json!(1e-2)]),
    ]
}

/// Model payload per kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "model", rename_all = "kebab-case")]
pub enum TrainedModel {
    NaiveBayes(GaussianNb),
    LogisticRegression(LinearModel),
    KNearestNeighbors(KnnModel),
    DecisionTree(Tree),
    RandomForest(Forest),
    AdaptiveBoosting(Boosted),
    LinearSvm(LinearModel),
    RbfSvm(SvmModel),
    ExtraTrees(Forest),
    Bagging(Forest),
    GradientBoosting(GradientBoosted),
    SgdLinear(LinearModel),
}

/// A trained classifier with its hyperparameters and input width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedClassifier {
    pub params: ClassifierParams,
    pub dim: usize,
    pub model: TrainedModel,
}

impl FittedClassifier {
    pub fn kind(&self) -> ClassifierKind {
        self.params.kind()
    }

    pub fn score(&self, x: &[f64]) -> Result<f64, ClassifierError> {
        if x.len() != self.dim {
            return Err(ClassifierError::DimensionMismatch { expected: self.dim, actual: x.len() });
        }
        Ok(self.score_unchecked(x))
    }

    pub(crate) fn score_unchecked(&self, x: &[f64]) -> f64 {
        match &self.model {
            TrainedModel::NaiveBayes(m) => m.probability(x),
            TrainedModel::LogisticRegression(m) => linear::sigmoid(m.decision(x)),
            TrainedModel::KNearestNeighbors(m) => m.probability(x),
            TrainedModel::DecisionTree(m) => m.predict_value(x),
            TrainedModel::RandomForest(m) | TrainedModel::ExtraTrees(m) | TrainedModel::Bagging(m) => m.probability(x),
            TrainedModel::AdaptiveBoosting(m) => m.decision(x),
            TrainedModel::LinearSvm(m) | TrainedModel::SgdLinear(m) => m.decision(x),
            TrainedModel::RbfSvm(m) => m.decision_unchecked(x),
            TrainedModel::GradientBoosting(m) => m.probability(x),
        }
    }

    /// Score minus the kind's threshold; positive means class +1.
    pub fn margin(&self, x: &[f64]) -> Result<f64, ClassifierError> {
        Ok(self.score(x)? - self.kind().threshold())
    }

    pub(crate) fn margin_unchecked(&self, x: &[f64]) -> f64 {
        self.score_unchecked(x) - self.kind().threshold()
    }

    pub fn predict(&self, x: &[f64]) -> Result<i8, ClassifierError> {
        Ok(if self.margin(x)? > 0.0 { 1 } else { -1 })
    }
}

fn check_training(x: &[Vec<f64>], y: &[i8]) -> Result<usize, ClassifierError> {
    if x.is_empty() {
        return Err(ClassifierError::Empty);
    }
    if x.len() != y.len() {
        return Err(ClassifierError::LengthMismatch { expected: x.len(), actual: y.len() });
    }
    let d = x[0].len();
    if let Some(r) = x.iter().find(|r| r.len() != d) {
        return Err(ClassifierError::DimensionMismatch { expected: d, actual: r.len() });
    }
    if y.iter().any(|&v| v != 1 && v != -1) {
        return Err(ClassifierError::BadLabel);
    }
    if !(y.contains(&1) && y.contains(&-1)) {
        return Err(ClassifierError::SingleClass);
    }
    Ok(d)
}

/// Train one classifier. Deterministic for a fixed seed.
pub fn train_classifier(
    x: &[Vec<f64>],
    y: &[i8],
    params: &ClassifierParams,
    seed: u64,
) -> Result<FittedClassifier, ClassifierError> {
    params.validate()?;
    let dim = check_training(x, y)?;
    let model = match params {
        ClassifierParams::NaiveBayes(p) => TrainedModel::NaiveBayes(GaussianNb::fit(x, y, p.var_smoothing)),
        ClassifierParams::LogisticRegression(p) => {
            TrainedModel::LogisticRegression(LinearModel::fit_logistic(x, y, p.c, p.max_iter))
        }
        ClassifierParams::KNearestNeighbors(p) => TrainedModel::KNearestNeighbors(KnnModel::fit(x, y, p.k)),
        ClassifierParams::DecisionTree(p) => {
            let opts = TreeOptions {
                max_depth: p.max_depth,
                min_samples_split: p.min_samples_split,
                min_samples_leaf: p.min_samples_leaf,
                ..TreeOptions::default()
            };
            TrainedModel::DecisionTree(Tree::fit_classifier(x, y, &opts, seed))
        }
        ClassifierParams::RandomForest(p) => TrainedModel::RandomForest(Forest::random_forest(x, y, p, seed)),
        ClassifierParams::ExtraTrees(p) => TrainedModel::ExtraTrees(Forest::extra_trees(x, y, p, seed)),
        ClassifierParams::Bagging(p) => TrainedModel::Bagging(Forest::bagging(x, y, p, seed)),
        ClassifierParams::AdaptiveBoosting(p) => {
            TrainedModel::AdaptiveBoosting(Boosted::fit(x, y, p.n_estimators, p.learning_rate))
        }
        ClassifierParams::GradientBoosting(p) => TrainedModel::GradientBoosting(GradientBoosted::fit(x, y, p)),
        ClassifierParams::LinearSvm(p) => {
            let svm = svm::train_svm(x, y, &SvmParams::new(p.c, KernelSpec::Linear))?;
            TrainedModel::LinearSvm(LinearModel::from_linear_svm(&svm))
        }
        ClassifierParams::RbfSvm(p) => {
            let gamma = if p.gamma > 0.0 { p.gamma } else { 1.0 / dim.max(1) as f64 };
            TrainedModel::RbfSvm(svm::train_svm(x, y, &SvmParams::new(p.c, KernelSpec::Rbf { gamma }))?)
        }
        ClassifierParams::SgdLinear(p) => TrainedModel::SgdLinear(LinearModel::fit_sgd(x, y, p.alpha, p.epochs, seed)),
    };
    Ok(FittedClassifier { params: params.clone(), dim, model })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    // Box-Muller
    fn normal<R: Rng>(rng: &mut R) -> f64 {
        let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
        let u2: f64 = rng.gen();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    fn blobs(n: usize, sep: f64, seed: u64) -> (Vec<Vec<f64>>, Vec<i8>) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            let label: i8 = if i % 2 == 0 { 1 } else { -1 };
            let c = sep * f64::from(label) / 2.0;
            x.push(vec![c + normal(&mut rng), c + normal(&mut rng), rng.gen_range(-1.0..1.0)]);
            y.push(label);
        }
        (x, y)
    }

    fn accuracy(m: &FittedClassifier, x: &[Vec<f64>], y: &[i8]) -> f64 {
        x.iter().zip(y).filter(|(r, &l)| m.predict(r).unwrap() == l).count() as f64 / x.len() as f64
    }

    fn all_kinds() -> Vec<ClassifierKind> {
        ClassifierKind::CORE.iter().chain(&ClassifierKind::OPTIONAL).copied().collect()
    }

    #[test]
    fn every_kind_learns_separated_blobs() {
        let (x, y) = blobs(200, 5.0, 1);
        let (tx, ty) = blobs(200, 5.0, 2);
        for kind in all_kinds() {
            let m = train_classifier(&x, &y, &ClassifierParams::default_for(kind), 7).unwrap();
            let acc = accuracy(&m, &tx, &ty);
            assert!(acc > 0.95, "{kind}: held-out accuracy {acc}");
        }
    }

    #[test]
    fn one_nearest_neighbor_memorizes() {
        let (x, y) = blobs(60, 0.5, 3);
        let m = train_classifier(&x, &y, &ClassifierParams::KNearestNeighbors(KnnParams { k: 1 }), 0).unwrap();
        assert_eq!(accuracy(&m, &x, &y), 1.0);
    }

    #[test]
    fn stump_recovers_threshold() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let x: Vec<Vec<f64>> = (0..100).map(|_| vec![rng.gen_range(0.0..10.0)]).collect();
        let y: Vec<i8> = x.iter().map(|r| if r[0] > 3.7 { 1 } else { -1 }).collect();
        let params = ClassifierParams::DecisionTree(TreeParams { max_depth: 1, ..TreeParams::default() });
        let m = train_classifier(&x, &y, &params, 0).unwrap();
        assert_eq!(accuracy(&m, &x, &y), 1.0);
        let TrainedModel::DecisionTree(tree) = &m.model else { panic!("wrong payload") };
        let Node::Split { feature, threshold, .. } = tree.nodes[0] else { panic!("root is a leaf") };
        assert_eq!(feature, 0);
        let below = x.iter().map(|r| r[0]).filter(|&v| v <= 3.7).fold(f64::NEG_INFINITY, f64::max);
        let above = x.iter().map(|r| r[0]).filter(|&v| v > 3.7).fold(f64::INFINITY, f64::min);
        assert!(below <= threshold && threshold < above);
    }

    #[test]
    fn deterministic_and_serializable() {
        let (x, y) = blobs(80, 2.0, 5);
        for kind in all_kinds() {
            let p = ClassifierParams::default_for(kind);
            let a = train_classifier(&x, &y, &p, 11).unwrap();
            let b = train_classifier(&x, &y, &p, 11).unwrap();
            assert_eq!(a, b, "{kind}");
            let text = serde_json::to_string(&a).unwrap();
            let back: FittedClassifier = serde_json::from_str(&text).unwrap();
            assert_eq!(serde_json::to_string(&back).unwrap(), text, "{kind}");
            for r in &x {
                assert_eq!(back.score(r).unwrap().to_bits(), a.score(r).unwrap().to_bits(), "{kind}");
            }
        }
    }

    #[test]
    fn probabilistic_scores_are_probabilities() {
        let (x, y) = blobs(60, 1.0, 6);
        for kind in all_kinds().into_iter().filter(|k| k.is_probabilistic()) {
            let m = train_classifier(&x, &y, &ClassifierParams::default_for(kind), 1).unwrap();
            assert!(x.iter().all(|r| (0.0..=1.0).contains(&m.score(r).unwrap())), "{kind}");
        }
    }

    #[test]
    fn bad_inputs() {
        let (x, y) = blobs(10, 1.0, 7);
        let p = ClassifierParams::default_for(ClassifierKind::NaiveBayes);
        assert!(matches!(train_classifier(&[], &[], &p, 0), Err(ClassifierError::Empty)));
        assert!(matches!(train_classifier(&x, &[1; 10], &p, 0), Err(ClassifierError::SingleClass)));
        assert!(matches!(train_classifier(&x, &y[..3], &p, 0), Err(ClassifierError::LengthMismatch { .. })));
        let bad = ClassifierParams::KNearestNeighbors(KnnParams { k: 0 });
        assert!(matches!(train_classifier(&x, &y, &bad, 0), Err(ClassifierError::BadParameter { .. })));
        let m = train_classifier(&x, &y, &p, 0).unwrap();
        assert!(m.score(&[1.0]).is_err());
    }

    #[test]
    fn grid_expansion() {
        let spec = BaseClassifierSpec::new(ClassifierKind::GradientBoosting)
            .with("n_estimators", [serde_json::json!(10), serde_json::json!(20)])
            .with("learning_rate", [serde_json::json!(0.1), serde_json::json!(1)]);
        let pts = spec.expand().unwrap();
        assert_eq!(pts.len(), 4);
        let ClassifierParams::GradientBoosting(first) = &pts[0] else { panic!() };
        assert_eq!((first.learning_rate, first.n_estimators, first.max_depth), (0.1, 10, 3));
        let ClassifierParams::GradientBoosting(second) = &pts[1] else { panic!() };
        assert_eq!((second.learning_rate, second.n_estimators), (0.1, 20));

        let unknown = BaseClassifierSpec::new(ClassifierKind::KNearestNeighbors).with("depth", [serde_json::json!(1)]);
        assert!(unknown.expand().is_err());
        let empty = BaseClassifierSpec::new(ClassifierKind::KNearestNeighbors).with("k", []);
        assert!(empty.expand().is_err());
        let illegal = BaseClassifierSpec::new(ClassifierKind::LinearSvm).with("c", [serde_json::json!(-1.0)]);
        assert!(illegal.expand().is_err());
        assert_eq!(BaseClassifierSpec::new(ClassifierKind::NaiveBayes).expand().unwrap().len(), 1);
        for spec in default_zoo().iter().chain(&optional_zoo()) {
            assert!(!spec.expand().unwrap().is_empty());
        }
    }

    #[test]
    fn kind_names_round_trip() {
        for kind in all_kinds() {
            let text = serde_json::to_string(&kind).unwrap();
            assert_eq!(text, format!("\"{}\"", kind.name()));
            assert_eq!(serde_json::from_str::<ClassifierKind>(&text).unwrap(), kind);
        }
    }
}

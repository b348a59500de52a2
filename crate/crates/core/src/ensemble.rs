//! Per-label champion ensemble.
//!
//! For every label, each (kind, grid point) candidate is scored by stratified
//! k-fold cross-validated accuracy on the label's balanced set. The best
//! candidate is refit on the whole balanced set and becomes the label's
//! champion.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::balance::BalancedBinaryDataset;
use crate::classifiers::{self, BaseClassifierSpec, ClassifierError, ClassifierKind, ClassifierParams, FittedClassifier};
use crate::dataset::LabelVocabulary;
use crate::eval::kfold_split;
use crate::features::{FeatureError, FeatureMatrix, FeatureSchema};
use crate::rng;

#[derive(Debug, Error)]
pub enum EnsembleError {
    #[error("no classifier candidates configured")]
    NoCandidates,
    #[error("label {label}: every candidate failed")]
    AllCandidatesFailed { label: usize },
    #[error("label {label}: {source}")]
    Classifier {
        label: usize,
        #[source]
        source: ClassifierError,
    },
    #[error("label {label}: {message}")]
    Label { label: usize, message: String },
    #[error("expected {expected} balanced sets (one per label), got {actual}")]
    LabelCount { expected: usize, actual: usize },
    #[error("folds must be at least 2, got {0}")]
    BadFolds(usize),
    #[error("feature index {index} outside a {dim}-column matrix")]
    FeatureIndex { index: usize, dim: usize },
    #[error("input has {actual} features, model expects {expected}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("feature schema mismatch: model uses {expected}, input uses {actual}")]
    SchemaMismatch { expected: String, actual: String },
    #[error(transparent)]
    Feature(#[from] FeatureError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleParams {
    pub folds: usize,
    /// Margin a champion must exceed to emit its label.
    pub decision_offset: f64,
}

impl Default for EnsembleParams {
    fn default() -> Self {
        EnsembleParams { folds: 10, decision_offset: 0.0 }
    }
}

/// CV outcome of one (kind, grid point) on one label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    pub label_index: usize,
    /// Position in the expanded candidate list (spec order, then grid order).
    pub candidate: usize,
    pub params: ClassifierParams,
    pub fold_precision: Vec<f64>,
    pub fold_ppv: Vec<f64>,
    pub mean_precision: f64,
    pub mean_ppv: f64,
    /// Training error for candidates that failed on some fold.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelChampion {
    pub label_index: usize,
    pub kind: ClassifierKind,
    pub params: ClassifierParams,
    pub cv_precision: f64,
    pub cv_ppv: f64,
    pub model: FittedClassifier,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleModel {
    pub schema_id: String,
    pub schema: FeatureSchema,
    /// Columns of the full feature vector fed to every champion.
    pub selected: Vec<usize>,
    pub vocabulary: LabelVocabulary,
    pub decision_offset: f64,
    pub champions: Vec<LabelChampion>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub labels: BTreeSet<usize>,
    /// Champion margins (score minus kind threshold), one per label.
    pub scores: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleTraining {
    pub model: EnsembleModel,
    pub candidates: Vec<CandidateScore>,
    pub macro_ap: f64,
}

/// Expand every spec, keeping spec order then grid order.
pub fn expand_specs(specs: &[BaseClassifierSpec]) -> Result<Vec<ClassifierParams>, ClassifierError> {
    let mut out = Vec::new();
    for s in specs {
        out.extend(s.expand()?);
    }
    Ok(out)
}

fn label_rows(balanced: &BalancedBinaryDataset, x: &FeatureMatrix, features: &[usize]) -> (Vec<Vec<f64>>, Vec<i8>) {
    let samples = balanced.samples();
    let rows = samples.iter().map(|&(i, _)| features.iter().map(|&f| x.rows[i][f]).collect()).collect();
    let y = samples.iter().map(|&(_, l)| l).collect();
    (rows, y)
}

fn check_features(x: &FeatureMatrix, features: &[usize]) -> Result<(), EnsembleError> {
    let dim = x.n_cols();
    match features.iter().find(|&&f| f >= dim) {
        Some(&index) => Err(EnsembleError::FeatureIndex { index, dim }),
        None => Ok(()),
    }
}

/// Train one candidate on a balanced set restricted to `features`.
pub fn train_base(
    balanced: &BalancedBinaryDataset,
    x: &FeatureMatrix,
    features: &[usize],
    params: &ClassifierParams,
    seed: u64,
) -> Result<FittedClassifier, EnsembleError> {
    check_features(x, features)?;
    let label = balanced.label_index;
    let (rows, y) = label_rows(balanced, x, features);
    classifiers::train_classifier(&rows, &y, params, seed).map_err(|source| EnsembleError::Classifier { label, source })
}

/// Cross-validate every candidate on one label. Rows come back in candidate
/// order regardless of scheduling.
pub fn score_candidates(
    balanced: &BalancedBinaryDataset,
    x: &FeatureMatrix,
    features: &[usize],
    candidates: &[ClassifierParams],
    folds: usize,
    seed: u64,
) -> Result<Vec<CandidateScore>, EnsembleError> {
    if folds < 2 {
        return Err(EnsembleError::BadFolds(folds));
    }
    if candidates.is_empty() {
        return Err(EnsembleError::NoCandidates);
    }
    check_features(x, features)?;
    let label = balanced.label_index;
    let (rows, y) = label_rows(balanced, x, features);
    if balanced.positives.is_empty() || balanced.negatives.is_empty() {
        return Err(EnsembleError::Label { label, message: "balanced set lacks a class".into() });
    }
    let strata: Vec<usize> = y.iter().map(|&l| usize::from(l > 0)).collect();
    let k = folds.min(rows.len());
    let plan = kfold_split(rows.len(), k, rng::derive_seed(seed, &format!("ensemble/label{label}/folds")), &strata)
        .map_err(|e| EnsembleError::Label { label, message: e.to_string() })?;
    let splits: Vec<(Vec<usize>, Vec<usize>)> = (0..k).map(|f| plan.split(f)).collect();

    let tasks: Vec<(usize, usize)> = (0..candidates.len()).flat_map(|c| (0..k).map(move |f| (c, f))).collect();
    // per task: None = fold skipped, Some(Ok((accuracy, ppv))) or Some(Err(message))
    let results: Vec<Option<Result<(f64, f64), String>>> = tasks
        .par_iter()
        .map(|&(c, f)| {
            let (train, test) = &splits[f];
            let ty: Vec<i8> = train.iter().map(|&i| y[i]).collect();
            if test.is_empty() || !(ty.contains(&1) && ty.contains(&-1)) {
                return None;
            }
            let tx: Vec<Vec<f64>> = train.iter().map(|&i| rows[i].clone()).collect();
            let s = rng::derive_seed(seed, &format!("ensemble/label{label}/cand{c}/fold{f}"));
            let model = match classifiers::train_classifier(&tx, &ty, &candidates[c], s) {
                Ok(m) => m,
                Err(e) => return Some(Err(e.to_string())),
            };
            let (mut correct, mut tp, mut pp) = (0usize, 0usize, 0usize);
            for &i in test {
                let pos = model.margin_unchecked(&rows[i]) > 0.0;
                if pos == (y[i] > 0) {
                    correct += 1;
                }
                if pos {
                    pp += 1;
                    if y[i] > 0 {
                        tp += 1;
                    }
                }
            }
            let ppv = if pp == 0 { 0.0 } else { tp as f64 / pp as f64 };
            Some(Ok((correct as f64 / test.len() as f64, ppv)))
        })
        .collect();

    let mut out = Vec::with_capacity(candidates.len());
    for (c, params) in candidates.iter().enumerate() {
        let mut fold_precision = Vec::new();
        let mut ppv = Vec::new();
        let mut error = None;
        for f in 0..k {
            match &results[c * k + f] {
                None => {}
                Some(Ok((acc, p))) => {
                    fold_precision.push(*acc);
                    ppv.push(*p);
                }
                Some(Err(e)) => {
                    error.get_or_insert_with(|| format!("fold {f}: {e}"));
                }
            }
        }
        if error.is_none() && fold_precision.is_empty() {
            error = Some("no usable fold".into());
        }
        let mean = |v: &[f64]| if v.is_empty() { 0.0 } else { v.iter().sum::<f64>() / v.len() as f64 };
        let failed = error.is_some();
        out.push(CandidateScore {
            label_index: label,
            candidate: c,
            params: params.clone(),
            mean_precision: if failed { 0.0 } else { mean(&fold_precision) },
            mean_ppv: if failed { 0.0 } else { mean(&ppv) },
            fold_precision,
            fold_ppv: ppv,
            error,
        });
    }
    Ok(out)
}

/// Index of the best non-failed candidate; ties go to the earlier one.
pub fn pick_champion(scores: &[CandidateScore]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, s) in scores.iter().enumerate() {
        if s.error.is_some() {
            continue;
        }
        if best.is_none_or(|b| s.mean_precision > scores[b].mean_precision) {
            best = Some(i);
        }
    }
    best
}

/// Score all candidates on one label, pick the champion and refit it on the
/// full balanced set.
pub fn grid_search_label(
    balanced: &BalancedBinaryDataset,
    x: &FeatureMatrix,
    features: &[usize],
    specs: &[BaseClassifierSpec],
    folds: usize,
    seed: u64,
) -> Result<(LabelChampion, Vec<CandidateScore>), EnsembleError> {
    let label = balanced.label_index;
    let candidates = expand_specs(specs).map_err(|source| EnsembleError::Classifier { label, source })?;
    let scores = score_candidates(balanced, x, features, &candidates, folds, seed)?;
    let best = pick_champion(&scores).ok_or(EnsembleError::AllCandidatesFailed { label })?;
    let s = rng::derive_seed(seed, &format!("ensemble/label{label}/cand{best}/final"));
    let model = train_base(balanced, x, features, &candidates[best], s)?;
    let champion = LabelChampion {
        label_index: label,
        kind: candidates[best].kind(),
        params: candidates[best].clone(),
        cv_precision: scores[best].mean_precision,
        cv_ppv: scores[best].mean_ppv,
        model,
    };
    Ok((champion, scores))
}

/// Mean over labels of the best candidate's CV precision, without refitting.
/// Used as the dimension-search objective.
pub fn cv_macro_ap(
    balanced_sets: &[BalancedBinaryDataset],
    x: &FeatureMatrix,
    features: &[usize],
    specs: &[BaseClassifierSpec],
    folds: usize,
    seed: u64,
) -> Result<f64, EnsembleError> {
    if balanced_sets.is_empty() {
        return Err(EnsembleError::LabelCount { expected: 1, actual: 0 });
    }
    let candidates = expand_specs(specs).map_err(|source| EnsembleError::Classifier { label: 0, source })?;
    let best: Vec<f64> = balanced_sets
        .par_iter()
        .map(|b| {
            let scores = score_candidates(b, x, features, &candidates, folds, seed)?;
            let i = pick_champion(&scores).ok_or(EnsembleError::AllCandidatesFailed { label: b.label_index })?;
            Ok(scores[i].mean_precision)
        })
        .collect::<Result<_, EnsembleError>>()?;
    Ok(best.iter().sum::<f64>() / best.len() as f64)
}

#[allow(clippy::too_many_arguments)]
pub fn train_ensemble(
    balanced_sets: &[BalancedBinaryDataset],
    x: &FeatureMatrix,
    schema: &FeatureSchema,
    features: &[usize],
    vocabulary: &LabelVocabulary,
    specs: &[BaseClassifierSpec],
    params: &EnsembleParams,
    seed: u64,
) -> Result<EnsembleTraining, EnsembleError> {
    if balanced_sets.len() != vocabulary.len() {
        return Err(EnsembleError::LabelCount { expected: vocabulary.len(), actual: balanced_sets.len() });
    }
    if let Some((j, b)) = balanced_sets.iter().enumerate().find(|(j, b)| b.label_index != *j) {
        return Err(EnsembleError::Label { label: b.label_index, message: format!("found at position {j}") });
    }
    let per_label: Vec<(LabelChampion, Vec<CandidateScore>)> = balanced_sets
        .par_iter()
        .map(|b| grid_search_label(b, x, features, specs, params.folds, seed))
        .collect::<Result<_, _>>()?;
    let mut champions = Vec::with_capacity(per_label.len());
    let mut candidates = Vec::new();
    for (c, table) in per_label {
        champions.push(c);
        candidates.extend(table);
    }
    let macro_ap = champions.iter().map(|c| c.cv_precision).sum::<f64>() / champions.len() as f64;
    let model = EnsembleModel {
        schema_id: x.schema_id.clone(),
        schema: schema.clone(),
        selected: features.to_vec(),
        vocabulary: vocabulary.clone(),
        decision_offset: params.decision_offset,
        champions,
    };
    Ok(EnsembleTraining { model, candidates, macro_ap })
}

impl EnsembleModel {
    pub fn macro_ap(&self) -> f64 {
        self.champions.iter().map(|c| c.cv_precision).sum::<f64>() / self.champions.len() as f64
    }

    /// Predict from a full-width feature vector of the model's schema.
    pub fn predict_features(&self, full: &[f64]) -> Result<Prediction, EnsembleError> {
        let dim = self.schema.dimension();
        if full.len() != dim {
            return Err(EnsembleError::DimensionMismatch { expected: dim, actual: full.len() });
        }
        let x: Vec<f64> = self.selected.iter().map(|&f| full[f]).collect();
        let scores: Vec<f64> = self.champions.iter().map(|c| c.model.margin_unchecked(&x)).collect();
        Ok(assemble(scores, self.decision_offset))
    }

    pub fn predict_sequence(&self, seq: &str) -> Result<Prediction, EnsembleError> {
        let v = self.schema.extract(seq)?;
        if v.schema_id != self.schema_id {
            return Err(EnsembleError::SchemaMismatch { expected: self.schema_id.clone(), actual: v.schema_id });
        }
        self.predict_features(&v.values)
    }

    /// Labels whose champion margin exceeds the offset; the top-scoring label
    /// alone when none does.
    pub fn predict(&self, seq: &str) -> Result<(BTreeSet<usize>, Vec<f64>), EnsembleError> {
        let p = self.predict_sequence(seq)?;
        Ok((p.labels, p.scores))
    }
}

/// Threshold margins, falling back to the argmax (lowest index on ties).
pub fn assemble(scores: Vec<f64>, offset: f64) -> Prediction {
    let mut labels: BTreeSet<usize> = scores.iter().enumerate().filter(|(_, &s)| s > offset).map(|(j, _)| j).collect();
    if labels.is_empty() && !scores.is_empty() {
        let mut top = 0;
        for (j, &s) in scores.iter().enumerate() {
            if s > scores[top] {
                top = j;
            }
        }
        labels.insert(top);
    }
    Prediction { labels, scores }
}

/// Candidate table CSV: label, kind, params, fold precisions, means, champion flag.
pub fn candidate_table_csv(candidates: &[CandidateScore], champions: &[LabelChampion]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let write = |w: &mut csv::Writer<Vec<u8>>, rec: Vec<String>| w.write_record(rec).expect("in-memory csv write");
    write(
        &mut w,
        ["label", "candidate", "kind", "params", "fold_precisions", "mean_precision", "mean_ppv", "champion", "error"]
            .map(String::from)
            .to_vec(),
    );
    for c in candidates {
        let champion = champions
            .iter()
            .any(|ch| ch.label_index == c.label_index && ch.params == c.params && ch.cv_precision == c.mean_precision);
        write(
            &mut w,
            vec![
                c.label_index.to_string(),
                c.candidate.to_string(),
                c.params.kind().to_string(),
                c.params.describe(),
                c.fold_precision.iter().map(f64::to_string).collect::<Vec<_>>().join(";"),
                c.mean_precision.to_string(),
                c.mean_ppv.to_string(),
                champion.to_string(),
                c.error.clone().unwrap_or_default(),
            ],
        );
    }
    String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("csv output is utf-8")
}

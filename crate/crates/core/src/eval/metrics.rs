use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::EvalError;

/// Multi-label evaluation of one prediction run.
///
/// `per_label_precision` is per-label accuracy of the predicted label sets
/// (the balanced-set reading of "precision"); `per_label_ppv` is the
/// positive predictive value `TP / (TP + FP)` (0 when nothing was
/// predicted positive).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub samples: usize,
    pub per_label_precision: Vec<f64>,
    pub per_label_ppv: Vec<f64>,
    pub macro_ap: f64,
    pub ranking_ap: f64,
    pub hamming_loss: f64,
    pub one_error: f64,
    pub coverage: f64,
    pub ranking_loss: f64,
    pub subset_accuracy: f64,
}

/// 1-based rank of every label: descending score, ties by ascending label
/// index.
pub fn label_ranks(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut ranks = vec![0; scores.len()];
    for (pos, &label) in order.iter().enumerate() {
        ranks[label] = pos + 1;
    }
    ranks
}

fn check_truth(truth: &[BTreeSet<usize>], n_labels: usize) -> Result<(), EvalError> {
    for (i, t) in truth.iter().enumerate() {
        if t.is_empty() {
            return Err(EvalError::EmptyTruth(i));
        }
        if let Some(&bad) = t.iter().find(|&&j| j >= n_labels) {
            return Err(EvalError::LabelOutOfRange { label: bad, labels: n_labels });
        }
    }
    Ok(())
}

fn check_scores(scores: &[Vec<f64>], truth_len: usize) -> Result<usize, EvalError> {
    if scores.is_empty() {
        return Err(EvalError::Empty);
    }
    if scores.len() != truth_len {
        return Err(EvalError::LengthMismatch { expected: scores.len(), actual: truth_len });
    }
    let n_labels = scores[0].len();
    if n_labels == 0 || scores.iter().any(|s| s.len() != n_labels) {
        return Err(EvalError::Ragged);
    }
    Ok(n_labels)
}

/// Label-ranking average precision: for each sample, the mean over its true
/// labels of (true labels ranked at or above it) / (its rank), averaged over
/// samples.
pub fn ranking_ap(scores: &[Vec<f64>], truth: &[BTreeSet<usize>]) -> Result<f64, EvalError> {
    let n_labels = check_scores(scores, truth.len())?;
    check_truth(truth, n_labels)?;
    let mut total = 0.0;
    for (s, t) in scores.iter().zip(truth) {
        let ranks = label_ranks(s);
        let mut acc = 0.0;
        for &xi in t {
            let r = ranks[xi];
            let above = t.iter().filter(|&&other| ranks[other] <= r).count();
            acc += above as f64 / r as f64;
        }
        total += acc / t.len() as f64;
    }
    Ok(total / scores.len() as f64)
}

/// Arithmetic mean of per-label precisions.
pub fn macro_ap(per_label_precision: &[f64]) -> Result<f64, EvalError> {
    if per_label_precision.is_empty() {
        return Err(EvalError::Empty);
    }
    if let Some(&bad) = per_label_precision.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(EvalError::OutOfUnitRange(bad));
    }
    Ok(per_label_precision.iter().sum::<f64>() / per_label_precision.len() as f64)
}

pub fn multilabel_metrics(
    predictions: &[BTreeSet<usize>],
    scores: &[Vec<f64>],
    truth: &[BTreeSet<usize>],
) -> Result<MetricReport, EvalError> {
    let n_labels = check_scores(scores, truth.len())?;
    if predictions.len() != truth.len() {
        return Err(EvalError::LengthMismatch { expected: truth.len(), actual: predictions.len() });
    }
    check_truth(truth, n_labels)?;
    if let Some(&bad) = predictions.iter().flatten().find(|&&j| j >= n_labels) {
        return Err(EvalError::LabelOutOfRange { label: bad, labels: n_labels });
    }
    let n = truth.len() as f64;

    let mut hamming = 0.0;
    let mut one_error = 0.0;
    let mut coverage = 0.0;
    let mut ranking_loss = 0.0;
    let mut exact = 0usize;
    let mut correct = vec![0usize; n_labels];
    let mut tp = vec![0usize; n_labels];
    let mut predicted_pos = vec![0usize; n_labels];
    for ((p, s), t) in predictions.iter().zip(scores).zip(truth) {
        hamming += p.symmetric_difference(t).count() as f64 / n_labels as f64;
        if p == t {
            exact += 1;
        }
        for j in 0..n_labels {
            let (in_p, in_t) = (p.contains(&j), t.contains(&j));
            if in_p == in_t {
                correct[j] += 1;
            }
            if in_p {
                predicted_pos[j] += 1;
                if in_t {
                    tp[j] += 1;
                }
            }
        }
        let ranks = label_ranks(s);
        let top = ranks.iter().position(|&r| r == 1).expect("rank 1 exists");
        if !t.contains(&top) {
            one_error += 1.0;
        }
        coverage += (t.iter().map(|&j| ranks[j]).max().expect("non-empty truth") - 1) as f64;
        let n_false = n_labels - t.len();
        if n_false > 0 {
            let mut wrong = 0usize;
            for &yes in t {
                for no in (0..n_labels).filter(|j| !t.contains(j)) {
                    if ranks[no] < ranks[yes] {
                        wrong += 1;
                    }
                }
            }
            ranking_loss += wrong as f64 / (t.len() * n_false) as f64;
        }
    }
    let per_label_precision: Vec<f64> = correct.iter().map(|&c| c as f64 / n).collect();
    let per_label_ppv = tp
        .iter()
        .zip(&predicted_pos)
        .map(|(&t, &p)| if p == 0 { 0.0 } else { t as f64 / p as f64 })
        .collect();
    Ok(MetricReport {
        samples: truth.len(),
        macro_ap: macro_ap(&per_label_precision)?,
        per_label_precision,
        per_label_ppv,
        ranking_ap: ranking_ap(scores, truth)?,
        hamming_loss: hamming / n,
        one_error: one_error / n,
        coverage: coverage / n,
        ranking_loss: ranking_loss / n,
        subset_accuracy: exact as f64 / n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(v: &[usize]) -> BTreeSet<usize> {
        v.iter().copied().collect()
    }

    #[test]
    fn perfect_ranking() {
        let scores = vec![vec![0.9, 0.1, 0.8], vec![0.1, 0.7, 0.2]];
        let truth = vec![set(&[0, 2]), set(&[1])];
        assert_eq!(ranking_ap(&scores, &truth).unwrap(), 1.0);
    }

    #[test]
    fn true_label_ranked_second() {
        let scores = vec![vec![0.5, 0.9, 0.1]];
        assert_eq!(ranking_ap(&scores, &[set(&[0])]).unwrap(), 0.5);
    }

    #[test]
    fn all_labels_true() {
        let scores = vec![vec![0.1, 0.9, 0.3]];
        assert_eq!(ranking_ap(&scores, &[set(&[0, 1, 2])]).unwrap(), 1.0);
    }

    #[test]
    fn ties_resolve_by_label_index() {
        assert_eq!(label_ranks(&[0.5, 0.5, 0.9]), vec![2, 3, 1]);
        // label 1 ties with label 0 and loses: AP = 1/2
        let scores = vec![vec![0.5, 0.5]];
        assert_eq!(ranking_ap(&scores, &[set(&[1])]).unwrap(), 0.5);
        assert_eq!(ranking_ap(&scores, &[set(&[0])]).unwrap(), 1.0);
    }

    #[test]
    fn perfect_predictions() {
        let truth = vec![set(&[0]), set(&[1, 2])];
        let scores = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.9]];
        let r = multilabel_metrics(&truth, &scores, &truth).unwrap();
        assert_eq!((r.hamming_loss, r.one_error, r.ranking_loss), (0.0, 0.0, 0.0));
        assert_eq!(r.subset_accuracy, 1.0);
        assert_eq!(r.coverage, 0.5);
    }

    #[test]
    fn disjoint_prediction() {
        let r = multilabel_metrics(&[set(&[1])], &[vec![0.0, 1.0]], &[set(&[0])]).unwrap();
        assert_eq!(r.hamming_loss, 1.0);
        assert_eq!(r.one_error, 1.0);
        assert_eq!(r.ranking_loss, 1.0);
    }

    #[test]
    fn errors() {
        assert!(matches!(ranking_ap(&[vec![0.1]], &[set(&[])]), Err(EvalError::EmptyTruth(0))));
        assert!(matches!(
            multilabel_metrics(&[set(&[5])], &[vec![0.0, 1.0]], &[set(&[0])]),
            Err(EvalError::LabelOutOfRange { label: 5, .. })
        ));
        assert!(matches!(macro_ap(&[]), Err(EvalError::Empty)));
    }

    #[test]
    fn macro_ap_constant() {
        assert!((macro_ap(&[0.7; 6]).unwrap() - 0.7).abs() < 1e-15);
    }
}

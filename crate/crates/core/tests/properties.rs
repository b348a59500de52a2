use std::collections::BTreeSet;

use hpslpred::balance::select_nearest;
use hpslpred::dataset::{binary_relevance, derive_labels, redundancy_filter, SequenceRecord};
use hpslpred::eval::{multilabel_metrics, ranking_ap};
use hpslpred::features::{
    auto_covariance_with, extract_aac, extract_hybrid350, extract_pc_pseaac, PropertyScale, ScaleId,
};
use hpslpred::select::two_layer_search;
use hpslpred::svm::{train_svm, KernelSpec, SvmParams};
use proptest::prelude::*;

const AA: &[u8; 20] = b"ACDEFGHIKLMNPQRSTVWY";

fn protein(min: usize, max: usize) -> impl Strategy<Value = String> {
    prop::collection::vec(0usize..20, min..max).prop_map(|v| v.into_iter().map(|i| AA[i] as char).collect())
}

fn records() -> impl Strategy<Value = Vec<SequenceRecord>> {
    let locs = ["Nucleus", "Cytoplasm", "Membrane", "Secreted"];
    prop::collection::vec((protein(20, 60), prop::collection::btree_set(0usize..4, 1..4)), 8..30).prop_map(move |rows| {
        rows.into_iter()
            .enumerate()
            .map(|(i, (seq, ls))| {
                SequenceRecord::new(format!("P{i:05}"), &seq, ls.into_iter().map(|j| locs[j].to_string()).collect())
                    .unwrap()
            })
            .collect()
    })
}

type Scored = (Vec<Vec<f64>>, Vec<BTreeSet<usize>>, Vec<BTreeSet<usize>>);

/// Scores, truth sets and predicted sets for `n` samples over `q` labels.
fn scored(n: usize, q: usize) -> impl Strategy<Value = Scored> {
    (
        prop::collection::vec(prop::collection::vec(-3i32..4, q), n),
        prop::collection::vec(prop::collection::btree_set(0..q, 1..=q), n),
        prop::collection::vec(prop::collection::btree_set(0..q, 0..=q), n),
    )
        .prop_map(|(s, t, p)| {
            (s.into_iter().map(|r| r.into_iter().map(f64::from).collect()).collect(), t, p)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn binary_relevance_reconstructs_labelsets(recs in records()) {
        let Ok(ds) = derive_labels(&recs, 2) else { return Ok(()) };
        let Ok(bins) = binary_relevance(&ds) else { return Ok(()) };
        let mut rebuilt = vec![BTreeSet::new(); ds.len()];
        for b in &bins {
            prop_assert_eq!(b.len(), ds.len());
            for &i in &b.positives {
                rebuilt[i].insert(b.label_index);
            }
        }
        prop_assert_eq!(rebuilt, ds.labelsets.clone());
    }

    #[test]
    fn redundancy_filter_is_idempotent(recs in records(), t in 0.3f64..1.0) {
        let ds = derive_labels(&recs, 2).unwrap();
        let once = redundancy_filter(&ds, t).unwrap();
        let twice = redundancy_filter(&once, t).unwrap();
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn composition_features_are_distributions(seq in protein(30, 200)) {
        let aac = extract_aac(&seq).unwrap();
        prop_assert!((aac.values.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let ch = [ScaleId::Hydrophobicity.scale(), ScaleId::Hydrophilicity.scale()];
        let pc = extract_pc_pseaac(&seq, 10, 0.05, &ch).unwrap();
        prop_assert!((pc.values.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(pc.values.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn hybrid_is_deterministic(seq in protein(30, 200)) {
        let a = extract_hybrid350(&seq).unwrap();
        let b = extract_hybrid350(&seq).unwrap();
        prop_assert_eq!(a.values.len(), 350);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn covariance_ignores_affine_rescaling_of_raw_scale(
        seq in protein(30, 120),
        raw in prop::array::uniform20(-5.0f64..5.0),
        a in 0.1f64..10.0,
        b in -10.0f64..10.0,
        lag in 1usize..10,
    ) {
        prop_assume!(raw.iter().any(|v| (v - raw[0]).abs() > 1e-3));
        let moved = raw.map(|v| a * v + b);
        let s0 = PropertyScale::from_raw("p", raw);
        let s1 = PropertyScale::from_raw("q", moved);
        let c0 = auto_covariance_with(&seq, &s0, lag).unwrap();
        let c1 = auto_covariance_with(&seq, &s1, lag).unwrap();
        prop_assert!((c0 - c1).abs() < 1e-9 * (1.0 + c0.abs()));
    }

    #[test]
    fn svm_dual_is_feasible_and_kkt(
        pts in prop::collection::vec((prop::collection::vec(-2.0f64..2.0, 3), any::<bool>()), 6..30),
        c in prop::sample::select(vec![0.1, 1.0, 10.0]),
        rbf in any::<bool>(),
    ) {
        let x: Vec<Vec<f64>> = pts.iter().map(|p| p.0.clone()).collect();
        let mut y: Vec<i8> = pts.iter().map(|p| if p.1 { 1 } else { -1 }).collect();
        y[0] = 1;
        y[1] = -1;
        let kernel = if rbf { KernelSpec::Rbf { gamma: 0.5 } } else { KernelSpec::Linear };
        let m = train_svm(&x, &y, &SvmParams { standardize: false, ..SvmParams::new(c, kernel) }).unwrap();
        prop_assert!(m.converged);
        prop_assert!(m.max_violation <= 1e-3);
        prop_assert!(m.dual_coefficients.iter().all(|a| a.abs() <= c * (1.0 + 1e-12)));
        prop_assert!(m.dual_coefficients.iter().sum::<f64>().abs() < 1e-9 * c.max(1.0) * x.len() as f64);
    }

    #[test]
    fn standardized_svm_ignores_column_scale(
        pts in prop::collection::vec((prop::collection::vec(-2.0f64..2.0, 3), any::<bool>()), 6..25),
        scale in 0.01f64..100.0,
    ) {
        let x: Vec<Vec<f64>> = pts.iter().map(|p| p.0.clone()).collect();
        let mut y: Vec<i8> = pts.iter().map(|p| if p.1 { 1 } else { -1 }).collect();
        y[0] = 1;
        y[1] = -1;
        let xs: Vec<Vec<f64>> = x.iter().map(|r| r.iter().map(|v| v * scale).collect()).collect();
        let params = SvmParams { tol: 1e-10, ..SvmParams::new(1.0, KernelSpec::Rbf { gamma: 0.3 }) };
        let m0 = train_svm(&x, &y, &params).unwrap();
        let m1 = train_svm(&xs, &y, &params).unwrap();
        for (r, rs) in x.iter().zip(&xs) {
            let (f0, f1) = (m0.decision_value(r).unwrap(), m1.decision_value(rs).unwrap());
            prop_assert!((f0 - f1).abs() < 1e-6 * (1.0 + f0.abs()), "{} vs {}", f0, f1);
        }
    }

    #[test]
    fn boundary_selection_keeps_the_closest(
        dec in prop::collection::vec(-5.0f64..5.0, 1..40),
        frac in 0.0f64..1.0,
    ) {
        let majority: Vec<usize> = (0..dec.len()).map(|i| 3 * i + 1).collect();
        let m = ((dec.len() as f64) * frac) as usize;
        let kept = select_nearest(&majority, &dec, m);
        prop_assert_eq!(kept.len(), m);
        let kept_set: BTreeSet<usize> = kept.iter().copied().collect();
        let worst_kept = majority.iter().zip(&dec).filter(|(i, _)| kept_set.contains(i)).map(|(_, d)| d.abs()).fold(0.0, f64::max);
        let best_dropped = majority.iter().zip(&dec).filter(|(i, _)| !kept_set.contains(i)).map(|(_, d)| d.abs()).fold(f64::INFINITY, f64::min);
        prop_assert!(worst_kept <= best_dropped);
        prop_assert_eq!(kept.clone(), select_nearest(&majority, &dec, m));
    }

    #[test]
    fn fine_round_never_loses_to_coarse(
        table in prop::collection::vec(0.0f64..1.0, 20..120),
        step in 1usize..15,
    ) {
        let total = table.len();
        let r = two_layer_search(|k| Ok::<f64, String>(table[k - 1]), step, total, 2).unwrap();
        prop_assert!(r.best_score >= r.coarse_best().1);
        prop_assert_eq!(r.best_score, table[r.best_k - 1]);
    }

    #[test]
    fn ranking_ap_is_one_iff_true_labels_lead((scores, truth, _) in scored(12, 5)) {
        let ap = ranking_ap(&scores, &truth).unwrap();
        let perfect = scores.iter().zip(&truth).all(|(s, t)| {
            let mut order: Vec<usize> = (0..s.len()).collect();
            order.sort_by(|&a, &b| s[b].total_cmp(&s[a]).then(a.cmp(&b)));
            order[..t.len()].iter().all(|j| t.contains(j))
        });
        prop_assert_eq!((ap - 1.0).abs() < 1e-12, perfect);
    }

    #[test]
    fn metrics_ignore_sample_and_label_order(
        (scores, truth, preds) in scored(10, 4),
        shift in 1usize..10,
        perm in Just(vec![2usize, 0, 3, 1]),
    ) {
        let base = multilabel_metrics(&preds, &scores, &truth).unwrap();

        let rot = |v: usize| (v + shift) % scores.len();
        let idx: Vec<usize> = (0..scores.len()).map(rot).collect();
        let s2: Vec<_> = idx.iter().map(|&i| scores[i].clone()).collect();
        let t2: Vec<_> = idx.iter().map(|&i| truth[i].clone()).collect();
        let p2: Vec<_> = idx.iter().map(|&i| preds[i].clone()).collect();
        let rotated = multilabel_metrics(&p2, &s2, &t2).unwrap();
        prop_assert!((base.hamming_loss - rotated.hamming_loss).abs() < 1e-12);
        prop_assert!((base.subset_accuracy - rotated.subset_accuracy).abs() < 1e-12);
        prop_assert!((base.ranking_loss - rotated.ranking_loss).abs() < 1e-12);
        prop_assert!((base.ranking_ap - rotated.ranking_ap).abs() < 1e-12);

        let relabel = |set: &BTreeSet<usize>| set.iter().map(|&j| perm[j]).collect::<BTreeSet<usize>>();
        let t3: Vec<_> = truth.iter().map(relabel).collect();
        let p3: Vec<_> = preds.iter().map(relabel).collect();
        let s3: Vec<Vec<f64>> = scores
            .iter()
            .map(|s| {
                let mut out = vec![0.0; s.len()];
                for (j, v) in s.iter().enumerate() {
                    out[perm[j]] = *v;
                }
                out
            })
            .collect();
        let permuted = multilabel_metrics(&p3, &s3, &t3).unwrap();
        prop_assert!((base.hamming_loss - permuted.hamming_loss).abs() < 1e-12);
        prop_assert!((base.subset_accuracy - permuted.subset_accuracy).abs() < 1e-12);
    }
}

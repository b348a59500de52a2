//! Greedy redundancy filtering with a k-mer identity estimate.
//!
//! Identity between two sequences is the number of distinct shared 5-mers
//! divided by the smaller of their distinct 5-mer counts. Sequences are
//! visited longest first; a sequence is kept only if its identity to every
//! already kept sequence is below the threshold.

use std::collections::{BTreeSet, HashMap};

use super::{DatasetError, MultiLabelDataset, AMINO_ACIDS};

pub const IDENTITY_KMER: usize = 5;

fn residue_code(b: u8) -> u32 {
    AMINO_ACIDS
        .iter()
        .position(|&a| a == b)
        .expect("residues are canonical") as u32
}

fn kmer_set(seq: &str) -> BTreeSet<u32> {
    let codes: Vec<u32> = seq.bytes().map(residue_code).collect();
    codes
        .windows(IDENTITY_KMER)
        .map(|w| w.iter().fold(0u32, |acc, &c| acc * 20 + c))
        .collect()
}

/// Estimated identity between two residue strings.
///
/// Sequences too short to contain a 5-mer are identical (1.0) only when the
/// strings are equal.
pub fn kmer_identity(a: &str, b: &str) -> f64 {
    let ka = kmer_set(a);
    let kb = kmer_set(b);
    identity_from_sets(a, b, &ka, &kb)
}

fn identity_from_sets(a: &str, b: &str, ka: &BTreeSet<u32>, kb: &BTreeSet<u32>) -> f64 {
    let denom = ka.len().min(kb.len());
    if denom == 0 {
        return if a == b { 1.0 } else { 0.0 };
    }
    ka.intersection(kb).count() as f64 / denom as f64
}

pub fn redundancy_filter(
    dataset: &MultiLabelDataset,
    identity_threshold: f64,
) -> Result<MultiLabelDataset, DatasetError> {
    if !(identity_threshold > 0.0 && identity_threshold <= 1.0) {
        return Err(DatasetError::BadThreshold(identity_threshold));
    }
    let sets: Vec<BTreeSet<u32>> = dataset.records.iter().map(|r| kmer_set(&r.residues)).collect();
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    order.sort_by(|&a, &b| {
        dataset.records[b]
            .residues
            .len()
            .cmp(&dataset.records[a].residues.len())
            .then(a.cmp(&b))
    });

    let mut kept: Vec<usize> = Vec::new();
    let mut index: HashMap<u32, Vec<usize>> = HashMap::new();
    let mut short_kept: Vec<usize> = Vec::new();
    for &cand in &order {
        let cand_set = &sets[cand];
        let cand_seq = &dataset.records[cand].residues;
        let redundant = if cand_set.is_empty() {
            // no k-mers: only an exact match can be redundant
            kept.iter()
                .any(|&k| identity_from_sets(cand_seq, &dataset.records[k].residues, cand_set, &sets[k]) >= identity_threshold)
        } else {
            let mut shared: HashMap<usize, usize> = HashMap::new();
            for km in cand_set {
                if let Some(holders) = index.get(km) {
                    for &h in holders {
                        *shared.entry(h).or_default() += 1;
                    }
                }
            }
            shared.iter().any(|(&k, &count)| {
                let denom = cand_set.len().min(sets[k].len());
                count as f64 / denom as f64 >= identity_threshold
            }) || short_kept
                .iter()
                .any(|&k| identity_from_sets(cand_seq, &dataset.records[k].residues, cand_set, &sets[k]) >= identity_threshold)
        };
        if !redundant {
            if cand_set.is_empty() {
                short_kept.push(cand);
            }
            for km in cand_set {
                index.entry(*km).or_default().push(cand);
            }
            kept.push(cand);
        }
    }
    kept.sort_unstable();
    Ok(dataset.subset(&kept))
}

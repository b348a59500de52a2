//! Seeded planted-label sequence generator for end-to-end runs.
//!
//! Label `j` multiplies the sampling weight of three residues (disjoint per
//! label) by `enrichment`, so composition features carry the labels.

use std::path::{Path, PathBuf};

use rand::distributions::WeightedIndex;
use rand::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{serialize_fasta, write_label_tsv, SequenceRecord, AMINO_ACIDS};
use crate::rng;

pub const LABEL_NAMES: [&str; 6] = ["Nucleus", "Cytoplasm", "Mitochondrion", "Secreted", "Membrane", "Golgi"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticParams {
    pub samples: usize,
    pub labels: usize,
    pub min_length: usize,
    pub max_length: usize,
    pub enrichment: f64,
    /// Fraction of samples carrying a second label.
    pub multi_label_fraction: f64,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        SyntheticParams {
            samples: 600,
            labels: 4,
            min_length: 80,
            max_length: 160,
            enrichment: 4.0,
            multi_label_fraction: 0.3,
        }
    }
}

/// Residues enriched by label `j`.
pub fn planted_residues(j: usize) -> [u8; 3] {
    [AMINO_ACIDS[3 * j], AMINO_ACIDS[3 * j + 1], AMINO_ACIDS[3 * j + 2]]
}

pub fn generate(params: &SyntheticParams, seed: u64) -> Vec<SequenceRecord> {
    assert!(
        (1..=LABEL_NAMES.len()).contains(&params.labels),
        "labels must lie in 1..={}",
        LABEL_NAMES.len()
    );
    assert!(params.min_length >= 1 && params.min_length <= params.max_length);
    let mut r = rng::stream(seed, "synthetic");
    (0..params.samples)
        .map(|i| {
            let first = r.gen_range(0..params.labels);
            let mut labels = vec![first];
            if params.labels > 1 && r.gen_bool(params.multi_label_fraction) {
                let mut second = r.gen_range(0..params.labels - 1);
                if second >= first {
                    second += 1;
                }
                labels.push(second);
                labels.sort_unstable();
            }
            let mut weights = [1.0f64; 20];
            for &j in &labels {
                for res in planted_residues(j) {
                    let k = AMINO_ACIDS.iter().position(|&a| a == res).expect("canonical residue");
                    weights[k] *= params.enrichment;
                }
            }
            let dist = WeightedIndex::new(weights).expect("positive weights");
            let len = r.gen_range(params.min_length..=params.max_length);
            let residues: String = (0..len).map(|_| AMINO_ACIDS[dist.sample(&mut r)] as char).collect();
            SequenceRecord {
                accession: format!("SYN{:05}", i + 1),
                residues,
                locations: labels.iter().map(|&j| LABEL_NAMES[j].to_string()).collect(),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticFiles {
    pub fasta: PathBuf,
    pub labels: PathBuf,
    pub config: PathBuf,
}

/// Write `synthetic.fasta`, `synthetic_labels.tsv` and a matching
/// `synthetic.toml` into `dir`.
pub fn write_synthetic(dir: &Path, params: &SyntheticParams, seed: u64) -> std::io::Result<SyntheticFiles> {
    std::fs::create_dir_all(dir)?;
    let records = generate(params, seed);
    let files = SyntheticFiles {
        fasta: dir.join("synthetic.fasta"),
        labels: dir.join("synthetic_labels.tsv"),
        config: dir.join("synthetic.toml"),
    };
    std::fs::write(&files.fasta, serialize_fasta(&records))?;
    std::fs::write(&files.labels, write_label_tsv(&records))?;
    std::fs::write(&files.config, synthetic_config_toml(params.labels, seed))?;
    Ok(files)
}

/// Pipeline config for the files written by [`write_synthetic`].
pub fn synthetic_config_toml(labels: usize, seed: u64) -> String {
    format!(
        r#"seed = {seed}

[data]
fasta = "synthetic.fasta"
labels = "synthetic_labels.tsv"
top_n = {labels}
identity_threshold = 0.7
holdout_fraction = 0.2

[select]
w_r = 1.0
w_d = 1.0
metric = "euclidean"
coarse_step = 10

[search]
folds = 10

[ensemble]
folds = 10
"#
    )
}

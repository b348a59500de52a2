//! Sequence ingestion, label vocabulary derivation, redundancy filtering and
//! the binary-relevance decomposition.

mod fasta;
mod labels;
mod redundancy;
pub mod uniprot;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use fasta::{parse_fasta, read_fasta_entries, serialize_fasta, FastaEntry};
pub use labels::{attach_labels, parse_label_tsv, write_label_tsv};
pub use redundancy::{kmer_identity, redundancy_filter, IDENTITY_KMER};

/// The 20 canonical residues in the fixed alphabetical order used by every
/// feature extractor.
pub const AMINO_ACIDS: [u8; 20] = *b"ACDEFGHIKLMNPQRSTVWY";

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("FASTA format error at line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("label file error at line {line}: {message}")]
    LabelFile { line: usize, message: String },
    #[error("record `{accession}` is invalid: {message}")]
    InvalidRecord { accession: String, message: String },
    #[error("requested top {requested} locations but only {available} distinct locations exist")]
    TooFewLocations { requested: usize, available: usize },
    #[error("top_n must be at least 1")]
    ZeroTopN,
    #[error("identity threshold {0} must lie in (0, 1]")]
    BadThreshold(f64),
    #[error("label `{0}` has no positive samples")]
    NoPositives(String),
    #[error("dataset vocabulary is empty")]
    EmptyVocabulary,
    #[error("transport error: {0}")]
    Transport(String),
    #[error("malformed UniProt response: {0}")]
    Parse(String),
    #[error("cache error: {0}")]
    Cache(String),
}

/// One protein with its raw localization annotations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceRecord {
    pub accession: String,
    pub residues: String,
    pub locations: Vec<String>,
}

impl SequenceRecord {
    /// Build a record from raw residues, deleting non-canonical letters.
    ///
    /// Returns an error when nothing remains after normalization.
    pub fn new(
        accession: impl Into<String>,
        raw_residues: &str,
        locations: Vec<String>,
    ) -> Result<Self, DatasetError> {
        let accession = accession.into();
        let (residues, removed) = normalize_residues(raw_residues);
        if removed > 0 {
            log::warn!("{accession}: removed {removed} non-canonical residue(s)");
        }
        if residues.is_empty() {
            return Err(DatasetError::InvalidRecord {
                accession,
                message: "empty residue string after normalization".into(),
            });
        }
        Ok(SequenceRecord {
            accession,
            residues,
            locations,
        })
    }
}

/// Uppercase and keep only the 20 canonical residues. Returns the cleaned
/// string and the number of deleted residue letters (whitespace is not
/// counted).
pub fn normalize_residues(raw: &str) -> (String, usize) {
    let mut out = String::with_capacity(raw.len());
    let mut removed = 0;
    for c in raw.chars() {
        if c.is_whitespace() {
            continue;
        }
        let u = c.to_ascii_uppercase();
        if u.is_ascii() && AMINO_ACIDS.contains(&(u as u8)) {
            out.push(u);
        } else {
            removed += 1;
        }
    }
    (out, removed)
}

/// Canonical key for a location annotation: trimmed, case-folded, with any
/// qualifier after `;` dropped.
pub fn normalize_location(raw: &str) -> String {
    let head = raw.split(';').next().unwrap_or("");
    head.trim().to_lowercase()
}

fn display_name(key: &str) -> String {
    let mut chars = key.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// Ordered label names. Index `i` is the 0-based class id; reports show it as
/// `Class{i+1}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelVocabulary {
    pub labels: Vec<String>,
}

impl LabelVocabulary {
    pub fn new(labels: Vec<String>) -> Result<Self, DatasetError> {
        if labels.is_empty() {
            return Err(DatasetError::EmptyVocabulary);
        }
        let unique: BTreeSet<_> = labels.iter().map(|l| normalize_location(l)).collect();
        if unique.len() != labels.len() {
            return Err(DatasetError::InvalidRecord {
                accession: "<vocabulary>".into(),
                message: "duplicate label names".into(),
            });
        }
        Ok(LabelVocabulary { labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn index_of(&self, location: &str) -> Option<usize> {
        let key = normalize_location(location);
        self.labels.iter().position(|l| normalize_location(l) == key)
    }

    pub fn class_name(index: usize) -> String {
        format!("Class{}", index + 1)
    }
}

/// Sequences aligned with their non-empty label sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiLabelDataset {
    pub records: Vec<SequenceRecord>,
    pub labelsets: Vec<BTreeSet<usize>>,
    pub vocabulary: LabelVocabulary,
}

impl MultiLabelDataset {
    pub fn new(
        records: Vec<SequenceRecord>,
        labelsets: Vec<BTreeSet<usize>>,
        vocabulary: LabelVocabulary,
    ) -> Result<Self, DatasetError> {
        if records.len() != labelsets.len() {
            return Err(DatasetError::InvalidRecord {
                accession: "<dataset>".into(),
                message: format!(
                    "{} records but {} label sets",
                    records.len(),
                    labelsets.len()
                ),
            });
        }
        for (rec, set) in records.iter().zip(&labelsets) {
            if set.is_empty() || set.iter().any(|&j| j >= vocabulary.len()) {
                return Err(DatasetError::InvalidRecord {
                    accession: rec.accession.clone(),
                    message: "label set must be a non-empty subset of the vocabulary".into(),
                });
            }
        }
        Ok(MultiLabelDataset {
            records,
            labelsets,
            vocabulary,
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Keep the samples at `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> MultiLabelDataset {
        MultiLabelDataset {
            records: indices.iter().map(|&i| self.records[i].clone()).collect(),
            labelsets: indices.iter().map(|&i| self.labelsets[i].clone()).collect(),
            vocabulary: self.vocabulary.clone(),
        }
    }

    /// Per-label positive counts.
    pub fn label_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.vocabulary.len()];
        for set in &self.labelsets {
            for &j in set {
                counts[j] += 1;
            }
        }
        counts
    }

    /// `N_i`: number of samples carrying exactly `i` labels, for
    /// `i = 1..=L`.
    pub fn multiplicity_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.vocabulary.len()];
        for set in &self.labelsets {
            counts[set.len() - 1] += 1;
        }
        counts
    }

    pub fn manifest(&self, identity_threshold: f64, source_snapshot: Option<String>) -> DatasetManifest {
        DatasetManifest {
            vocabulary: self.vocabulary.labels.clone(),
            samples: self.len(),
            label_counts: self.label_counts(),
            multiplicity_counts: self.multiplicity_counts(),
            identity_threshold,
            source_snapshot,
        }
    }
}

/// Summary statistics persisted next to the dataset files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub vocabulary: Vec<String>,
    pub samples: usize,
    pub label_counts: Vec<usize>,
    pub multiplicity_counts: Vec<usize>,
    pub identity_threshold: f64,
    pub source_snapshot: Option<String>,
}

/// Build the top-`top_n` vocabulary and keep each record's intersection with
/// it. Records whose intersection is empty are dropped.
///
/// Frequencies count each record once per distinct normalized location. Ties
/// are broken by the lexicographic order of the normalized name.
pub fn derive_labels(
    records: &[SequenceRecord],
    top_n: usize,
) -> Result<MultiLabelDataset, DatasetError> {
    if top_n == 0 {
        return Err(DatasetError::ZeroTopN);
    }
    let mut freq: BTreeMap<String, usize> = BTreeMap::new();
    let mut keys_per_record = Vec::with_capacity(records.len());
    for rec in records {
        let keys: BTreeSet<String> = rec
            .locations
            .iter()
            .map(|l| normalize_location(l))
            .filter(|k| !k.is_empty())
            .collect();
        for k in &keys {
            *freq.entry(k.clone()).or_default() += 1;
        }
        keys_per_record.push(keys);
    }
    if freq.len() < top_n {
        return Err(DatasetError::TooFewLocations {
            requested: top_n,
            available: freq.len(),
        });
    }
    let mut ranked: Vec<(String, usize)> = freq.into_iter().collect();
    // BTreeMap iteration is lexicographic and the sort is stable.
    ranked.sort_by_key(|e| std::cmp::Reverse(e.1));
    let chosen: Vec<String> = ranked.into_iter().take(top_n).map(|(k, _)| k).collect();
    let index: BTreeMap<&str, usize> = chosen
        .iter()
        .enumerate()
        .map(|(i, k)| (k.as_str(), i))
        .collect();

    let mut kept = Vec::new();
    let mut labelsets = Vec::new();
    for (rec, keys) in records.iter().zip(&keys_per_record) {
        let set: BTreeSet<usize> = keys.iter().filter_map(|k| index.get(k.as_str()).copied()).collect();
        if !set.is_empty() {
            kept.push(rec.clone());
            labelsets.push(set);
        }
    }
    let vocabulary = LabelVocabulary::new(chosen.iter().map(|k| display_name(k)).collect())?;
    MultiLabelDataset::new(kept, labelsets, vocabulary)
}

/// One label's positive / negative split of the dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryDataset {
    pub label_index: usize,
    pub positives: Vec<usize>,
    pub negatives: Vec<usize>,
}

impl BinaryDataset {
    pub fn len(&self) -> usize {
        self.positives.len() + self.negatives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Split the dataset into one binary problem per vocabulary label.
pub fn binary_relevance(dataset: &MultiLabelDataset) -> Result<Vec<BinaryDataset>, DatasetError> {
    if dataset.vocabulary.is_empty() {
        return Err(DatasetError::EmptyVocabulary);
    }
    let mut out = Vec::with_capacity(dataset.vocabulary.len());
    for j in 0..dataset.vocabulary.len() {
        let (positives, negatives): (Vec<usize>, Vec<usize>) =
            (0..dataset.len()).partition(|&i| dataset.labelsets[i].contains(&j));
        if positives.is_empty() {
            return Err(DatasetError::NoPositives(dataset.vocabulary.labels[j].clone()));
        }
        out.push(BinaryDataset {
            label_index: j,
            positives,
            negatives,
        });
    }
    Ok(out)
}

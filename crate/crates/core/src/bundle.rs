//! On-disk model bundle: `manifest.json` plus one JSON payload per champion.
//!
//! Floats are written in shortest round-trip decimal form, so a bundle loads
//! to bit-identical weights on any platform. The manifest records a SHA-256
//! per payload and one over all payloads; loading verifies both.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::classifiers::{ClassifierKind, ClassifierParams, FittedClassifier};
use crate::config::PipelineConfig;
use crate::dataset::LabelVocabulary;
use crate::ensemble::{EnsembleModel, LabelChampion};
use crate::eval::MetricReport;
use crate::features::FeatureSchema;

pub const FORMAT_VERSION: u32 = 1;
pub const FLOAT_FORMAT: &str = "f64-shortest-roundtrip-decimal";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("bundle i/o on {path}: {message}")]
    Io { path: String, message: String },
    #[error("malformed bundle file {path}: {message}")]
    Json { path: String, message: String },
    #[error("payload hash mismatch for {0}")]
    HashMismatch(String),
    #[error("unsupported bundle format version {0}")]
    Version(u32),
    #[error("inconsistent bundle: {0}")]
    Inconsistent(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChampionEntry {
    pub label_index: usize,
    pub label: String,
    pub kind: ClassifierKind,
    pub params: ClassifierParams,
    pub cv_precision: f64,
    pub cv_ppv: f64,
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleManifest {
    pub format_version: u32,
    pub float_format: String,
    pub config: Option<PipelineConfig>,
    pub schema_id: String,
    pub schema: FeatureSchema,
    pub selected_features: Vec<usize>,
    pub vocabulary: LabelVocabulary,
    pub decision_offset: f64,
    pub champions: Vec<ChampionEntry>,
    /// Mean of the champions' CV precisions.
    pub macro_ap: f64,
    /// Hold-out evaluation, filled in by the evaluate stage.
    pub metrics: Option<MetricReport>,
    pub payload_sha256: String,
}

fn io_err(path: &Path, e: std::io::Error) -> BundleError {
    BundleError::Io { path: path.display().to_string(), message: e.to_string() }
}

fn sha_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn payload_digest(entries: &[(String, Vec<u8>)]) -> String {
    let mut h = Sha256::new();
    for (name, bytes) in entries {
        h.update((name.len() as u64).to_le_bytes());
        h.update(name.as_bytes());
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(bytes);
    }
    hex::encode(h.finalize())
}

fn to_json<T: Serialize>(v: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(v).expect("bundle values serialize");
    bytes.push(b'\n');
    bytes
}

fn champion_file(label: usize) -> String {
    format!("champion-{label:03}.json")
}

/// Write `model` to `dir`, replacing any previous manifest and champion
/// payloads there.
pub fn save_bundle(
    dir: &Path,
    model: &EnsembleModel,
    config: Option<&PipelineConfig>,
    metrics: Option<&MetricReport>,
) -> Result<BundleManifest, BundleError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    for entry in fs::read_dir(dir).map_err(|e| io_err(dir, e))? {
        let path = entry.map_err(|e| io_err(dir, e))?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
        if name == MANIFEST_FILE || (name.starts_with("champion-") && name.ends_with(".json")) {
            fs::remove_file(&path).map_err(|e| io_err(&path, e))?;
        }
    }
    let mut payloads = Vec::new();
    let mut champions = Vec::new();
    for c in &model.champions {
        let file = champion_file(c.label_index);
        let bytes = to_json(&c.model);
        champions.push(ChampionEntry {
            label_index: c.label_index,
            label: model.vocabulary.labels[c.label_index].clone(),
            kind: c.kind,
            params: c.params.clone(),
            cv_precision: c.cv_precision,
            cv_ppv: c.cv_ppv,
            file: file.clone(),
            sha256: sha_hex(&bytes),
        });
        payloads.push((file, bytes));
    }
    let manifest = BundleManifest {
        format_version: FORMAT_VERSION,
        float_format: FLOAT_FORMAT.into(),
        config: config.cloned(),
        schema_id: model.schema_id.clone(),
        schema: model.schema.clone(),
        selected_features: model.selected.clone(),
        vocabulary: model.vocabulary.clone(),
        decision_offset: model.decision_offset,
        champions,
        macro_ap: model.macro_ap(),
        metrics: metrics.cloned(),
        payload_sha256: payload_digest(&payloads),
    };
    for (file, bytes) in &payloads {
        let p = dir.join(file);
        fs::write(&p, bytes).map_err(|e| io_err(&p, e))?;
    }
    write_manifest(dir, &manifest)?;
    Ok(manifest)
}

/// Rewrite only the manifest (payloads untouched).
pub fn write_manifest(dir: &Path, manifest: &BundleManifest) -> Result<(), BundleError> {
    let p = dir.join(MANIFEST_FILE);
    fs::write(&p, to_json(manifest)).map_err(|e| io_err(&p, e))
}

pub fn read_manifest(dir: &Path) -> Result<BundleManifest, BundleError> {
    let p = dir.join(MANIFEST_FILE);
    let bytes = fs::read(&p).map_err(|e| io_err(&p, e))?;
    let manifest: BundleManifest = serde_json::from_slice(&bytes)
        .map_err(|e| BundleError::Json { path: p.display().to_string(), message: e.to_string() })?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(BundleError::Version(manifest.format_version));
    }
    Ok(manifest)
}

/// Load and verify a bundle.
pub fn load_bundle(dir: &Path) -> Result<(BundleManifest, EnsembleModel), BundleError> {
    let manifest = read_manifest(dir)?;
    let mut payloads = Vec::new();
    let mut champions = Vec::new();
    for (j, entry) in manifest.champions.iter().enumerate() {
        if entry.label_index != j {
            return Err(BundleError::Inconsistent(format!("champion {j} is labelled {}", entry.label_index)));
        }
        let p = dir.join(&entry.file);
        let bytes = fs::read(&p).map_err(|e| io_err(&p, e))?;
        if sha_hex(&bytes) != entry.sha256 {
            return Err(BundleError::HashMismatch(entry.file.clone()));
        }
        let model: FittedClassifier = serde_json::from_slice(&bytes)
            .map_err(|e| BundleError::Json { path: p.display().to_string(), message: e.to_string() })?;
        if model.params != entry.params || model.dim != manifest.selected_features.len() {
            return Err(BundleError::Inconsistent(format!("{} does not match the manifest", entry.file)));
        }
        champions.push(LabelChampion {
            label_index: j,
            kind: entry.kind,
            params: entry.params.clone(),
            cv_precision: entry.cv_precision,
            cv_ppv: entry.cv_ppv,
            model,
        });
        payloads.push((entry.file.clone(), bytes));
    }
    if payload_digest(&payloads) != manifest.payload_sha256 {
        return Err(BundleError::HashMismatch("payload set".into()));
    }
    if champions.len() != manifest.vocabulary.len() {
        return Err(BundleError::Inconsistent(format!(
            "{} champions for {} labels",
            champions.len(),
            manifest.vocabulary.len()
        )));
    }
    let dim = manifest.schema.dimension();
    if manifest.selected_features.iter().any(|&f| f >= dim) {
        return Err(BundleError::Inconsistent("selected feature index outside the schema".into()));
    }
    let model = EnsembleModel {
        schema_id: manifest.schema_id.clone(),
        schema: manifest.schema.clone(),
        selected: manifest.selected_features.clone(),
        vocabulary: manifest.vocabulary.clone(),
        decision_offset: manifest.decision_offset,
        champions,
    };
    Ok((manifest, model))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::{train_classifier, ClassifierParams, KnnParams};

    fn model() -> EnsembleModel {
        let x = vec![vec![0.0, 1.0], vec![1.0, 0.5], vec![2.0, 0.0], vec![3.0, 0.3]];
        let fit = |y: &[i8]| train_classifier(&x, y, &ClassifierParams::KNearestNeighbors(KnnParams { k: 1 }), 0).unwrap();
        let champ = |j: usize, y: &[i8]| LabelChampion {
            label_index: j,
            kind: ClassifierKind::KNearestNeighbors,
            params: ClassifierParams::KNearestNeighbors(KnnParams { k: 1 }),
            cv_precision: 0.1 + j as f64 / 3.0,
            cv_ppv: 0.5,
            model: fit(y),
        };
        EnsembleModel {
            schema_id: FeatureSchema::default().schema_id(),
            schema: FeatureSchema::default(),
            selected: vec![4, 17],
            vocabulary: LabelVocabulary::new(vec!["Nucleus".into(), "Cytoplasm".into()]).unwrap(),
            decision_offset: 0.0,
            champions: vec![champ(0, &[1, 1, -1, -1]), champ(1, &[-1, 1, -1, 1])],
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let m = model();
        let written = save_bundle(dir.path(), &m, None, None).unwrap();
        let (manifest, loaded) = load_bundle(dir.path()).unwrap();
        assert_eq!(manifest, written);
        assert_eq!(loaded, m);
        assert_eq!(manifest.macro_ap, m.macro_ap());
    }

    #[test]
    fn saving_twice_is_byte_identical() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        save_bundle(a.path(), &model(), None, None).unwrap();
        save_bundle(b.path(), &model(), None, None).unwrap();
        for f in [MANIFEST_FILE, "champion-000.json", "champion-001.json"] {
            assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap());
        }
    }

    #[test]
    fn tampering_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        save_bundle(dir.path(), &model(), None, None).unwrap();
        let p = dir.path().join("champion-001.json");
        let text = fs::read_to_string(&p).unwrap().replace("\"k\": 1", "\"k\": 2");
        fs::write(&p, text).unwrap();
        assert!(matches!(load_bundle(dir.path()), Err(BundleError::HashMismatch(f)) if f == "champion-001.json"));
    }

    #[test]
    fn missing_payload_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        save_bundle(dir.path(), &model(), None, None).unwrap();
        fs::remove_file(dir.path().join("champion-000.json")).unwrap();
        assert!(matches!(load_bundle(dir.path()), Err(BundleError::Io { .. })));
    }
}

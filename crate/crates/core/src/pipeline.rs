//! Stage orchestration over an output directory.
//!
//! Every stage reads its inputs from files written by earlier stages, so
//! running the stages one by one produces exactly what [`run`] produces.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::balance::{balance_all, balance_manifest, BalancedBinaryDataset};
use crate::bundle::{load_bundle, save_bundle, write_manifest};
use crate::config::PipelineConfig;
use crate::dataset::uniprot::{fetch_uniprot, PageSource};
use crate::dataset::{
    attach_labels, binary_relevance, derive_labels, normalize_residues, parse_fasta, parse_label_tsv,
    read_fasta_entries, redundancy_filter, serialize_fasta, write_label_tsv, BinaryDataset, MultiLabelDataset,
    SequenceRecord,
};
use crate::ensemble::{candidate_table_csv, cv_macro_ap, train_ensemble, EnsembleModel, EnsembleParams};
use crate::error::{Error, Result};
use crate::eval::{multilabel_metrics, MetricReport};
use crate::features::{FeatureMatrix, SchemaDescriptor};
use crate::rng;
use crate::select::{mrmd_rank, select_top_k, two_layer_search, DimensionSearchResult, FeatureRanking};

pub const FETCHED_FASTA: &str = "fetched.fasta";
pub const FETCHED_LABELS: &str = "fetched_labels.tsv";
pub const DATASET: &str = "dataset.json";
pub const DATASET_FASTA: &str = "dataset.fasta";
pub const DATASET_LABELS: &str = "labels.tsv";
pub const DATASET_MANIFEST: &str = "dataset_manifest.json";
pub const SPLIT: &str = "split.json";
pub const FEATURES: &str = "features.csv";
pub const SCHEMA: &str = "schema.json";
pub const BALANCED: &str = "balanced.json";
pub const RANKING: &str = "ranking.json";
pub const RANKING_CSV: &str = "ranking.csv";
pub const SEARCH: &str = "search.json";
pub const SEARCH_TRACE: &str = "search_trace.csv";
pub const CANDIDATES: &str = "candidates.csv";
pub const FOLDS: &str = "folds.csv";
pub const BUNDLE_DIR: &str = "bundle";
pub const REPORT: &str = "report.json";
pub const PREDICTIONS: &str = "holdout_predictions.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Fetch,
    Ingest,
    Extract,
    Balance,
    Select,
    Search,
    Train,
    Evaluate,
}

impl Stage {
    pub const ALL: [Stage; 8] = [
        Stage::Fetch,
        Stage::Ingest,
        Stage::Extract,
        Stage::Balance,
        Stage::Select,
        Stage::Search,
        Stage::Train,
        Stage::Evaluate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Fetch => "fetch",
            Stage::Ingest => "ingest",
            Stage::Extract => "extract",
            Stage::Balance => "balance",
            Stage::Select => "select",
            Stage::Search => "search",
            Stage::Train => "train",
            Stage::Evaluate => "evaluate",
        }
    }

    /// Files (relative to the output directory) this stage writes.
    pub fn outputs(self) -> &'static [&'static str] {
        match self {
            Stage::Fetch => &[FETCHED_FASTA, FETCHED_LABELS],
            Stage::Ingest => &[DATASET, DATASET_FASTA, DATASET_LABELS, DATASET_MANIFEST, SPLIT],
            Stage::Extract => &[FEATURES, SCHEMA],
            Stage::Balance => &[BALANCED],
            Stage::Select => &[RANKING, RANKING_CSV],
            Stage::Search => &[SEARCH, SEARCH_TRACE],
            Stage::Train => &[CANDIDATES, FOLDS, BUNDLE_DIR],
            Stage::Evaluate => &[REPORT, PREDICTIONS],
        }
    }
}

/// Train/hold-out partition of the ingested dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoldoutSplit {
    pub fraction: f64,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Shuffle with the `holdout` stream and hold out `round(n * fraction)`
/// samples. Both index lists are sorted.
pub fn holdout_split(n: usize, fraction: f64, seed: u64) -> HoldoutSplit {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::stream(seed, "holdout"));
    let n_test = ((n as f64 * fraction).round() as usize).min(n);
    let mut test = order[..n_test].to_vec();
    let mut train = order[n_test..].to_vec();
    test.sort_unstable();
    train.sort_unstable();
    HoldoutSplit { fraction, train, test }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutput {
    pub result: DimensionSearchResult,
    /// Top-`best_k` feature indices in ranking order.
    pub selected: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChampionSummary {
    pub label: String,
    pub kind: String,
    pub params: String,
    pub cv_precision: f64,
    pub cv_ppv: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    /// Mean champion CV precision, the headline number.
    pub cv_macro_ap: f64,
    pub dimension: usize,
    pub champions: Vec<ChampionSummary>,
    /// Metrics on the held-out samples; absent when nothing was held out.
    pub holdout: Option<MetricReport>,
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("pipeline values serialize");
    text.push('\n');
    write_text(path, &text)
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

fn sha_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn require(out: &Path, file: &str, producer: Stage) -> Result<PathBuf> {
    let p = out.join(file);
    if p.exists() {
        Ok(p)
    } else {
        Err(Error::Format(format!("{} not found; run the `{}` stage first", p.display(), producer.name())))
    }
}

/// Download the configured UniProt query into `fetched.fasta` and
/// `fetched_labels.tsv`.
pub fn fetch(cfg: &PipelineConfig, out: &Path, source: &dyn PageSource, cache: Option<&Path>) -> Result<usize> {
    let u = cfg
        .data
        .uniprot
        .as_ref()
        .ok_or_else(|| Error::Format("fetch needs a [data.uniprot] section".into()))?;
    let records = fetch_uniprot(source, &u.query, u.page_limit, cache)?;
    write_text(&out.join(FETCHED_FASTA), &serialize_fasta(&records))?;
    write_text(&out.join(FETCHED_LABELS), &write_label_tsv(&records))?;
    Ok(records.len())
}

/// Load sequences and labels, drop records too short for the feature schema,
/// derive the label vocabulary, remove redundancy and split off the hold-out.
pub fn ingest(cfg: &PipelineConfig, out: &Path) -> Result<MultiLabelDataset> {
    let (fasta_path, labels_path, snapshot) = match (&cfg.data.fasta, &cfg.data.labels) {
        (Some(f), Some(l)) => (f.clone(), l.clone(), None),
        _ => {
            let u = cfg.data.uniprot.as_ref().map(|u| u.query.clone()).unwrap_or_default();
            (
                require(out, FETCHED_FASTA, Stage::Fetch)?,
                require(out, FETCHED_LABELS, Stage::Fetch)?,
                Some(format!("uniprot query: {u}")),
            )
        }
    };
    let fasta = read_text(&fasta_path)?;
    let labels = read_text(&labels_path)?;
    let snapshot = snapshot.or_else(|| {
        let mut bytes = fasta.as_bytes().to_vec();
        bytes.extend_from_slice(labels.as_bytes());
        Some(format!("sha256:{}", sha_hex(&bytes)))
    });
    let mut records = parse_fasta(&fasta)?;
    attach_labels(&mut records, &parse_label_tsv(&labels)?);
    let min_len = cfg.features.min_length();
    let before = records.len();
    records.retain(|r| r.residues.len() >= min_len);
    if records.len() < before {
        log::warn!("dropped {} record(s) shorter than {min_len} residues", before - records.len());
    }
    let dataset = derive_labels(&records, cfg.data.top_n)?;
    let dataset = redundancy_filter(&dataset, cfg.data.identity_threshold)?;
    let split = holdout_split(dataset.len(), cfg.data.holdout_fraction, cfg.seed);
    log::info!(
        "ingested {} samples, {} labels ({} train / {} hold-out)",
        dataset.len(),
        dataset.vocabulary.len(),
        split.train.len(),
        split.test.len()
    );
    write_json(&out.join(DATASET), &dataset)?;
    write_text(&out.join(DATASET_FASTA), &serialize_fasta(&dataset.records))?;
    let labelled: Vec<SequenceRecord> = dataset
        .records
        .iter()
        .zip(&dataset.labelsets)
        .map(|(r, set)| SequenceRecord {
            locations: set.iter().map(|&j| dataset.vocabulary.labels[j].clone()).collect(),
            ..r.clone()
        })
        .collect();
    write_text(&out.join(DATASET_LABELS), &write_label_tsv(&labelled))?;
    write_json(&out.join(DATASET_MANIFEST), &dataset.manifest(cfg.data.identity_threshold, snapshot))?;
    write_json(&out.join(SPLIT), &split)?;
    Ok(dataset)
}

pub fn load_dataset(out: &Path) -> Result<(MultiLabelDataset, HoldoutSplit)> {
    let dataset: MultiLabelDataset = read_json(&require(out, DATASET, Stage::Ingest)?)?;
    let split: HoldoutSplit = read_json(&require(out, SPLIT, Stage::Ingest)?)?;
    if split.train.iter().chain(&split.test).any(|&i| i >= dataset.len()) {
        return Err(Error::Format("split.json does not match dataset.json".into()));
    }
    Ok((dataset, split))
}

/// Extract the configured feature schema for every ingested sequence.
pub fn extract(cfg: &PipelineConfig, out: &Path) -> Result<FeatureMatrix> {
    let (dataset, _) = load_dataset(out)?;
    let matrix = cfg
        .features
        .extract_batch(dataset.records.iter().map(|r| (r.accession.as_str(), r.residues.as_str())))?;
    let path = out.join(FEATURES);
    let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    matrix.write_csv(std::io::BufWriter::new(file))?;
    write_json(&out.join(SCHEMA), &SchemaDescriptor::new(&cfg.features))?;
    Ok(matrix)
}

pub fn load_features(cfg: &PipelineConfig, out: &Path) -> Result<FeatureMatrix> {
    let descriptor: SchemaDescriptor = read_json(&require(out, SCHEMA, Stage::Extract)?)?;
    let expected = cfg.features.schema_id();
    if descriptor.schema_id != expected {
        return Err(Error::Format(format!(
            "features were extracted with schema {}, config expects {expected}",
            descriptor.schema_id
        )));
    }
    let path = require(out, FEATURES, Stage::Extract)?;
    let file = fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
    Ok(FeatureMatrix::read_csv(std::io::BufReader::new(file), &expected)?)
}

/// Binary relevance on the training samples, then boundary under-sampling
/// per label. Indices in the output refer to the full dataset.
pub fn balance(cfg: &PipelineConfig, out: &Path) -> Result<Vec<BalancedBinaryDataset>> {
    let (dataset, split) = load_dataset(out)?;
    let x = load_features(cfg, out)?;
    if x.n_rows() != dataset.len() {
        return Err(Error::Format("features.csv does not match dataset.json".into()));
    }
    let train = dataset.subset(&split.train);
    let binaries: Vec<BinaryDataset> = binary_relevance(&train)?
        .into_iter()
        .map(|b| BinaryDataset {
            label_index: b.label_index,
            positives: b.positives.iter().map(|&i| split.train[i]).collect(),
            negatives: b.negatives.iter().map(|&i| split.train[i]).collect(),
        })
        .collect();
    let sets = balance_all(&binaries, &x, &cfg.balance, cfg.seed)?;
    write_text(&out.join(BALANCED), &(balance_manifest(&sets) + "\n"))?;
    Ok(sets)
}

pub fn load_balanced(out: &Path) -> Result<Vec<BalancedBinaryDataset>> {
    read_json(&require(out, BALANCED, Stage::Balance)?)
}

/// MRMD ranking over the pooled balanced sets: each balanced set contributes
/// its samples with `+1` / `-1` targets.
pub fn select(cfg: &PipelineConfig, out: &Path) -> Result<FeatureRanking> {
    let x = load_features(cfg, out)?;
    let sets = load_balanced(out)?;
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for s in &sets {
        for (i, label) in s.samples() {
            rows.push(x.rows[i].clone());
            y.push(f64::from(label));
        }
    }
    let s = &cfg.select;
    let ranking = mrmd_rank(&rows, &y, s.w_r, s.w_d, s.metric)?;
    write_json(&out.join(RANKING), &ranking)?;
    write_text(&out.join(RANKING_CSV), &ranking.to_csv(&x.column_names)?)?;
    Ok(ranking)
}

/// Two-layer search over the ranking prefix length, scoring each prefix by
/// cross-validated macro AP with the search classifiers.
pub fn search(cfg: &PipelineConfig, out: &Path) -> Result<SearchOutput> {
    let x = load_features(cfg, out)?;
    let sets = load_balanced(out)?;
    let ranking: FeatureRanking = read_json(&require(out, RANKING, Stage::Select)?)?;
    let seed = rng::derive_seed(cfg.seed, "search");
    let evaluator = |k: usize| -> Result<f64> {
        let features = select_top_k(&ranking, k)?;
        Ok(cv_macro_ap(&sets, &x, &features, &cfg.search.classifiers, cfg.search.folds, seed)?)
    };
    let result = two_layer_search(evaluator, cfg.select.coarse_step, x.n_cols(), cfg.select.workers)?;
    log::info!("best dimension {} (cv macro AP {:.4})", result.best_k, result.best_score);
    let output = SearchOutput { selected: select_top_k(&ranking, result.best_k)?, result };
    write_json(&out.join(SEARCH), &output)?;
    write_text(&out.join(SEARCH_TRACE), &output.result.trace_csv())?;
    Ok(output)
}

/// Per-label champion selection on the searched features, then the bundle.
pub fn train(cfg: &PipelineConfig, out: &Path) -> Result<EnsembleModel> {
    let (dataset, _) = load_dataset(out)?;
    let x = load_features(cfg, out)?;
    let sets = load_balanced(out)?;
    let search: SearchOutput = read_json(&require(out, SEARCH, Stage::Search)?)?;
    let params = EnsembleParams { folds: cfg.ensemble.folds, decision_offset: cfg.ensemble.decision_offset };
    let training = train_ensemble(
        &sets,
        &x,
        &cfg.features,
        &search.selected,
        &dataset.vocabulary,
        &cfg.ensemble.classifiers,
        &params,
        cfg.seed,
    )?;
    write_text(&out.join(CANDIDATES), &candidate_table_csv(&training.candidates, &training.model.champions))?;
    let mut folds = csv::Writer::from_writer(Vec::new());
    folds.write_record(["label", "name", "kind", "params", "fold", "precision", "ppv"]).expect("in-memory csv");
    for champ in &training.model.champions {
        let row = training
            .candidates
            .iter()
            .find(|c| c.label_index == champ.label_index && c.params == champ.params)
            .expect("champion comes from the candidate table");
        for (f, (p, ppv)) in row.fold_precision.iter().zip(&row.fold_ppv).enumerate() {
            folds
                .write_record([
                    champ.label_index.to_string(),
                    dataset.vocabulary.labels[champ.label_index].clone(),
                    champ.kind.to_string(),
                    champ.params.describe(),
                    f.to_string(),
                    p.to_string(),
                    ppv.to_string(),
                ])
                .expect("in-memory csv");
        }
    }
    let folds = String::from_utf8(folds.into_inner().expect("in-memory csv")).expect("csv is utf-8");
    write_text(&out.join(FOLDS), &folds)?;
    save_bundle(&out.join(BUNDLE_DIR), &training.model, Some(cfg), None)?;
    Ok(training.model)
}

/// Score the hold-out samples with the saved bundle and record the metrics
/// in `report.json` and the bundle manifest.
pub fn evaluate(cfg: &PipelineConfig, out: &Path) -> Result<PipelineReport> {
    let (dataset, split) = load_dataset(out)?;
    let x = load_features(cfg, out)?;
    let bundle_dir = require(out, BUNDLE_DIR, Stage::Train)?;
    let (mut manifest, model) = load_bundle(&bundle_dir)?;
    if model.vocabulary != dataset.vocabulary {
        return Err(Error::Format("bundle vocabulary does not match dataset.json".into()));
    }
    let mut predictions = Vec::with_capacity(split.test.len());
    let mut scores = Vec::with_capacity(split.test.len());
    let mut truth = Vec::with_capacity(split.test.len());
    let mut csv_out = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["id".to_string(), "truth".into(), "predicted".into()];
    header.extend(model.vocabulary.labels.iter().map(|l| format!("score:{l}")));
    csv_out.write_record(&header).expect("in-memory csv");
    let names = |set: &BTreeSet<usize>| set.iter().map(|&j| model.vocabulary.labels[j].as_str()).collect::<Vec<_>>().join(";");
    for &i in &split.test {
        let p = model.predict_features(&x.rows[i])?;
        let mut rec = vec![dataset.records[i].accession.clone(), names(&dataset.labelsets[i]), names(&p.labels)];
        rec.extend(p.scores.iter().map(f64::to_string));
        csv_out.write_record(&rec).expect("in-memory csv");
        predictions.push(p.labels);
        scores.push(p.scores);
        truth.push(dataset.labelsets[i].clone());
    }
    let holdout = if truth.is_empty() { None } else { Some(multilabel_metrics(&predictions, &scores, &truth)?) };
    let report = PipelineReport {
        cv_macro_ap: model.macro_ap(),
        dimension: model.selected.len(),
        champions: model
            .champions
            .iter()
            .map(|c| ChampionSummary {
                label: model.vocabulary.labels[c.label_index].clone(),
                kind: c.kind.to_string(),
                params: c.params.describe(),
                cv_precision: c.cv_precision,
                cv_ppv: c.cv_ppv,
            })
            .collect(),
        holdout: holdout.clone(),
    };
    let text = String::from_utf8(csv_out.into_inner().expect("in-memory csv")).expect("csv is utf-8");
    write_text(&out.join(PREDICTIONS), &text)?;
    write_json(&out.join(REPORT), &report)?;
    manifest.metrics = holdout;
    write_manifest(&bundle_dir, &manifest)?;
    if let Some(h) = &report.holdout {
        log::info!(
            "cv macro AP {:.4}; hold-out macro AP {:.4}, subset accuracy {:.4}",
            report.cv_macro_ap,
            h.macro_ap,
            h.subset_accuracy
        );
    }
    Ok(report)
}

fn remove_outputs(out: &Path, stage: Stage) {
    for file in stage.outputs() {
        let p = out.join(file);
        let result = if p.is_dir() { fs::remove_dir_all(&p) } else { fs::remove_file(&p) };
        if let Err(e) = result {
            if e.kind() != std::io::ErrorKind::NotFound {
                log::warn!("could not remove {}: {e}", p.display());
            }
        }
    }
}

/// Run one stage. On failure its partial outputs are removed and the error
/// is tagged with the stage name.
pub fn run_stage(cfg: &PipelineConfig, out: &Path, stage: Stage, source: Option<&dyn PageSource>, cache: Option<&Path>) -> Result<()> {
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let result = match stage {
        Stage::Fetch => match source {
            Some(src) => fetch(cfg, out, src, cache).map(drop),
            None => Err(Error::Format("fetch needs a page source".into())),
        },
        Stage::Ingest => ingest(cfg, out).map(drop),
        Stage::Extract => extract(cfg, out).map(drop),
        Stage::Balance => balance(cfg, out).map(drop),
        Stage::Select => select(cfg, out).map(drop),
        Stage::Search => search(cfg, out).map(drop),
        Stage::Train => train(cfg, out).map(drop),
        Stage::Evaluate => evaluate(cfg, out).map(drop),
    };
    result.map_err(|e| {
        remove_outputs(out, stage);
        Error::Stage { stage: stage.name(), source: Box::new(e) }
    })
}

/// Validate the config and run every stage in order (fetch only for UniProt
/// sources). A failing run leaves none of its outputs behind.
pub fn run(cfg: &PipelineConfig, out: &Path, source: Option<&dyn PageSource>, cache: Option<&Path>) -> Result<PipelineReport> {
    cfg.validate()?;
    let stages: Vec<Stage> = Stage::ALL
        .into_iter()
        .filter(|&s| s != Stage::Fetch || cfg.data.uniprot.is_some())
        .collect();
    for (n, &stage) in stages.iter().enumerate() {
        log::info!("stage {}", stage.name());
        if let Err(e) = run_stage(cfg, out, stage, source, cache) {
            for &done in &stages[..n] {
                remove_outputs(out, done);
            }
            return Err(e);
        }
    }
    read_json(&out.join(REPORT))
}

/// Prediction for one FASTA record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordPrediction {
    pub id: String,
    pub labels: Vec<String>,
    pub scores: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Predict every record of a FASTA text. Structural FASTA errors fail the
/// whole batch; records that cannot be featurized get an `error` entry.
pub fn predict_fasta(model: &EnsembleModel, fasta: &str) -> Result<Vec<RecordPrediction>> {
    let entries = read_fasta_entries(fasta)?;
    Ok(entries
        .iter()
        .map(|e| {
            let (residues, _) = normalize_residues(&e.sequence);
            match model.predict_sequence(&residues) {
                Ok(p) => RecordPrediction {
                    id: e.accession.clone(),
                    labels: p.labels.iter().map(|&j| model.vocabulary.labels[j].clone()).collect(),
                    scores: model.vocabulary.labels.iter().cloned().zip(p.scores).collect(),
                    error: None,
                },
                Err(err) => RecordPrediction {
                    id: e.accession.clone(),
                    labels: Vec::new(),
                    scores: BTreeMap::new(),
                    error: Some(err.to_string()),
                },
            }
        })
        .collect())
}

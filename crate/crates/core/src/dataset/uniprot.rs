//! UniProtKB page retrieval with an on-disk cache.
//!
//! Pages are requested in TSV form with the columns `Entry`, `Sequence` and
//! `Subcellular location [CC]`. The transport is abstracted behind
//! [`PageSource`] so tests and offline runs read fixture directories; the CLI
//! provides an HTTP implementation. Every fetched page is cached as
//! newline-delimited JSON records, and a cached page is always preferred over
//! the source.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{DatasetError, SequenceRecord};

/// Pinned REST endpoint used by the HTTP page source.
pub const DEFAULT_ENDPOINT: &str = "https://rest.uniprot.org/uniprotkb/search";
pub const TSV_FIELDS: &str = "accession,sequence,cc_subcellular_location";

/// One raw response page and the cursor of the next page, if any.
#[derive(Debug, Clone)]
pub struct Page {
    pub body: String,
    pub next: Option<String>,
}

pub trait PageSource {
    /// Fetch the page at `cursor` (`None` = first page).
    fn fetch_page(&self, query: &str, cursor: Option<&str>) -> Result<Page, DatasetError>;
}

/// Reads `*.tsv` files from a directory in file-name order, one file per page.
#[derive(Debug, Clone)]
pub struct FixtureSource {
    dir: PathBuf,
}

impl FixtureSource {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        FixtureSource { dir: dir.into() }
    }

    fn pages(&self) -> Result<Vec<PathBuf>, DatasetError> {
        let mut files: Vec<PathBuf> = fs::read_dir(&self.dir)
            .map_err(|e| DatasetError::Transport(format!("{}: {e}", self.dir.display())))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "tsv"))
            .collect();
        files.sort();
        Ok(files)
    }
}

impl PageSource for FixtureSource {
    fn fetch_page(&self, _query: &str, cursor: Option<&str>) -> Result<Page, DatasetError> {
        let pages = self.pages()?;
        let idx: usize = match cursor {
            None => 0,
            Some(c) => c
                .parse()
                .map_err(|_| DatasetError::Transport(format!("bad fixture cursor `{c}`")))?,
        };
        let path = pages
            .get(idx)
            .ok_or_else(|| DatasetError::Transport(format!("fixture page {idx} does not exist")))?;
        let body = fs::read_to_string(path)
            .map_err(|e| DatasetError::Transport(format!("{}: {e}", path.display())))?;
        let next = (idx + 1 < pages.len()).then(|| (idx + 1).to_string());
        Ok(Page { body, next })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CachedRecord {
    accession: String,
    residues: String,
    locations: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CachedPageMeta {
    next: Option<String>,
    rejected: Vec<String>,
}

/// Split a `Subcellular location [CC]` comment into location terms.
///
/// Evidence tags (`{ECO:...}`), isoform prefixes (`[Isoform 2]:`) and `Note=`
/// paragraphs are removed; topology qualifiers after `;` are kept so that the
/// caller's normalization decides what to drop.
pub fn parse_location_comment(comment: &str) -> Vec<String> {
    let mut text = String::with_capacity(comment.len());
    let mut depth = 0usize;
    for c in comment.chars() {
        match c {
            '{' => depth += 1,
            '}' => depth = depth.saturating_sub(1),
            _ if depth == 0 => text.push(c),
            _ => {}
        }
    }
    let mut out = Vec::new();
    for section in text.split("SUBCELLULAR LOCATION:") {
        let section = section.split("Note=").next().unwrap_or("");
        let section = match section.trim_start().strip_prefix('[') {
            Some(rest) => rest.split_once("]:").map(|(_, s)| s).unwrap_or(rest),
            None => section,
        };
        for term in section.split('.') {
            let term = term.trim().trim_end_matches(';').trim();
            if !term.is_empty() {
                out.push(term.to_string());
            }
        }
    }
    out
}

/// Parse one TSV page into records. Records with an empty sequence after
/// normalization are rejected; their accessions are returned separately.
pub fn parse_tsv_page(body: &str) -> Result<(Vec<SequenceRecord>, Vec<String>), DatasetError> {
    let mut lines = body.lines().filter(|l| !l.trim().is_empty());
    let header = match lines.next() {
        Some(h) => h,
        None => return Ok((Vec::new(), Vec::new())),
    };
    let cols: Vec<&str> = header.split('\t').map(str::trim).collect();
    let find = |name: &str| {
        cols.iter()
            .position(|c| c.eq_ignore_ascii_case(name))
            .ok_or_else(|| DatasetError::Parse(format!("missing column `{name}` in header")))
    };
    let acc_col = find("Entry")?;
    let seq_col = find("Sequence")?;
    let loc_col = find("Subcellular location [CC]")?;
    let mut records = Vec::new();
    let mut rejected = Vec::new();
    for (i, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split('\t').collect();
        let get = |c: usize| {
            fields.get(c).copied().ok_or_else(|| {
                DatasetError::Parse(format!(
                    "record {} (`{}`) has {} fields, expected {}",
                    i + 1,
                    fields.first().copied().unwrap_or(""),
                    fields.len(),
                    cols.len()
                ))
            })
        };
        let accession = get(acc_col)?.trim().to_string();
        if accession.is_empty() {
            return Err(DatasetError::Parse(format!("record {} has an empty accession", i + 1)));
        }
        let locations = parse_location_comment(get(loc_col)?);
        match SequenceRecord::new(accession.clone(), get(seq_col)?, locations) {
            Ok(r) => records.push(r),
            Err(_) => {
                log::warn!("{accession}: empty residue string, record rejected");
                rejected.push(accession);
            }
        }
    }
    Ok((records, rejected))
}

fn cache_dir_for(root: &Path, query: &str) -> PathBuf {
    let digest = Sha256::digest(query.as_bytes());
    root.join(format!("uniprot-{}", &hex::encode(digest)[..16]))
}

fn cache_err(path: &Path, e: impl std::fmt::Display) -> DatasetError {
    DatasetError::Cache(format!("{}: {e}", path.display()))
}

fn read_cached(dir: &Path, page: usize) -> Result<Option<(Vec<SequenceRecord>, CachedPageMeta)>, DatasetError> {
    let data = dir.join(format!("page-{page:05}.ndjson"));
    let meta = dir.join(format!("page-{page:05}.meta.json"));
    if !data.exists() || !meta.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(&data).map_err(|e| cache_err(&data, e))?;
    let mut records = Vec::new();
    for line in text.lines().filter(|l| !l.is_empty()) {
        let r: CachedRecord = serde_json::from_str(line).map_err(|e| cache_err(&data, e))?;
        records.push(SequenceRecord {
            accession: r.accession,
            residues: r.residues,
            locations: r.locations,
        });
    }
    let meta_text = fs::read_to_string(&meta).map_err(|e| cache_err(&meta, e))?;
    let meta: CachedPageMeta = serde_json::from_str(&meta_text).map_err(|e| cache_err(&meta, e))?;
    Ok(Some((records, meta)))
}

fn write_cached(dir: &Path, page: usize, records: &[SequenceRecord], meta: &CachedPageMeta) -> Result<(), DatasetError> {
    fs::create_dir_all(dir).map_err(|e| cache_err(dir, e))?;
    let data = dir.join(format!("page-{page:05}.ndjson"));
    let mut text = String::new();
    for r in records {
        let c = CachedRecord {
            accession: r.accession.clone(),
            residues: r.residues.clone(),
            locations: r.locations.clone(),
        };
        text.push_str(&serde_json::to_string(&c).expect("plain struct serializes"));
        text.push('\n');
    }
    fs::write(&data, text).map_err(|e| cache_err(&data, e))?;
    let meta_path = dir.join(format!("page-{page:05}.meta.json"));
    fs::write(&meta_path, serde_json::to_string(meta).expect("plain struct serializes"))
        .map_err(|e| cache_err(&meta_path, e))
}

/// Fetch up to `page_limit` pages for `query`, deduplicating by accession
/// (first occurrence wins).
pub fn fetch_uniprot(
    source: &dyn PageSource,
    query: &str,
    page_limit: usize,
    cache_root: Option<&Path>,
) -> Result<Vec<SequenceRecord>, DatasetError> {
    let cache = cache_root.map(|root| cache_dir_for(root, query));
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    let mut cursor: Option<String> = None;
    for page in 0..page_limit {
        let cached = match &cache {
            Some(dir) => read_cached(dir, page)?,
            None => None,
        };
        let (records, meta) = match cached {
            Some(hit) => hit,
            None => {
                let raw = source.fetch_page(query, cursor.as_deref())?;
                let (records, rejected) = parse_tsv_page(&raw.body)?;
                let meta = CachedPageMeta {
                    next: raw.next,
                    rejected,
                };
                if let Some(dir) = &cache {
                    write_cached(dir, page, &records, &meta)?;
                }
                (records, meta)
            }
        };
        for r in records {
            if seen.insert(r.accession.clone()) {
                out.push(r);
            }
        }
        match meta.next {
            Some(next) => cursor = Some(next),
            None => break,
        }
    }
    Ok(out)
}

use std::collections::BTreeMap;

use super::{DatasetError, SequenceRecord};

/// Parse `accession<TAB>loc1,loc2,...` lines. Blank lines and `#` comments are
/// skipped. A repeated accession appends to its location list.
pub fn parse_label_tsv(text: &str) -> Result<BTreeMap<String, Vec<String>>, DatasetError> {
    let mut out: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (acc, locs) = line.split_once('\t').ok_or_else(|| DatasetError::LabelFile {
            line: i + 1,
            message: "expected accession<TAB>locations".into(),
        })?;
        let acc = acc.trim();
        if acc.is_empty() {
            return Err(DatasetError::LabelFile {
                line: i + 1,
                message: "empty accession".into(),
            });
        }
        let entry = out.entry(acc.to_string()).or_default();
        entry.extend(
            locs.split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(String::from),
        );
    }
    Ok(out)
}

pub fn write_label_tsv(records: &[SequenceRecord]) -> String {
    let mut out = String::new();
    for rec in records {
        out.push_str(&rec.accession);
        out.push('\t');
        out.push_str(&rec.locations.join(","));
        out.push('\n');
    }
    out
}

/// Attach locations from a label map. Records without an entry keep an empty
/// location list (and are later dropped by label derivation).
pub fn attach_labels(records: &mut [SequenceRecord], labels: &BTreeMap<String, Vec<String>>) {
    for rec in records {
        if let Some(locs) = labels.get(&rec.accession) {
            rec.locations = locs.clone();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_merges() {
        let map = parse_label_tsv("P1\tNucleus, Cytoplasm\n\n# c\nP2\tSecreted\nP1\tMembrane\n").unwrap();
        assert_eq!(map["P1"], vec!["Nucleus", "Cytoplasm", "Membrane"]);
        assert_eq!(map["P2"], vec!["Secreted"]);
    }

    #[test]
    fn missing_tab() {
        assert!(matches!(
            parse_label_tsv("P1 Nucleus"),
            Err(DatasetError::LabelFile { line: 1, .. })
        ));
    }
}

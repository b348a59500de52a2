use super::{normalize_residues, DatasetError, SequenceRecord};

const LINE_WIDTH: usize = 60;

/// A raw FASTA record before residue normalization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FastaEntry {
    pub accession: String,
    pub description: String,
    pub sequence: String,
    /// 1-based line of the header.
    pub line: usize,
}

/// Split FASTA text into raw entries. Sequence lines are concatenated with
/// whitespace removed; no residue validation happens here.
pub fn read_fasta_entries(text: &str) -> Result<Vec<FastaEntry>, DatasetError> {
    let mut entries: Vec<FastaEntry> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = line.trim_end_matches('\r');
        if let Some(header) = line.strip_prefix('>') {
            let header = header.trim();
            let mut parts = header.splitn(2, char::is_whitespace);
            let accession = parts.next().unwrap_or("").to_string();
            if accession.is_empty() {
                return Err(DatasetError::Format {
                    line: line_no,
                    message: "header without an identifier".into(),
                });
            }
            let description = parts.next().unwrap_or("").trim().to_string();
            entries.push(FastaEntry {
                accession,
                description,
                sequence: String::new(),
                line: line_no,
            });
        } else if line.trim().is_empty() || line.starts_with(';') {
            continue;
        } else {
            match entries.last_mut() {
                Some(entry) => entry
                    .sequence
                    .extend(line.chars().filter(|c| !c.is_whitespace())),
                None => {
                    return Err(DatasetError::Format {
                        line: line_no,
                        message: "sequence data before any header".into(),
                    })
                }
            }
        }
    }
    Ok(entries)
}

/// Parse FASTA text into normalized records.
///
/// Residues are uppercased and non-canonical letters deleted. Records that
/// end up empty are skipped with a warning.
pub fn parse_fasta(text: &str) -> Result<Vec<SequenceRecord>, DatasetError> {
    let mut out = Vec::new();
    for entry in read_fasta_entries(text)? {
        let (residues, removed) = normalize_residues(&entry.sequence);
        if removed > 0 {
            log::warn!("{}: removed {removed} non-canonical residue(s)", entry.accession);
        }
        if residues.is_empty() {
            log::warn!(
                "{} (line {}): empty sequence rejected",
                entry.accession,
                entry.line
            );
            continue;
        }
        out.push(SequenceRecord {
            accession: entry.accession,
            residues,
            locations: Vec::new(),
        });
    }
    Ok(out)
}

/// Write records as FASTA with 60-column sequence lines. Locations are not
/// part of FASTA; they travel in the label TSV.
pub fn serialize_fasta(records: &[SequenceRecord]) -> String {
    let mut out = String::new();
    for rec in records {
        out.push('>');
        out.push_str(&rec.accession);
        out.push('\n');
        let bytes = rec.residues.as_bytes();
        for chunk in bytes.chunks(LINE_WIDTH) {
            out.push_str(std::str::from_utf8(chunk).expect("residues are ASCII"));
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn joins_lines() {
        let recs = parse_fasta(">P1\nACDE\nFGHI").unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].accession, "P1");
        assert_eq!(recs[0].residues, "ACDEFGHI");
    }

    #[test]
    fn empty_input() {
        assert!(parse_fasta("").unwrap().is_empty());
    }

    #[test]
    fn empty_record_is_rejected() {
        let recs = parse_fasta(">P1\n>P2\nAA").unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].accession, "P2");
    }

    #[test]
    fn data_before_header() {
        let err = parse_fasta("\nACDE\n>P1\nAA").unwrap_err();
        assert!(matches!(err, DatasetError::Format { line: 2, .. }));
    }

    #[test]
    fn accession_is_first_token_and_lowercase_is_upcased() {
        let recs = parse_fasta(">sp|P1|X desc text\r\nacd\r\n").unwrap();
        assert_eq!(recs[0].accession, "sp|P1|X");
        assert_eq!(recs[0].residues, "ACD");
    }

    proptest! {
        #[test]
        fn round_trip(seqs in prop::collection::vec("[ACDEFGHIKLMNPQRSTVWY]{1,200}", 0..8)) {
            let records: Vec<SequenceRecord> = seqs
                .iter()
                .enumerate()
                .map(|(i, s)| SequenceRecord { accession: format!("P{i}"), residues: s.clone(), locations: vec![] })
                .collect();
            let parsed = parse_fasta(&serialize_fasta(&records)).unwrap();
            prop_assert_eq!(parsed, records);
        }
    }
}

//! Amino acid composition, CTD descriptors and the 188-dimensional classical
//! vector.

use super::properties::{PropertyTable, CTD_PROPERTIES};
use super::{check_canonical, FeatureError, FeatureVector};
use crate::dataset::AMINO_ACIDS;

pub const AAC_DIM: usize = 20;
pub const CTD_DIM: usize = 21;
pub const CLASSIC_DIM: usize = AAC_DIM + CTD_DIM * 8;

const QUANTILES: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

pub(crate) fn aac_values(seq: &[u8]) -> Vec<f64> {
    let mut counts = [0usize; 256];
    for &b in seq {
        counts[b as usize] += 1;
    }
    let n = seq.len() as f64;
    AMINO_ACIDS.iter().map(|&a| counts[a as usize] as f64 / n).collect()
}

/// Residue frequencies in `ACDEFGHIKLMNPQRSTVWY` order.
pub fn extract_aac(seq: &str) -> Result<FeatureVector, FeatureError> {
    let bytes = seq.as_bytes();
    if bytes.is_empty() {
        return Err(FeatureError::TooShort { required: 1, actual: 0 });
    }
    check_canonical(bytes)?;
    Ok(FeatureVector::new(aac_values(bytes), "aac20"))
}

pub(crate) fn ctd_values(seq: &[u8], table: &PropertyTable) -> Vec<f64> {
    let lookup = table.lookup();
    let groups: Vec<usize> = seq.iter().map(|&b| lookup[b as usize] as usize).collect();
    let n = groups.len();
    let mut out = Vec::with_capacity(CTD_DIM);

    let mut counts = [0usize; 3];
    for &g in &groups {
        counts[g] += 1;
    }
    out.extend(counts.iter().map(|&c| c as f64 / n as f64));

    // transitions for the unordered pairs (1,2), (1,3), (2,3)
    let mut trans = [0usize; 3];
    for w in groups.windows(2) {
        match (w[0].min(w[1]), w[0].max(w[1])) {
            (0, 1) => trans[0] += 1,
            (0, 2) => trans[1] += 1,
            (1, 2) => trans[2] += 1,
            _ => {}
        }
    }
    out.extend(trans.iter().map(|&t| t as f64 / (n - 1) as f64));

    for g in 0..3 {
        let positions: Vec<usize> = groups
            .iter()
            .enumerate()
            .filter(|(_, &x)| x == g)
            .map(|(i, _)| i + 1)
            .collect();
        if positions.is_empty() {
            out.extend([0.0; 5]);
            continue;
        }
        let count = positions.len();
        for q in QUANTILES {
            let occurrence = ((q * count as f64).ceil() as usize).max(1);
            out.push(positions[occurrence - 1] as f64 / n as f64);
        }
    }
    out
}

/// Composition (3), transition (3) and distribution (15) values of `seq`
/// under the three-group partition `table`.
///
/// Distribution entries are the positions of the first, 25 %, 50 %, 75 % and
/// last residue of each group, taken as the `ceil(q * n_g)`-th occurrence and
/// divided by the sequence length.
pub fn extract_ctd(seq: &str, table: &PropertyTable) -> Result<FeatureVector, FeatureError> {
    let bytes = seq.as_bytes();
    if bytes.len() < 2 {
        return Err(FeatureError::TooShort { required: 2, actual: bytes.len() });
    }
    check_canonical(bytes)?;
    Ok(FeatureVector::new(ctd_values(bytes, table), format!("ctd21:{}", table.name)))
}

pub(crate) fn classic_values(seq: &[u8]) -> Vec<f64> {
    let mut out = aac_values(seq);
    for table in &CTD_PROPERTIES {
        out.extend(ctd_values(seq, table));
    }
    out
}

/// AAC followed by CTD for the eight properties: 20 + 8 * 21 = 188 values.
pub fn extract_188(seq: &str) -> Result<FeatureVector, FeatureError> {
    let bytes = seq.as_bytes();
    if bytes.len() < 2 {
        return Err(FeatureError::TooShort { required: 2, actual: bytes.len() });
    }
    check_canonical(bytes)?;
    let v = FeatureVector::new(classic_values(bytes), "classic188");
    debug_assert_eq!(v.values.len(), CLASSIC_DIM);
    Ok(v)
}

pub(crate) fn classic_column_names() -> Vec<String> {
    let mut names: Vec<String> = AMINO_ACIDS.iter().map(|&a| format!("aac.{}", a as char)).collect();
    for t in &CTD_PROPERTIES {
        for g in 1..=3 {
            names.push(format!("ctd.{}.c{g}", t.name));
        }
        for pair in ["12", "13", "23"] {
            names.push(format!("ctd.{}.t{pair}", t.name));
        }
        for g in 1..=3 {
            for q in ["0", "25", "50", "75", "100"] {
                names.push(format!("ctd.{}.d{g}.q{q}", t.name));
            }
        }
    }
    names
}

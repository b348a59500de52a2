//! Sequence descriptors: the 188D classical vector, seven correlation-based
//! descriptors and their 350D concatenation.

mod classic;
mod covariance;
mod properties;
mod pseaac;

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use classic::{extract_188, extract_aac, extract_ctd, AAC_DIM, CLASSIC_DIM, CTD_DIM};
pub use covariance::{auto_covariance_with, extract_autocorr, extract_covariance, CovarianceMode, CovarianceSpec};
pub use properties::{PropertyScale, PropertyTable, ScaleId, CTD_PROPERTIES};
pub use pseaac::{extract_pc_pseaac, extract_sc_pseaac};

use crate::dataset::AMINO_ACIDS;

pub const HYBRID_DIM: usize = 350;
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeatureError {
    #[error("sequence too short: need at least {required} residues, got {actual}")]
    TooShort { required: usize, actual: usize },
    #[error("non-canonical residue `{0}`")]
    NonCanonical(char),
    #[error("invalid feature parameter: {0}")]
    BadParameter(String),
    #[error("record {index} (`{accession}`): {source}")]
    Record {
        index: usize,
        accession: String,
        #[source]
        source: Box<FeatureError>,
    },
    #[error("feature matrix: {0}")]
    Matrix(String),
}

pub(crate) fn check_canonical(seq: &[u8]) -> Result<(), FeatureError> {
    match seq.iter().find(|b| !AMINO_ACIDS.contains(b)) {
        Some(&b) => Err(FeatureError::NonCanonical(b as char)),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub schema_id: String,
}

impl FeatureVector {
    pub fn new(values: Vec<f64>, schema_id: impl Into<String>) -> Self {
        debug_assert!(values.iter().all(|v| v.is_finite()));
        FeatureVector {
            values,
            schema_id: schema_id.into(),
        }
    }
}

/// PseAAC block parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseAacSpec {
    pub lambda: usize,
    pub weight: f64,
    pub channels: Vec<ScaleId>,
}

impl PseAacSpec {
    fn scales(&self) -> Vec<PropertyScale> {
        self.channels.iter().map(|c| c.scale()).collect()
    }
}

/// Full hybrid recipe. [`FeatureSchema::default`] is the 350D layout:
/// 188D, AC, CC, ACC, PC-PseAAC, PC-PseAAC-General, SC-PseAAC,
/// SC-PseAAC-General.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureSchema {
    pub ac: CovarianceSpec,
    pub cc: CovarianceSpec,
    pub acc: CovarianceSpec,
    pub pc_pseaac: PseAacSpec,
    pub pc_pseaac_general: PseAacSpec,
    pub sc_pseaac: PseAacSpec,
    pub sc_pseaac_general: PseAacSpec,
}

impl Default for FeatureSchema {
    fn default() -> Self {
        use ScaleId::*;
        let pair = (Hydrophobicity, Hydrophilicity);
        FeatureSchema {
            ac: CovarianceSpec { auto: vec![Hydrophobicity, Hydrophilicity], cross: vec![], max_lag: 11 },
            cc: CovarianceSpec {
                auto: vec![],
                cross: vec![pair, (Hydrophilicity, Hydrophobicity)],
                max_lag: 11,
            },
            acc: CovarianceSpec { auto: vec![Hydrophobicity], cross: vec![pair], max_lag: 11 },
            pc_pseaac: PseAacSpec { lambda: 2, weight: 0.05, channels: vec![Hydrophobicity, Hydrophilicity] },
            pc_pseaac_general: PseAacSpec {
                lambda: 2,
                weight: 0.05,
                channels: vec![Hydrophobicity, Hydrophilicity, SideChainMass],
            },
            sc_pseaac: PseAacSpec { lambda: 3, weight: 0.05, channels: vec![Hydrophobicity, Hydrophilicity] },
            sc_pseaac_general: PseAacSpec { lambda: 3, weight: 0.05, channels: vec![Polarity, VdwVolume] },
        }
    }
}

impl FeatureSchema {
    pub fn dimension(&self) -> usize {
        let pse = |p: &PseAacSpec| 20 + p.lambda;
        let sc = |p: &PseAacSpec| 20 + p.lambda * p.channels.len();
        CLASSIC_DIM
            + self.ac.dimension()
            + self.cc.dimension()
            + self.acc.dimension()
            + pse(&self.pc_pseaac)
            + pse(&self.pc_pseaac_general)
            + sc(&self.sc_pseaac)
            + sc(&self.sc_pseaac_general)
    }

    /// Shortest sequence every sub-descriptor accepts.
    pub fn min_length(&self) -> usize {
        [
            2,
            self.ac.max_lag + 1,
            self.cc.max_lag + 1,
            self.acc.max_lag + 1,
            self.pc_pseaac.lambda + 1,
            self.pc_pseaac_general.lambda + 1,
            self.sc_pseaac.lambda + 1,
            self.sc_pseaac_general.lambda + 1,
        ]
        .into_iter()
        .max()
        .unwrap_or(2)
    }

    /// `hybrid{dim}-v{version}-{hash}`; the hash covers the serialized
    /// parameters so two recipes with equal dimension stay distinguishable.
    pub fn schema_id(&self) -> String {
        let params = serde_json::to_string(self).expect("schema serializes");
        let digest = Sha256::digest(params.as_bytes());
        format!("hybrid{}-v{}-{}", self.dimension(), SCHEMA_VERSION, &hex::encode(digest)[..8])
    }

    pub fn validate(&self) -> Result<(), FeatureError> {
        for c in [&self.ac, &self.cc, &self.acc] {
            c.validate()?;
        }
        for p in [&self.pc_pseaac, &self.pc_pseaac_general, &self.sc_pseaac, &self.sc_pseaac_general] {
            if !(p.weight > 0.0 && p.weight <= 1.0) {
                return Err(FeatureError::BadParameter(format!("weight {} outside (0, 1]", p.weight)));
            }
            if p.lambda > 0 && p.channels.is_empty() {
                return Err(FeatureError::BadParameter("PseAAC block without channels".into()));
            }
        }
        Ok(())
    }

    pub fn column_names(&self) -> Vec<String> {
        let mut names = classic::classic_column_names();
        names.extend(self.ac.column_names("ac"));
        names.extend(self.cc.column_names("cc"));
        names.extend(self.acc.column_names("acc"));
        let pse_names = |prefix: &str, p: &PseAacSpec, series: bool| {
            let mut v: Vec<String> = AMINO_ACIDS.iter().map(|&a| format!("{prefix}.{}", a as char)).collect();
            for k in 1..=p.lambda {
                if series {
                    v.extend(p.channels.iter().map(|c| format!("{prefix}.theta{k}.{}", c.name())));
                } else {
                    v.push(format!("{prefix}.theta{k}"));
                }
            }
            v
        };
        names.extend(pse_names("pc_pseaac", &self.pc_pseaac, false));
        names.extend(pse_names("pc_pseaac_general", &self.pc_pseaac_general, false));
        names.extend(pse_names("sc_pseaac", &self.sc_pseaac, true));
        names.extend(pse_names("sc_pseaac_general", &self.sc_pseaac_general, true));
        names
    }

    /// Extract the hybrid vector. Sequences shorter than
    /// [`FeatureSchema::min_length`] fail as a whole.
    pub fn extract(&self, seq: &str) -> Result<FeatureVector, FeatureError> {
        let bytes = seq.as_bytes();
        let min = self.min_length();
        if bytes.len() < min {
            return Err(FeatureError::TooShort { required: min, actual: bytes.len() });
        }
        check_canonical(bytes)?;
        let mut v = classic::classic_values(bytes);
        v.extend(covariance::covariance_values(bytes, &self.ac));
        v.extend(covariance::covariance_values(bytes, &self.cc));
        v.extend(covariance::covariance_values(bytes, &self.acc));
        let p = &self.pc_pseaac;
        v.extend(pseaac::pc_values(bytes, p.lambda, p.weight, &p.scales()));
        let p = &self.pc_pseaac_general;
        v.extend(pseaac::pc_values(bytes, p.lambda, p.weight, &p.scales()));
        let p = &self.sc_pseaac;
        v.extend(pseaac::sc_values(bytes, p.lambda, p.weight, &p.scales()));
        let p = &self.sc_pseaac_general;
        v.extend(pseaac::sc_values(bytes, p.lambda, p.weight, &p.scales()));
        debug_assert_eq!(v.len(), self.dimension());
        if let Some(bad) = v.iter().find(|x| !x.is_finite()) {
            return Err(FeatureError::Matrix(format!("non-finite feature value {bad}")));
        }
        Ok(FeatureVector::new(v, self.schema_id()))
    }

    /// Extract one row per sequence, in parallel. The first failing record
    /// (lowest index) is reported.
    pub fn extract_batch<'a, I>(&self, items: I) -> Result<FeatureMatrix, FeatureError>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let items: Vec<(&str, &str)> = items.into_iter().collect();
        let rows: Vec<Result<Vec<f64>, FeatureError>> = items
            .par_iter()
            .enumerate()
            .map(|(i, (acc, seq))| {
                self.extract(seq).map(|v| v.values).map_err(|e| FeatureError::Record {
                    index: i,
                    accession: acc.to_string(),
                    source: Box::new(e),
                })
            })
            .collect();
        let rows = rows.into_iter().collect::<Result<Vec<_>, _>>()?;
        Ok(FeatureMatrix {
            schema_id: self.schema_id(),
            column_names: self.column_names(),
            ids: items.iter().map(|(a, _)| a.to_string()).collect(),
            rows,
        })
    }
}

/// The 350D hybrid vector under the default schema.
pub fn extract_hybrid350(seq: &str) -> Result<FeatureVector, FeatureError> {
    FeatureSchema::default().extract(seq)
}

/// Row-major feature table with stable column identifiers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub schema_id: String,
    pub column_names: Vec<String>,
    pub ids: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// Sidecar descriptor written next to a feature CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemaDescriptor {
    pub schema_id: String,
    pub version: u32,
    pub dimension: usize,
    pub parameters: FeatureSchema,
}

impl SchemaDescriptor {
    pub fn new(schema: &FeatureSchema) -> Self {
        SchemaDescriptor {
            schema_id: schema.schema_id(),
            version: SCHEMA_VERSION,
            dimension: schema.dimension(),
            parameters: schema.clone(),
        }
    }
}

impl FeatureMatrix {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.column_names.len()
    }

    /// Write as CSV: header `id,<column names>`, values in shortest
    /// round-trip decimal form.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), FeatureError> {
        let mut w = csv::Writer::from_writer(writer);
        let err = |e: csv::Error| FeatureError::Matrix(e.to_string());
        let mut header = vec!["id".to_string()];
        header.extend(self.column_names.iter().cloned());
        w.write_record(&header).map_err(err)?;
        for (id, row) in self.ids.iter().zip(&self.rows) {
            let mut rec = vec![id.clone()];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec).map_err(err)?;
        }
        w.flush().map_err(|e| FeatureError::Matrix(e.to_string()))
    }

    pub fn read_csv<R: Read>(reader: R, schema_id: &str) -> Result<Self, FeatureError> {
        let mut r = csv::Reader::from_reader(reader);
        let err = |e: csv::Error| FeatureError::Matrix(e.to_string());
        let header = r.headers().map_err(err)?.clone();
        if header.get(0) != Some("id") {
            return Err(FeatureError::Matrix("first column must be `id`".into()));
        }
        let column_names: Vec<String> = header.iter().skip(1).map(String::from).collect();
        let mut ids = Vec::new();
        let mut rows = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec.map_err(err)?;
            ids.push(rec.get(0).unwrap_or("").to_string());
            let row = rec
                .iter()
                .skip(1)
                .map(|s| s.parse::<f64>())
                .collect::<Result<Vec<f64>, _>>()
                .map_err(|e| FeatureError::Matrix(format!("row {}: {e}", line + 1)))?;
            if row.len() != column_names.len() {
                return Err(FeatureError::Matrix(format!("row {} has {} values", line + 1, row.len())));
            }
            rows.push(row);
        }
        Ok(FeatureMatrix {
            schema_id: schema_id.to_string(),
            column_names,
            ids,
            rows,
        })
    }

    /// Rows restricted to `columns`, in the given column order.
    pub fn project(&self, rows: &[usize], columns: &[usize]) -> Vec<Vec<f64>> {
        rows.iter()
            .map(|&r| columns.iter().map(|&c| self.rows[r][c]).collect())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SEQ: &str = "MKTAYIAKQRQISFVKSHFSRQLEERLGLIEVQAPILSRVGDGTQDNLSGAEKAVQVKVKALPDAQ";

    #[test]
    fn default_schema_is_350() {
        let schema = FeatureSchema::default();
        assert_eq!(schema.dimension(), HYBRID_DIM);
        assert_eq!(schema.min_length(), 12);
        assert_eq!(schema.column_names().len(), HYBRID_DIM);
        let mut names = schema.column_names();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), HYBRID_DIM, "column names are unique");
    }

    #[test]
    fn hybrid_layout() {
        let v = extract_hybrid350(SEQ).unwrap().values;
        assert_eq!(v.len(), 350);
        assert_eq!(&v[..188], extract_188(SEQ).unwrap().values.as_slice());
        let ac = extract_autocorr(SEQ, CovarianceMode::Ac, &[ScaleId::Hydrophobicity, ScaleId::Hydrophilicity], 11)
            .unwrap()
            .values;
        assert_eq!(&v[188..210], ac.as_slice());
        let pc = extract_pc_pseaac(SEQ, 2, 0.05, &[ScaleId::Hydrophobicity.scale(), ScaleId::Hydrophilicity.scale()])
            .unwrap()
            .values;
        assert_eq!(&v[254..276], pc.as_slice());
    }

    #[test]
    fn short_sequence_fails_whole_vector() {
        assert!(matches!(
            extract_hybrid350("ACDEFGHIKLM"),
            Err(FeatureError::TooShort { required: 12, actual: 11 })
        ));
        assert!(extract_hybrid350("ACDEFGHIKLMN").is_ok());
    }

    #[test]
    fn batch_and_csv_round_trip() {
        let schema = FeatureSchema::default();
        let items = vec![("a", SEQ), ("b", &SEQ[5..40])];
        let m = schema.extract_batch(items).unwrap();
        assert_eq!(m.n_rows(), 2);
        assert!(m.rows.iter().flatten().all(|v| v.is_finite()));
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let back = FeatureMatrix::read_csv(buf.as_slice(), &m.schema_id).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn batch_reports_failing_record() {
        let schema = FeatureSchema::default();
        let err = schema.extract_batch(vec![("ok", SEQ), ("tiny", "ACD")]).unwrap_err();
        assert!(matches!(err, FeatureError::Record { index: 1, .. }));
    }

    #[test]
    fn schema_id_tracks_parameters() {
        let a = FeatureSchema::default();
        let mut b = a.clone();
        b.pc_pseaac.weight = 0.1;
        assert_ne!(a.schema_id(), b.schema_id());
        assert!(a.schema_id().starts_with("hybrid350-v1-"));
    }
}

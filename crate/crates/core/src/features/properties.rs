//! Physicochemical partitions (for CTD) and numeric residue scales (for the
//! correlation-based descriptors).

use serde::{Deserialize, Serialize};

use crate::dataset::AMINO_ACIDS;

/// Three-group partition of the 20 residues for one property.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PropertyTable {
    pub name: &'static str,
    pub groups: [&'static str; 3],
}

impl PropertyTable {
    /// Group id (0, 1, 2) of an uppercase canonical residue.
    pub fn group_of(&self, residue: u8) -> Option<usize> {
        self.groups.iter().position(|g| g.as_bytes().contains(&residue))
    }

    pub fn lookup(&self) -> [u8; 256] {
        let mut table = [u8::MAX; 256];
        for (g, members) in self.groups.iter().enumerate() {
            for &b in members.as_bytes() {
                table[b as usize] = g as u8;
            }
        }
        table
    }
}

/// The eight CTD properties in their fixed layout order.
pub const CTD_PROPERTIES: [PropertyTable; 8] = [
    PropertyTable { name: "hydrophobicity", groups: ["RKEDQN", "GASTPHY", "CLVIMFW"] },
    PropertyTable { name: "vdw_volume", groups: ["GASTPDC", "NVEQIL", "MHKFRYW"] },
    PropertyTable { name: "polarity", groups: ["LIFWCMVY", "PGAST", "HQRKNED"] },
    PropertyTable { name: "polarizability", groups: ["GASDT", "CPNVEQIL", "KMHFRYW"] },
    PropertyTable { name: "charge", groups: ["KR", "ANCQGHILMFPSTWYV", "DE"] },
    PropertyTable { name: "surface_tension", groups: ["GQDNAHR", "KTSEC", "ILMFPWYV"] },
    PropertyTable { name: "secondary_structure", groups: ["EALMQKRH", "VIYCWFT", "GNPSD"] },
    PropertyTable { name: "solvent_accessibility", groups: ["ALFCGIVW", "RKQEND", "MPSTHY"] },
];

/// Named numeric residue scales shipped with the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleId {
    /// Tanford hydrophobicity.
    Hydrophobicity,
    /// Hopp-Woods hydrophilicity.
    Hydrophilicity,
    SideChainMass,
    /// Grantham polarity.
    Polarity,
    /// Normalized van der Waals volume.
    VdwVolume,
    /// Charton polarizability.
    Polarizability,
}

// Raw values in AMINO_ACIDS order: A C D E F G H I K L M N P Q R S T V W Y
const HYDROPHOBICITY: [f64; 20] = [
    0.62, 0.29, -0.90, -0.74, 1.19, 0.48, -0.40, 1.38, -1.50, 1.06, 0.64, -0.78, 0.12, -0.85,
    -2.53, -0.18, -0.05, 1.08, 0.81, 0.26,
];
const HYDROPHILICITY: [f64; 20] = [
    -0.5, -1.0, 3.0, 3.0, -2.5, 0.0, -0.5, -1.8, 3.0, -1.8, -1.3, 0.2, 0.0, 0.2, 3.0, 0.3, -0.4,
    -1.5, -3.4, -2.3,
];
const SIDE_CHAIN_MASS: [f64; 20] = [
    15.0, 47.0, 59.0, 73.0, 91.0, 1.0, 82.0, 57.0, 73.0, 57.0, 75.0, 58.0, 42.0, 72.0, 101.0,
    31.0, 45.0, 43.0, 130.0, 107.0,
];
const POLARITY: [f64; 20] = [
    8.1, 5.5, 13.0, 12.3, 5.2, 9.0, 10.4, 5.2, 11.3, 4.9, 5.7, 11.6, 8.0, 10.5, 10.5, 9.2, 8.6,
    5.9, 5.4, 6.2,
];
const VDW_VOLUME: [f64; 20] = [
    1.00, 2.43, 2.78, 3.78, 5.89, 0.00, 4.66, 4.00, 4.77, 4.00, 4.43, 2.95, 2.72, 3.95, 6.13,
    1.60, 2.60, 3.00, 8.08, 6.47,
];
const POLARIZABILITY: [f64; 20] = [
    0.046, 0.128, 0.105, 0.151, 0.290, 0.000, 0.230, 0.186, 0.219, 0.186, 0.221, 0.134, 0.131,
    0.180, 0.291, 0.062, 0.108, 0.140, 0.409, 0.298,
];

impl ScaleId {
    pub fn name(self) -> &'static str {
        match self {
            ScaleId::Hydrophobicity => "hydrophobicity",
            ScaleId::Hydrophilicity => "hydrophilicity",
            ScaleId::SideChainMass => "side_chain_mass",
            ScaleId::Polarity => "polarity",
            ScaleId::VdwVolume => "vdw_volume",
            ScaleId::Polarizability => "polarizability",
        }
    }

    fn raw(self) -> &'static [f64; 20] {
        match self {
            ScaleId::Hydrophobicity => &HYDROPHOBICITY,
            ScaleId::Hydrophilicity => &HYDROPHILICITY,
            ScaleId::SideChainMass => &SIDE_CHAIN_MASS,
            ScaleId::Polarity => &POLARITY,
            ScaleId::VdwVolume => &VDW_VOLUME,
            ScaleId::Polarizability => &POLARIZABILITY,
        }
    }

    pub fn scale(self) -> PropertyScale {
        PropertyScale::from_raw(self.name(), *self.raw())
    }
}

/// A residue scale standardized to mean 0 and (population) variance 1 over
/// the 20 residues.
#[derive(Debug, Clone, PartialEq)]
pub struct PropertyScale {
    pub name: String,
    standardized: [f64; 20],
    by_byte: Box<[f64; 256]>,
}

impl PropertyScale {
    /// Standardize `raw` (in `AMINO_ACIDS` order). A constant scale maps to
    /// all zeros.
    pub fn from_raw(name: impl Into<String>, raw: [f64; 20]) -> Self {
        let mean = raw.iter().sum::<f64>() / 20.0;
        let var = raw.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 20.0;
        let sd = var.sqrt();
        let mut standardized = [0.0; 20];
        for (s, v) in standardized.iter_mut().zip(raw.iter()) {
            *s = if sd > 0.0 { (v - mean) / sd } else { 0.0 };
        }
        let mut by_byte = Box::new([f64::NAN; 256]);
        for (i, &aa) in AMINO_ACIDS.iter().enumerate() {
            by_byte[aa as usize] = standardized[i];
        }
        PropertyScale {
            name: name.into(),
            standardized,
            by_byte,
        }
    }

    pub fn values(&self) -> &[f64; 20] {
        &self.standardized
    }

    #[inline]
    pub fn value(&self, residue: u8) -> f64 {
        self.by_byte[residue as usize]
    }
}

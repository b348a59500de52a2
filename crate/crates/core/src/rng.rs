//! Named random streams derived from a single master seed.
//!
//! Every stage draws from `stream(seed, "stage/name")`, so adding or
//! reordering consumers in one stage never shifts the numbers another stage
//! sees.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type StageRng = ChaCha8Rng;

/// Derive a 64-bit sub-seed for `name` from `seed`.
pub fn derive_seed(seed: u64, name: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(name.as_bytes());
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

pub fn stream(seed: u64, name: &str) -> StageRng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, name))
}

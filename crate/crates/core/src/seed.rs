//! Deterministic sub-seed derivation.
//!
//! A sub-seed is the first eight bytes (little endian) of
//! `SHA-256(master_seed.to_le_bytes() || stage)`. Numeric components such as
//! a repeat index are appended to the stage name in decimal, separated by `/`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub fn derive(master: u64, stage: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    hasher.update(stage.as_bytes());
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

pub fn derive_indexed(master: u64, stage: &str, parts: &[u64]) -> u64 {
    let mut name = String::from(stage);
    for p in parts {
        name.push('/');
        name.push_str(&p.to_string());
    }
    derive(master, &name)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

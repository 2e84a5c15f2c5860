//! Seed fan-out.
//!
//! Every random stream in the crate is derived from one 64-bit master seed,
//! a subsystem label and a list of integer coordinates. Derivation goes
//! through SHA-256 so streams are stable across platforms and independent of
//! the order in which they are requested.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Derive a child seed from `(master, label, coords)`.
pub fn derive_seed(master: u64, label: &str, coords: &[u64]) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    hasher.update((label.len() as u64).to_le_bytes());
    hasher.update(label.as_bytes());
    for c in coords {
        hasher.update(c.to_le_bytes());
    }
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

/// A ChaCha8 stream for `(master, label, coords)`.
pub fn stream(master: u64, label: &str, coords: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, label, coords))
}

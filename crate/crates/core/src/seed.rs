//! Deterministic per-stage RNG seed derivation.
//!
//! Every randomized stage derives its own seed from the master seed, a stage
//! name, and the household size it operates on. This keeps stages
//! independent of execution order: running them one by one or as a single
//! pipeline yields the same streams.

use sha2::{Digest, Sha256};

/// Derive a stage seed from the master seed. Stable across platforms and
/// releases: the first eight bytes (little endian) of
/// SHA-256(master_le || stage || k_le).
pub fn derive_seed(master: u64, stage: &str, k: u64) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    hasher.update(stage.as_bytes());
    hasher.update(k.to_le_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

//! Per-item random streams derived from a global seed.
//!
//! Every item gets its own ChaCha stream keyed by `(seed, domain, key)`, so
//! results never depend on the order or parallelism of processing.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream domains, so the same numeric key can be reused across purposes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Original = 1,
    Abstract = 2,
    Fixture = 3,
}

pub fn derive_rng(seed: u64, domain: Domain, key: u64) -> ChaCha8Rng {
    let mut bytes = [0u8; 32];
    bytes[..8].copy_from_slice(&seed.to_le_bytes());
    bytes[8..16].copy_from_slice(&(domain as u64).to_le_bytes());
    bytes[16..24].copy_from_slice(&key.to_le_bytes());
    ChaCha8Rng::from_seed(bytes)
}

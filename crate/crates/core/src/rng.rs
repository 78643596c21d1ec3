//! Keyed random streams.
//!
//! Every stream is a ChaCha8 generator whose 32-byte key is
//! `SHA-256(seed_le64 || len_le64(label) || label || index_le64)`.
//! Streams therefore depend only on `(seed, label, index)`, never on the
//! order in which they are created or on which worker consumes them. This
//! derivation is part of the reproducibility contract: changing it changes
//! every recorded result.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type StreamRng = ChaCha8Rng;

fn derive_key(seed: u64, label: &str, index: Option<u64>) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update((label.len() as u64).to_le_bytes());
    hasher.update(label.as_bytes());
    if let Some(i) = index {
        hasher.update([1u8]);
        hasher.update(i.to_le_bytes());
    } else {
        hasher.update([0u8]);
    }
    hasher.finalize().into()
}

/// A reproducible stream for `(seed, label)`.
pub fn seeded_rng(seed: u64, label: &str) -> StreamRng {
    ChaCha8Rng::from_seed(derive_key(seed, label, None))
}

/// A family of indexed streams sharing a seed and a label; typically one
/// stream per Monte Carlo trial.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RngStreams {
    seed: u64,
    label: String,
}

impl RngStreams {
    pub fn new(seed: u64, label: impl Into<String>) -> Self {
        Self {
            seed,
            label: label.into(),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn stream(&self, index: u64) -> StreamRng {
        ChaCha8Rng::from_seed(derive_key(self.seed, &self.label, Some(index)))
    }

    /// A child family, e.g. `streams.child("eve")`.
    pub fn child(&self, suffix: &str) -> RngStreams {
        RngStreams {
            seed: self.seed,
            label: format!("{}/{}", self.label, suffix),
        }
    }
}

//! Counter-based deterministic randomness.
//!
//! Every random draw in the crate comes from a [`SeedStream`]: a master seed
//! plus a textual label. The pair is hashed into a ChaCha key, and an optional
//! index selects one of the 2^64 ChaCha streams under that key. Identical
//! `(master_seed, label, index)` triples always yield identical sequences, so
//! trials can be scheduled on any thread in any order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type StreamRng = ChaCha8Rng;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SeedStream {
    master_seed: u64,
    label: String,
}

impl SeedStream {
    pub fn new(master_seed: u64, label: impl Into<String>) -> Self {
        Self {
            master_seed,
            label: label.into(),
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Child stream `label/child`.
    pub fn derive(&self, child: impl AsRef<str>) -> Self {
        Self {
            master_seed: self.master_seed,
            label: format!("{}/{}", self.label, child.as_ref()),
        }
    }

    fn key(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(b"wiretap-seed-stream\0");
        h.update(self.master_seed.to_le_bytes());
        h.update((self.label.len() as u64).to_le_bytes());
        h.update(self.label.as_bytes());
        let digest = h.finalize();
        let mut key = [0u8; 32];
        key.copy_from_slice(digest.as_slice());
        key
    }

    /// Generator for stream index 0.
    pub fn rng(&self) -> StreamRng {
        self.rng_at(0)
    }

    /// Generator for the `index`-th substream.
    pub fn rng_at(&self, index: u64) -> StreamRng {
        let mut rng = ChaCha8Rng::from_seed(self.key());
        rng.set_stream(index);
        rng
    }
}

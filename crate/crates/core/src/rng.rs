//! Labeled deterministic random streams.
//!
//! Every randomized stage of the pipeline draws from a stream derived by
//! hashing a master seed with a stage label and an index. Reordering work or
//! adding parallelism therefore cannot change any result.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone)]
pub struct SeedStream {
    seed: [u8; 32],
}

impl SeedStream {
    pub fn from_master(seed: u64) -> Self {
        let mut h = Sha256::new();
        h.update(b"radiomics-master");
        h.update(seed.to_le_bytes());
        Self { seed: h.finalize().into() }
    }

    /// Derive a child stream for a labeled stage and index.
    pub fn child(&self, label: &str, index: u64) -> Self {
        let mut h = Sha256::new();
        h.update(self.seed);
        h.update(label.as_bytes());
        h.update(index.to_le_bytes());
        Self { seed: h.finalize().into() }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::from_seed(self.seed)
    }
}

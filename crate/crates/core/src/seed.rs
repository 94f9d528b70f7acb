//! Platform-stable seeding: every random stream is keyed by the run seed plus
//! a purpose tag, a sample id and an index, hashed with SHA-256.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use sha2::{Digest, Sha256};

pub fn derive_seed(seed: u64, stream: &str, sample_id: &str, index: u64) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    for part in [stream.as_bytes(), sample_id.as_bytes()] {
        h.update((part.len() as u64).to_le_bytes());
        h.update(part);
    }
    h.update(index.to_le_bytes());
    h.finalize().into()
}

pub fn rng_for(seed: u64, stream: &str, sample_id: &str, index: u64) -> ChaCha12Rng {
    ChaCha12Rng::from_seed(derive_seed(seed, stream, sample_id, index))
}

//! Stable per-item RNG streams.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Default seed used when a caller does not supply one.
pub const DEFAULT_SEED: u64 = 20_220_517;

/// A ChaCha stream keyed by `(seed, item id, position)`. Streams do not
/// depend on the order in which items are processed.
pub fn stream(seed: u64, item: &str, position: u64) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update((item.len() as u64).to_le_bytes());
    h.update(item.as_bytes());
    h.update(position.to_le_bytes());
    let digest = h.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest[..32]);
    ChaCha8Rng::from_seed(key)
}

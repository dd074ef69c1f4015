//! Order-independent seed derivation.
//!
//! Every random choice made for one item (a context, a candidate) is drawn from
//! a generator seeded by `derive_seed(global_seed, item_id)`, so results do not
//! depend on iteration order or sharding.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub fn derive_seed(global_seed: u64, item_id: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(global_seed.to_le_bytes());
    hasher.update(item_id.as_bytes());
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

pub fn item_rng(global_seed: u64, item_id: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(global_seed, item_id))
}

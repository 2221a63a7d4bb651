//! Named deterministic random substreams.
//!
//! Every consumer of randomness in a run draws from its own ChaCha stream
//! keyed by `(run seed, label)`, so adding or removing one consumer never
//! shifts the draws of another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type SubRng = ChaCha8Rng;

pub const TASK_ASSIGNMENT: &str = "task-assignment";
pub const STREAM_SHUFFLE: &str = "stream-shuffle";
pub const MODEL_INIT: &str = "model-init";
pub const REPLAY: &str = "replay";
pub const TTA: &str = "tta";
pub const DATA_GEN: &str = "data-gen";
pub const ER_RETENTION: &str = "er-retention";
pub const TEST_SPLIT: &str = "test-split";

/// 32-byte key for `(seed, label, extra...)`.
pub fn derive_key(seed: u64, label: &str, extra: &[u64]) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update((label.len() as u64).to_le_bytes());
    h.update(label.as_bytes());
    for e in extra {
        h.update(e.to_le_bytes());
    }
    h.finalize().into()
}

pub fn derive_seed(seed: u64, label: &str) -> u64 {
    let k = derive_key(seed, label, &[]);
    u64::from_le_bytes(k[..8].try_into().unwrap())
}

pub fn substream(seed: u64, label: &str) -> SubRng {
    ChaCha8Rng::from_seed(derive_key(seed, label, &[]))
}

pub fn keyed_substream(seed: u64, label: &str, extra: &[u64]) -> SubRng {
    ChaCha8Rng::from_seed(derive_key(seed, label, extra))
}

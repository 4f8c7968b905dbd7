//! Deterministic random streams.
//!
//! Every random quantity in the crate is drawn from a ChaCha8 stream whose
//! key is derived from `(master_seed, domain)` and whose 64-bit stream id is
//! the replication index. ChaCha is counter-based, so replication `r` sees the
//! same numbers no matter which worker runs it or in which order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Concrete generator handed to every simulation kernel.
pub type StreamRng = ChaCha8Rng;

/// Domain tags separating independent families of randomness.
pub mod domain {
    pub const HAWKES: u64 = 0x4841_574B_4553;
    pub const BROWNIAN: u64 = 0x0042_524F_574E;
    pub const COX: u64 = 0x0043_4F58;
    pub const OU_EXACT: u64 = 0x4F55;
    pub const BOOTSTRAP: u64 = 0x424F_4F54;
    pub const VALIDATE: u64 = 0x0056_414C_4944;
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A family of replication streams sharing one key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Streams {
    key: [u64; 4],
}

impl Streams {
    pub fn new(master_seed: u64, domain: u64) -> Self {
        let mut state = splitmix64(master_seed) ^ splitmix64(domain.rotate_left(17));
        let mut key = [0u64; 4];
        for k in &mut key {
            state = splitmix64(state);
            *k = state;
        }
        Self { key }
    }

    /// Derives an independent family, e.g. one per `N` in a sweep.
    pub fn child(&self, tag: u64) -> Self {
        let mut state = self.key[0] ^ splitmix64(tag ^ self.key[3]);
        let mut key = [0u64; 4];
        for (k, base) in key.iter_mut().zip(self.key) {
            state = splitmix64(state ^ base);
            *k = state;
        }
        Self { key }
    }

    /// Generator for replication `index`.
    pub fn stream(&self, index: u64) -> StreamRng {
        let mut seed = [0u8; 32];
        for (chunk, k) in seed.chunks_exact_mut(8).zip(self.key) {
            chunk.copy_from_slice(&k.to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_stream(index);
        rng
    }
}

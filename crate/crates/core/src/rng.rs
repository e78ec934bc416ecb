// SPDX-License-Identifier: MIT OR Apache-2.0

//! Seeded randomness.
//!
//! A [`SeededRng`] names a ChaCha8 keystream: the seed picks the key and the
//! stream id picks one of 2^64 non-overlapping keystreams under that key. Every
//! replication of an ensemble gets its own stream id, so replications can run
//! on any thread in any order and still reproduce bit for bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeededRng {
    pub seed: u64,
    pub stream_id: u64,
}

impl SeededRng {
    pub const fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// Fresh generator positioned at the start of this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// Same key, different stream.
    pub const fn stream(&self, stream_id: u64) -> Self {
        Self::new(self.seed, stream_id)
    }

    /// A companion source for auxiliary randomness (e.g. holding times laid
    /// over a jump chain). Uses a derived key so it never collides with any
    /// stream of the parent key.
    pub const fn fork(&self, salt: u64) -> Self {
        Self::new(splitmix64(self.seed ^ splitmix64(salt)), self.stream_id)
    }
}

const fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

//! Seeded randomness.
//!
//! Every random quantity in the crate is drawn from a ChaCha8 stream keyed by
//! an [`RngSeed`]. Sub-computations (one selection round, one client's local
//! update) get their own derived stream, so results do not depend on the order
//! in which independent pieces run.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// A `(seed, stream_id)` pair naming one reproducible random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngSeed {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngSeed {
    pub const fn new(seed: u64) -> Self {
        Self { seed, stream_id: 0 }
    }

    pub const fn with_stream(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// Builds the generator for this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// Derives an independent child stream identified by `(label, index)`.
    ///
    /// The seed is kept and the stream id is remixed, so children of distinct
    /// labels or indices never share a stream in practice.
    pub fn derive(&self, label: u64, index: u64) -> Self {
        let mixed = splitmix64(
            splitmix64(self.stream_id ^ splitmix64(label)).wrapping_add(index),
        );
        Self {
            seed: self.seed,
            stream_id: mixed,
        }
    }
}

impl From<u64> for RngSeed {
    fn from(seed: u64) -> Self {
        Self::new(seed)
    }
}

/// Stream labels used across the crate.
pub(crate) mod label {
    pub const SELECT: u64 = 1;
    pub const LOCAL: u64 = 2;
    pub const INIT: u64 = 3;
    pub const TASK: u64 = 4;
    pub const SIZES: u64 = 5;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

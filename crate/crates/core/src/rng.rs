//! Counter-based random streams.
//!
//! A stream is a ChaCha8 keystream whose 256-bit key is the tuple
//! `(master_seed, replica, lane, domain)`. Streams for different tuples are
//! independent and the output of each one depends on nothing else, so runs are
//! reproducible regardless of how replicas are scheduled across threads.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Domain tag mixed into every key, so that streams of this crate never
/// coincide with a plain `seed_from_u64` stream.
const DOMAIN: u64 = 0x6273_6c61_625f_7631; // "bslab_v1"

/// Lane used for the per-replica driver stream (vertex lanes are `0..N`).
pub const LANE_DRIVER: u64 = u64::MAX;
/// Lane used for initial configurations.
pub const LANE_INIT: u64 = u64::MAX - 1;

/// Returns the stream for `(master_seed, replica, lane)`.
pub fn stream(master_seed: u64, replica: u64, lane: u64) -> StreamRng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&master_seed.to_le_bytes());
    key[8..16].copy_from_slice(&replica.to_le_bytes());
    key[16..24].copy_from_slice(&lane.to_le_bytes());
    key[24..32].copy_from_slice(&DOMAIN.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Identifies one replica's family of streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub seed: u64,
    pub replica: u64,
}

impl StreamKey {
    pub fn new(seed: u64, replica: u64) -> Self {
        Self { seed, replica }
    }

    pub fn lane(&self, lane: u64) -> StreamRng {
        stream(self.seed, self.replica, lane)
    }

    pub fn driver(&self) -> StreamRng {
        self.lane(LANE_DRIVER)
    }
}

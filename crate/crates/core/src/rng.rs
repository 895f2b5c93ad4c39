//! Replicate streams.
//!
//! Every replicate draws from its own ChaCha8 stream: the 256-bit key is
//! expanded from the master seed with `SeedableRng::seed_from_u64`, and the
//! 64-bit ChaCha stream id is the replicate index. Streams under one key are
//! disjoint, so replicates never share output and any schedule reproduces the
//! same values.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Recorded in ensemble metadata.
pub const GENERATOR_NAME: &str = "chacha8(rand_chacha-0.3; key=seed_from_u64(master_seed); stream=replicate_index)";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedSpec {
    pub master_seed: u64,
}

impl SeedSpec {
    pub const fn new(master_seed: u64) -> Self {
        SeedSpec { master_seed }
    }

    /// Independent stream for one replicate.
    pub fn stream(&self, replicate: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(replicate);
        rng
    }
}

/// Uniform on `[0, 1)` with 53 random bits.
#[inline]
pub fn uniform01<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

//! Seedable, stream-splittable random number generation.
//!
//! Every stochastic component draws from a ChaCha stream addressed by a
//! master seed plus a path of integers (replicate index, method, chain,
//! retry attempt, ...). Streams with different paths are independent, and the
//! same (seed, path) always yields the same sequence, so runs reproduce
//! bit-for-bit regardless of scheduling or worker count.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Derives independent RNG streams from a master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngFactory {
    master_seed: u64,
}

impl RngFactory {
    pub fn new(master_seed: u64) -> Self {
        Self { master_seed }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    /// An independent generator for the given path. All ChaCha streams share
    /// the key derived from the master seed and differ in the stream nonce,
    /// which is a mix of the path elements.
    pub fn stream(&self, path: &[u64]) -> ChaCha12Rng {
        let mut rng = ChaCha12Rng::seed_from_u64(self.master_seed);
        rng.set_stream(mix_path(path));
        rng
    }

    /// A sub-factory whose streams are all distinct from this factory's
    /// streams at other prefixes.
    pub fn child(&self, tag: u64) -> RngFactory {
        RngFactory { master_seed: splitmix64(self.master_seed ^ splitmix64(tag)) }
    }
}

/// Mixes a path of integers into a single 64-bit stream id.
fn mix_path(path: &[u64]) -> u64 {
    let mut acc = 0x9e37_79b9_7f4a_7c15u64;
    for &p in path {
        acc = splitmix64(acc ^ splitmix64(p.wrapping_add(0x1234_5678_9abc_def0)));
    }
    acc
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

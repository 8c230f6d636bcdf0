//! The run's random stream.
//!
//! Every random decision in a generation run is drawn from a single
//! [`RandomStream`]. The generator is ChaCha with 8 rounds (`rand_chacha`'s
//! `ChaCha8Rng`), seeded through `SeedableRng::seed_from_u64`, which expands
//! the 64-bit seed with the PCG32 recurrence. Both steps are fixed by the
//! crates' reproducibility guarantees, so a seed yields the same stream on
//! every platform.
//!
//! Derived draws are spelled out here rather than delegated, so they cannot
//! drift with a dependency upgrade:
//!
//! - [`RandomStream::next_f64`]: the top 53 bits of one `u64`, scaled by 2^-53,
//!   giving a uniform float in `[0, 1)`.
//! - [`RandomStream::index`]: Lemire's widening-multiply method with rejection,
//!   giving an unbiased integer in `[0, n)`.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

#[derive(Debug, Clone)]
pub struct RandomStream {
    seed: u64,
    rng: ChaCha8Rng,
    draws: u64,
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        RandomStream {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
            draws: 0,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of logical draws taken so far (`next_f64` and `index` each count once).
    pub fn draws(&self) -> u64 {
        self.draws
    }

    /// Uniform float in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        self.draws += 1;
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[0, n)`. Panics if `n == 0`.
    pub fn index(&mut self, n: usize) -> usize {
        assert!(n > 0, "index() over an empty range");
        self.draws += 1;
        let range = n as u64;
        let threshold = range.wrapping_neg() % range;
        loop {
            let m = (self.rng.next_u64() as u128) * (range as u128);
            if (m as u64) >= threshold {
                return (m >> 64) as usize;
            }
        }
    }

    /// Picks one element uniformly; `None` (and no draw) when empty.
    pub fn choose<'a, T>(&mut self, items: &'a [T]) -> Option<&'a T> {
        if items.is_empty() {
            return None;
        }
        let i = self.index(items.len());
        Some(&items[i])
    }
}

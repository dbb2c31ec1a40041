//! Deterministic counter-based pseudorandom generator.
//!
//! SplitMix64: draw k for seed s is a pure function of (s, k), so any stream
//! can be reproduced bit-exactly on any platform. Normal variates come from
//! the inverse-CDF transform (one uniform draw per variate, no rejection),
//! which keeps draw counts aligned across implementations.
//!
//! Reference output, seed 42, first four words (also committed under
//! `tests/fixtures/rng_seed42_first4.txt`):
//!   0xbdd732262feb6e95, 0x28efe333b266f103, 0x47526757130f9f52, 0x581ce1ff0e4ae394

use crate::special::normal_quantile;

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Counter-based 64-bit generator with SplitMix64 output mixing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CounterRng {
    seed: u64,
    counter: u64,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        Self { seed, counter: 0 }
    }

    /// The k-th word of the stream for `seed`, independent of generator state.
    pub fn word_at(seed: u64, k: u64) -> u64 {
        let mut z = seed.wrapping_add(k.wrapping_add(1).wrapping_mul(GAMMA));
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn next_u64(&mut self) -> u64 {
        let word = Self::word_at(self.seed, self.counter);
        self.counter += 1;
        word
    }

    /// Uniform draw strictly inside (0, 1): 53 significant bits, half-step offset.
    pub fn next_uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
    }

    /// Standard normal draw by inverse transform.
    pub fn next_normal(&mut self) -> f64 {
        normal_quantile(self.next_uniform())
    }

    /// Deterministically derive an independent child seed, e.g. one per
    /// bootstrap draw.
    pub fn child_seed(master: u64, index: u64) -> u64 {
        Self::word_at(master ^ 0xD1B5_4A32_D192_ED03, index)
    }
}

//! Deterministic random stream.
//!
//! [`SeededGenerator`] is SplitMix64: a 64-bit counter advanced by the
//! golden-ratio increment `0x9E3779B97F4A7C15`, with each counter value passed
//! through the avalanche finalizer
//!
//! ```text
//! z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//! z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//! z =  z ^ (z >> 31)
//! ```
//!
//! These constants are fixed; changing them changes every recorded
//! experiment. The first draw from seed `s` is `mix64(s + GOLDEN_GAMMA)`.

use crate::{Error, Result};

pub const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// The SplitMix64 finalizer. A bijection on `u64`.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeededGenerator {
    state: u64,
    origin_seed: u64,
}

impl SeededGenerator {
    pub fn new(seed: u64) -> Self {
        Self {
            state: seed,
            origin_seed: seed,
        }
    }

    pub fn origin_seed(&self) -> u64 {
        self.origin_seed
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    /// Uniform on `[0, 1)` with 53 bits of resolution.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `0..bound`.
    ///
    /// Widening multiply with rejection of the biased low range, so every
    /// value is exactly equally likely.
    pub fn next_uint_below(&mut self, bound: usize) -> Result<usize> {
        if bound == 0 {
            return Err(Error::arg("next_uint_below requires bound >= 1"));
        }
        Ok(self.below_unchecked(bound as u64) as usize)
    }

    #[inline]
    pub(crate) fn below_unchecked(&mut self, bound: u64) -> u64 {
        let mut m = u128::from(self.next_u64()) * u128::from(bound);
        let mut low = m as u64;
        if low < bound {
            let threshold = bound.wrapping_neg() % bound;
            while low < threshold {
                m = u128::from(self.next_u64()) * u128::from(bound);
                low = m as u64;
            }
        }
        (m >> 64) as u64
    }

    /// Standard normal draw via the cosine branch of Box–Muller:
    /// `sqrt(-2 ln(1 - u1)) * cos(2π u2)` for two consecutive uniforms.
    pub fn next_gaussian(&mut self) -> f64 {
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// In-place Fisher–Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below_unchecked(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}

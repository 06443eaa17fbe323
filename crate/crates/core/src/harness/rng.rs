//! Seeded draws for the randomized checks.
//!
//! The generator is xoshiro256++ seeded from a `u64` through SplitMix64, as
//! in the reference implementation. Reals are the top 53 bits of a draw
//! scaled by 2^-53, so every seed gives the same sequence on every platform.

use rand_core::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone)]
pub struct CheckRng(Xoshiro256PlusPlus);

impl CheckRng {
    pub fn new(seed: u64) -> Self {
        CheckRng(Xoshiro256PlusPlus::seed_from_u64(seed))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    /// Uniform on [0, 1) with 53 random mantissa bits.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Index in `0..n`.
    pub fn index(&mut self, n: usize) -> usize {
        ((self.uniform() * n as f64) as usize).min(n - 1)
    }

    pub fn uniform_vec(&mut self, n: usize, lo: f64, hi: f64) -> Vec<f64> {
        (0..n).map(|_| self.uniform_in(lo, hi)).collect()
    }
}

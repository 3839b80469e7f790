//! Seeded randomness. Every random choice in the crate flows through [`Rng`].

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::linalg::{c64, C64};

/// Deterministic generator built on ChaCha8.
#[derive(Clone, Debug)]
pub struct Rng {
    inner: ChaCha8Rng,
    spare: Option<f64>,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng { inner: ChaCha8Rng::seed_from_u64(seed), spare: None }
    }

    /// Derive an independent stream from a seed and a stream label.
    pub fn derived(seed: u64, stream: u64) -> Self {
        let mut rng = Self::new(seed);
        rng.inner.set_stream(stream);
        rng
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `0..n` (`n > 0`).
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        let zone = u64::MAX - (u64::MAX % n as u64);
        loop {
            let v = self.inner.next_u64();
            if v < zone {
                return (v % n as u64) as usize;
            }
        }
    }

    /// Standard normal sample (Box-Muller, polar-free form).
    pub fn normal(&mut self) -> f64 {
        if let Some(v) = self.spare.take() {
            return v;
        }
        let mut u1 = self.uniform();
        while u1 <= f64::MIN_POSITIVE {
            u1 = self.uniform();
        }
        let u2 = self.uniform();
        let r = libm::sqrt(-2.0 * libm::log(u1));
        let t = 2.0 * core::f64::consts::PI * u2;
        self.spare = Some(r * libm::sin(t));
        r * libm::cos(t)
    }

    /// Complex Gaussian with unit variance `E|z|^2 = 1`.
    pub fn complex_normal(&mut self) -> C64 {
        let s = core::f64::consts::FRAC_1_SQRT_2;
        c64(self.normal() * s, self.normal() * s)
    }

    pub fn phase(&mut self) -> f64 {
        2.0 * core::f64::consts::PI * self.uniform()
    }
}

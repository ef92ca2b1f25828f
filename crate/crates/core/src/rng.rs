//! Seedable random source shared by every stochastic component.

use nalgebra::Complex;
use rand::{Rng as _, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Deterministic pseudo-random generator. Identical seeds and identical call
/// sequences produce bit-identical streams.
#[derive(Debug, Clone)]
pub struct SimRng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl SimRng {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Independent stream for the same seed, so one seed can drive several
    /// consumers (channel draws, randomization) without correlation.
    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { seed, inner }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    pub fn normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// Circularly-symmetric complex Gaussian with unit variance, CN(0, 1).
    pub fn complex_normal(&mut self) -> Complex<f64> {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Complex::new(s * self.normal(), s * self.normal())
    }

    /// Uniform phase in [0, 2π).
    pub fn phase(&mut self) -> f64 {
        std::f64::consts::TAU * self.uniform()
    }

    pub fn below(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }
}

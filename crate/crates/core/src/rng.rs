//! Counter-addressed Gaussian streams.
//!
//! A draw is identified by `(seed, run, iteration, sample)`. The tuple is mixed
//! into a ChaCha8 key, so any worker can regenerate any draw without touching
//! shared state, and results do not depend on scheduling.

use alloc::vec::Vec;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::vector::Vector;

/// Fixed run-ids used across the crate so the same seed never reuses a draw
/// for two different purposes.
pub mod lane {
    /// Noise injected into iterates (`z_{k+1}`).
    pub const ITERATES: u64 = 0;
    /// Monte-Carlo telemetry estimates.
    pub const TELEMETRY: u64 = 1;
    /// Observation noise.
    pub const OBSERVATION: u64 = 2;
    /// Inpainting masks.
    pub const MASK: u64 = 3;
    /// Ground-truth sampling.
    pub const TRUTH: u64 = 4;
    /// Probe points for Lipschitz estimation.
    pub const PROBES: u64 = 5;
    /// Noise-floor counterexample recursion.
    pub const COUNTEREXAMPLE: u64 = 6;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub run: u64,
    pub iteration: u64,
    pub sample: u64,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            run: 0,
            iteration: 0,
            sample: 0,
        }
    }

    pub fn with_run(self, run: u64) -> Self {
        Self { run, ..self }
    }

    pub fn at(self, iteration: u64, sample: u64) -> Self {
        Self {
            iteration,
            sample,
            ..self
        }
    }

    pub fn with_sample(self, sample: u64) -> Self {
        Self { sample, ..self }
    }

    /// Generator positioned at the start of this path.
    pub fn generator(&self) -> ChaCha8Rng {
        let mut state = self.seed ^ 0x5eed_5eed_5eed_5eed;
        let mut key = [0u8; 32];
        let words = [self.run, self.iteration, self.sample, 0x736e_6f72_656c_6162];
        for (chunk, word) in key.chunks_exact_mut(8).zip(words) {
            state = splitmix64(state ^ splitmix64(word));
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        ChaCha8Rng::from_seed(key)
    }

    /// `n` independent standard normal variates.
    pub fn gaussian(&self, n: usize) -> Vec<f64> {
        let mut rng = self.generator();
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    pub fn gaussian_vector(&self, n: usize) -> Vector {
        Vector::from_raw(self.gaussian(n.max(1)))
    }

    /// Uniform variates in [0, 1).
    pub fn uniform(&self, n: usize) -> Vec<f64> {
        let mut rng = self.generator();
        (0..n).map(|_| unit_f64(rng.next_u64())).collect()
    }
}

/// `n` standard normal variates for `stream`; see [`RngStream::gaussian`].
pub fn gaussian_draw(stream: &RngStream, n: usize) -> Vector {
    stream.gaussian_vector(n)
}

pub(crate) fn unit_f64(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform index in `0..n` via widening multiply.
pub(crate) fn below(rng: &mut ChaCha8Rng, n: usize) -> usize {
    ((rng.next_u64() as u128 * n as u128) >> 64) as usize
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_path_same_draw() {
        let s = RngStream::new(42).with_run(3).at(17, 5);
        assert_eq!(s.gaussian(64), s.gaussian(64));
        assert_ne!(s.gaussian(8), s.at(17, 6).gaussian(8));
        assert_ne!(s.gaussian(8), s.with_run(4).gaussian(8));
        assert_ne!(s.gaussian(8), RngStream { seed: 43, ..s }.gaussian(8));
    }

    #[test]
    fn prefix_stable() {
        // Drawing more values does not change the leading ones.
        let s = RngStream::new(9).at(2, 1);
        assert_eq!(s.gaussian(10)[..], s.gaussian(100)[..10]);
    }

    #[test]
    fn moments() {
        let n = 100_000;
        let z = RngStream::new(1).gaussian(n);
        let mean = z.iter().sum::<f64>() / n as f64;
        let var = z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!(mean.abs() < 4.0 / (n as f64).sqrt(), "mean {mean}");
        assert!((var - 1.0).abs() < 0.05, "var {var}");
    }

    #[test]
    fn sample_indices_uncorrelated() {
        let base = RngStream::new(7).at(0, 0);
        let pairs = 10_000u64;
        let (mut sxy, mut sx, mut sy, mut sxx, mut syy) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for i in 0..pairs {
            let a = base.with_sample(2 * i).gaussian(1)[0];
            let b = base.with_sample(2 * i + 1).gaussian(1)[0];
            sx += a;
            sy += b;
            sxy += a * b;
            sxx += a * a;
            syy += b * b;
        }
        let n = pairs as f64;
        let cov = sxy / n - (sx / n) * (sy / n);
        let corr = cov / ((sxx / n - (sx / n).powi(2)) * (syy / n - (sy / n).powi(2))).sqrt();
        assert!(corr.abs() < 0.05, "corr {corr}");
    }
}

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use snorelab_core::fidelity::Degradation;
use snorelab_core::{DenoiserModel, Fidelity, GmmPrior, Vector};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `w = ½, ½`, `μ = ∓1`, `τ = ½`.
pub fn symmetric_pair() -> GmmPrior {
    GmmPrior::new(vec![0.5, 0.5], vec![vec![-1.0], vec![1.0]], vec![0.25, 0.25]).unwrap()
}

/// Unequal weights and widths.
pub fn skewed_pair() -> GmmPrior {
    GmmPrior::new(vec![0.3, 0.7], vec![vec![-0.5], vec![1.5]], vec![0.1, 0.4]).unwrap()
}

pub fn random_prior(r: &mut ChaCha8Rng, d: usize) -> GmmPrior {
    let k = r.random_range(1..=3);
    let weights: Vec<f64> = (0..k).map(|_| r.random_range(0.2..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let means = (0..k)
        .map(|_| (0..d).map(|_| r.random_range(-1.5..1.5)).collect())
        .collect();
    let variances = (0..k).map(|_| r.random_range(0.05..1.0)).collect();
    GmmPrior::new(weights.iter().map(|w| w / total).collect(), means, variances).unwrap()
}

pub fn random_vec(r: &mut ChaCha8Rng, d: usize, scale: f64) -> Vec<f64> {
    (0..d).map(|_| r.random_range(-scale..scale)).collect()
}

pub fn vector(data: &[f64]) -> Vector {
    Vector::new(data.to_vec()).unwrap()
}

/// The d = 4 quadratic test problem: `y = 0`, `σ_y`, single Gaussian prior.
pub fn quadratic_problem(sigma_y: f64, mu: f64, tau2: f64) -> (Fidelity, DenoiserModel) {
    let fid = Degradation::denoise(sigma_y)
        .unwrap()
        .observe(Vector::zeros(4))
        .unwrap();
    let den = DenoiserModel::new(GmmPrior::gaussian(vec![mu; 4], tau2).unwrap());
    (fid, den)
}

/// A random differentiable fidelity of each kind on dimension `d`.
pub fn random_fidelities(r: &mut ChaCha8Rng, d: usize) -> Vec<Fidelity> {
    let y = vector(&random_vec(r, d, 1.0));
    let sigma_y = r.random_range(0.2..1.5);
    let mut mask: Vec<bool> = (0..d).map(|_| r.random_bool(0.6)).collect();
    mask[0] = true;
    let mut kernel: Vec<f64> = (0..d.min(3)).map(|_| r.random_range(0.1..1.0)).collect();
    let s: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|k| *k /= s);
    vec![
        Degradation::denoise(sigma_y).unwrap().observe(y.clone()).unwrap(),
        Degradation::inpaint(mask, sigma_y).unwrap().observe(y.clone()).unwrap(),
        Degradation::deblur(kernel, sigma_y).unwrap().observe(y).unwrap(),
    ]
}

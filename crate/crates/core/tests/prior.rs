mod common;

use approx::assert_abs_diff_eq;
use rand::Rng;
use common::*;
use proptest::prelude::*;
use snorelab_core::oracles::{fd_gradient, max_difference_ratio, quadrature_posterior_mean, trapezoid};
use snorelab_core::prior::{denoiser_lipschitz, mmse_denoise, potential, score, smoothed_log_density};
use snorelab_core::{Denoiser, DenoiserModel, GmmPrior, ProbePlan, RngStream};

#[test]
fn gradient_step_identity_on_random_priors() {
    let mut r = rng(1);
    for _ in 0..100 {
        let d = r.random_range(1..=4);
        let den = DenoiserModel::new(random_prior(&mut r, d));
        let sigma = r.random_range(0.2..1.0);
        let x = random_vec(&mut r, d, 2.0);
        let fd = fd_gradient(|p| den.potential(sigma, p), &x, 1e-5);
        let dx = den.denoise(sigma, &x);
        for i in 0..d {
            assert!(((x[i] - dx[i]) - fd[i]).abs() <= 1e-5, "coordinate {i}");
        }
    }
}



#[test]
fn tweedie_consistency_and_responsibilities() {
    let mut r = rng(2);
    for _ in 0..100 {
        let d = r.random_range(1..=5);
        let prior = random_prior(&mut r, d);
        let den = DenoiserModel::new(prior.clone());
        let sigma = r.random_range(0.1..1.5);
        let x = vector(&random_vec(&mut r, d, 3.0));
        let dx = mmse_denoise(&den, sigma, &x).unwrap();
        let s = score(&prior, sigma, &x).unwrap();
        for i in 0..d {
            assert!((dx[i] - x[i] - sigma * sigma * s[i]).abs() < 1e-13);
        }
        let (resp, _) = prior.responsibilities(sigma, x.as_slice());
        assert!(resp.iter().all(|&v| (0.0..=1.0).contains(&v)));
        assert!((resp.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn spec_values() {
    let g = GmmPrior::gaussian(vec![0.0], 1.0).unwrap();
    let den = DenoiserModel::new(g.clone());
    let half_log_4pi = 0.5 * (4.0 * std::f64::consts::PI).ln();
    assert_abs_diff_eq!(smoothed_log_density(&g, 1.0, &vector(&[0.0])).unwrap(), -half_log_4pi, epsilon = 1e-14);
    assert_abs_diff_eq!(potential(&den, 1.0, &vector(&[0.0])).unwrap(), half_log_4pi, epsilon = 1e-14);
    assert_abs_diff_eq!(score(&g, 1.0, &vector(&[2.0])).unwrap()[0], -1.0, epsilon = 1e-15);
    assert_abs_diff_eq!(mmse_denoise(&den, 1.0, &vector(&[0.8])).unwrap()[0], 0.4, epsilon = 1e-15);
    let plan = ProbePlan::default();
    assert_eq!(denoiser_lipschitz(&den, 1.0, &plan).unwrap().value, 0.5);
    let half = DenoiserModel::new(GmmPrior::gaussian(vec![0.0], 0.25).unwrap());
    assert_eq!(denoiser_lipschitz(&half, 0.5, &plan).unwrap().value, 0.5);
}

#[test]
fn pair_score_and_denoiser_match_oracles() {
    let prior = symmetric_pair();
    let x = vector(&[0.3]);
    let fd = fd_gradient(|p| smoothed_log_density(&prior, 0.5, &vector(p)).unwrap(), x.as_slice(), 1e-5);
    assert!((score(&prior, 0.5, &x).unwrap()[0] - fd[0]).abs() < 1e-6);
    let den = DenoiserModel::new(prior.clone());
    let quad = quadrature_posterior_mean(&prior, 0.5, &x, 64).unwrap();
    assert!((mmse_denoise(&den, 0.5, &x).unwrap()[0] - quad[0]).abs() < 1e-6);
    // density integrates to one
    for p in [symmetric_pair(), skewed_pair()] {
        let mass = trapezoid(|t| smoothed_log_density(&p, 0.5, &vector(&[t])).unwrap().exp(), -12.0, 12.0, 24_000);
        assert!((mass - 1.0).abs() < 1e-6);
    }
}

#[test]
fn denoiser_agrees_with_quadrature_posterior_mean() {
    let mut r = rng(3);
    for _ in 0..50 {
        let d = r.random_range(1..=2);
        let prior = random_prior(&mut r, d);
        let sigma = r.random_range(0.3..1.0);
        let x = vector(&random_vec(&mut r, d, 2.0));
        let den = DenoiserModel::new(prior.clone());
        let a = mmse_denoise(&den, sigma, &x).unwrap();
        let b = quadrature_posterior_mean(&prior, sigma, &x, 64).unwrap();
        for i in 0..d {
            assert!((a[i] - b[i]).abs() < 1e-6, "{} vs {}", a[i], b[i]);
        }
    }
}

#[test]
fn lipschitz_estimate_dominates_sampled_ratios() {
    let mut r = rng(4);
    for prior in [symmetric_pair(), skewed_pair()] {
        let den = DenoiserModel::new(prior);
        for sigma in [0.3, 0.5, 1.0] {
            let l = denoiser_lipschitz(&den, sigma, &ProbePlan::default()).unwrap();
            assert!(!l.exact);
            let pairs: Vec<_> = (0..1000)
                .map(|_| {
                    let a = random_vec(&mut r, 1, 3.0);
                    let b = vec![a[0] + r.random_range(-0.5..0.5)];
                    (a, b)
                })
                .collect();
            let ratio = max_difference_ratio(|p| den.denoise(sigma, p), &pairs);
            assert!(ratio <= l.value + 1e-9, "σ={sigma}: {ratio} > {}", l.value);
            assert!(den.lipschitz(sigma) >= l.value * 1.1 - 1e-15);
        }
    }
}

#[test]
fn translation_equivariance() {
    let prior = skewed_pair();
    let t = [2.5];
    let moved = DenoiserModel::new(prior.translated(&t).unwrap());
    let den = DenoiserModel::new(prior);
    for x in [-1.0, 0.2, 3.0] {
        let a = den.potential(0.4, &[x]);
        let b = moved.potential(0.4, &[x + t[0]]);
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn sampled_truth_is_deterministic() {
    let prior = skewed_pair();
    let s = RngStream::new(5);
    assert_eq!(prior.sample(&s), prior.sample(&s));
}

proptest! {
    #[test]
    fn single_gaussian_denoiser_is_affine(
        mu in -2.0f64..2.0, tau2 in 0.01f64..4.0, sigma in 0.05f64..2.0,
        x in -5.0f64..5.0, y in -5.0f64..5.0, a in 0.0f64..1.0,
    ) {
        let den = DenoiserModel::new(GmmPrior::gaussian(vec![mu], tau2).unwrap());
        let lhs = den.denoise(sigma, &[a * x + (1.0 - a) * y])[0];
        let rhs = a * den.denoise(sigma, &[x])[0] + (1.0 - a) * den.denoise(sigma, &[y])[0];
        prop_assert!((lhs - rhs).abs() < 1e-12);
        prop_assert!((den.lipschitz(sigma) - tau2 / (tau2 + sigma * sigma)).abs() < 1e-15);
        prop_assert!(den.lipschitz(sigma) < 1.0);
    }

    #[test]
    fn symmetric_pair_is_odd(x in -4.0f64..4.0, sigma in 0.1f64..2.0) {
        let prior = symmetric_pair();
        let a = smoothed_log_density(&prior, sigma, &vector(&[x])).unwrap();
        let b = smoothed_log_density(&prior, sigma, &vector(&[-x])).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
        let den = DenoiserModel::new(prior);
        prop_assert!((den.denoise(sigma, &[x])[0] + den.denoise(sigma, &[-x])[0]).abs() < 1e-12);
    }

    #[test]
    fn far_points_stay_finite(x in -1e3f64..1e3, sigma in 0.01f64..1.0) {
        let den = DenoiserModel::new(skewed_pair());
        prop_assert!(den.denoise(sigma, &[x])[0].is_finite());
        prop_assert!(den.potential(sigma, &[x]).is_finite());
    }
}

mod common;

use common::*;
use rand::Rng;
use snorelab_core::regularizer::{
    bias_second_moment, exact_grad_g, exact_value_g, mc_grad_g, mc_value_g, stoch_grad_g,
    stoch_grad_with_noise,
};
use snorelab_core::{Denoiser, DenoiserModel, GmmPrior, RngStream};

#[test]
fn snore_estimator_is_unbiased_at_random_probes() {
    let mut r = rng(10);
    let dens = [
        DenoiserModel::new(GmmPrior::gaussian(vec![0.3, -0.2], 0.5).unwrap()),
        DenoiserModel::new(symmetric_pair()),
        DenoiserModel::new(skewed_pair()),
    ];
    for p in 0..20 {
        let den = &dens[p % 3];
        let d = den.dim();
        let sigma = r.random_range(0.3..1.0);
        let x = vector(&random_vec(&mut r, d, 2.0));
        let exact = exact_grad_g(den, sigma, &x).unwrap();
        let est = mc_grad_g(den, sigma, &x, 10_000, &RngStream::new(p as u64)).unwrap();
        for i in 0..d {
            assert!(
                (est.value[i] - exact[i]).abs() <= 4.0 * est.component_stderr[i],
                "probe {p}: {} vs {}",
                est.value[i],
                exact[i]
            );
        }
    }
}

#[test]
fn smoothed_gradient_is_lipschitz() {
    let mut r = rng(11);
    let dens = [
        DenoiserModel::new(GmmPrior::gaussian(vec![0.0], 0.5).unwrap()),
        DenoiserModel::new(symmetric_pair()),
        DenoiserModel::new(skewed_pair()),
    ];
    for den in &dens {
        for sigma in [0.3, 0.6, 1.0] {
            let bound = (den.lipschitz(sigma) + 1.0) / (sigma * sigma);
            for _ in 0..200 {
                let a = random_vec(&mut r, 1, 3.0);
                let b = vec![a[0] + r.random_range(-1.0..1.0)];
                let ga = exact_grad_g(den, sigma, &vector(&a)).unwrap();
                let gb = exact_grad_g(den, sigma, &vector(&b)).unwrap();
                let ratio = (ga[0] - gb[0]).abs() / (a[0] - b[0]).abs();
                assert!(ratio <= bound + 1e-9, "{ratio} > {bound}");
            }
        }
    }
    // single Gaussian: the constant is exactly 1/(τ² + σ²)
    let den = &dens[0];
    let g1 = exact_grad_g(den, 0.6, &vector(&[1.0])).unwrap()[0];
    let g0 = exact_grad_g(den, 0.6, &vector(&[0.0])).unwrap()[0];
    assert!((g1 - g0 - 1.0 / (0.5 + 0.36)).abs() < 1e-14);
}

#[test]
fn bias_moment_below_bound_in_one_dimension() {
    let mut r = rng(12);
    for (p, den) in [
        DenoiserModel::new(GmmPrior::gaussian(vec![0.0], 1.0).unwrap()),
        DenoiserModel::new(symmetric_pair()),
        DenoiserModel::new(skewed_pair()),
    ]
    .iter()
    .enumerate()
    {
        for q in 0..5 {
            let x = vector(&random_vec(&mut r, 1, 2.0));
            let m = bias_second_moment(den, 0.5, &x, 10_000, &RngStream::new((p * 10 + q) as u64)).unwrap();
            assert!(m.estimate <= m.bound + 4.0 * m.stderr, "{m:?}");
        }
    }
}

#[test]
fn replaying_recorded_noise_reproduces_estimate() {
    let den = DenoiserModel::new(skewed_pair());
    let x = vector(&[0.25]);
    let s = RngStream::new(77).at(12, 0);
    let (g, z) = stoch_grad_g(&den, 0.4, &x, &s).unwrap();
    assert_eq!(g.as_slice(), &stoch_grad_with_noise(&den, 0.4, x.as_slice(), z.as_slice())[..]);
    assert_eq!(stoch_grad_g(&den, 0.4, &x, &s).unwrap().0, g);
}

#[test]
fn value_estimate_matches_quadrature_for_mixtures() {
    let den = DenoiserModel::new(skewed_pair());
    let x = vector(&[0.4]);
    let exact = exact_value_g(&den, 0.5, &x).unwrap();
    let mc = mc_value_g(&den, 0.5, &x, 100_000, &RngStream::new(13)).unwrap();
    assert!((mc.value - exact).abs() <= 4.0 * mc.stderr);
}

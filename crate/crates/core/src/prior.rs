//! Isotropic Gaussian-mixture priors and their exact MMSE denoisers.
//!
//! Smoothing a mixture `Σ w_i N(μ_i, τ_i² I)` by Gaussian noise of level σ
//! gives `p_σ = Σ w_i N(μ_i, (τ_i² + σ²) I)`. Everything here is computed from
//! the posterior responsibilities of that smoothed mixture:
//!
//! - score `∇log p_σ(x) = Σ r_i(x) (μ_i − x) / (τ_i² + σ²)`
//! - denoiser `D_σ(x) = x + σ² ∇log p_σ(x)` (Tweedie)
//! - potential `h_σ = −σ² log p_σ`, so that `D_σ = x − ∇h_σ`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)] // shadowed by inherent methods whenever std is linked
use num_traits::Float;

use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Result};
use crate::numeric::{log_sum_exp, symmetric_max_eigenvalue};
use crate::rng::{lane, unit_f64, RngStream};
use crate::vector::{check_len, Vector};

/// Inflation applied to probe-based Lipschitz estimates of mixture denoisers.
pub const DEFAULT_LIPSCHITZ_SAFETY: f64 = 1.1;

#[derive(Debug, Clone, PartialEq)]
pub struct GmmPrior {
    weights: Vec<f64>,
    /// K·d, component-major.
    means: Vec<f64>,
    variances: Vec<f64>,
    dim: usize,
}

impl GmmPrior {
    /// Weights must sum to one within 1e-9; they are renormalized exactly.
    pub fn new(weights: Vec<f64>, means: Vec<Vec<f64>>, variances: Vec<f64>) -> Result<Self> {
        let k = weights.len();
        if k == 0 {
            return Err(invalid(
                "prior.weights",
                "at least one component is required",
            ));
        }
        if means.len() != k || variances.len() != k {
            return Err(invalid(
                "prior",
                "weights, means and variances must have the same length",
            ));
        }
        if weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(invalid("prior.weights", "weights must be positive"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(invalid("prior.weights", "weights must sum to 1"));
        }
        if variances.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(invalid("prior.variances", "variances must be positive"));
        }
        let dim = means[0].len();
        if dim == 0 {
            return Err(invalid("prior.means", "means must be non-empty"));
        }
        let mut flat = Vec::with_capacity(k * dim);
        for m in &means {
            check_len(dim, m.len())?;
            if m.iter().any(|v| !v.is_finite()) {
                return Err(invalid("prior.means", "means must be finite"));
            }
            flat.extend_from_slice(m);
        }
        let weights = weights.iter().map(|w| w / total).collect();
        Ok(Self {
            weights,
            means: flat,
            variances,
            dim,
        })
    }

    pub fn gaussian(mean: Vec<f64>, variance: f64) -> Result<Self> {
        Self::new(vec![1.0], vec![mean], vec![variance])
    }

    pub fn components(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    pub fn mean(&self, i: usize) -> &[f64] {
        &self.means[i * self.dim..(i + 1) * self.dim]
    }

    /// Same mixture with every mean shifted by `t`.
    pub fn translated(&self, t: &[f64]) -> Result<Self> {
        check_len(self.dim, t.len())?;
        let mut out = self.clone();
        for chunk in out.means.chunks_exact_mut(self.dim) {
            for (m, s) in chunk.iter_mut().zip(t) {
                *m += s;
            }
        }
        Ok(out)
    }

    /// Per-component `log w_i + log N(x; μ_i, (τ_i² + σ²) I)`.
    fn log_terms(&self, sigma: f64, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        let d = self.dim as f64;
        for i in 0..self.components() {
            let v = self.variances[i] + sigma * sigma;
            let r2: f64 = x
                .iter()
                .zip(self.mean(i))
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            out.push(self.weights[i].ln() - 0.5 * r2 / v - 0.5 * d * (2.0 * PI * v).ln());
        }
    }

    /// Posterior responsibilities `r_i(x)` under the σ-smoothed mixture, and
    /// `log p_σ(x)`.
    pub fn responsibilities(&self, sigma: f64, x: &[f64]) -> (Vec<f64>, f64) {
        let mut terms = Vec::with_capacity(self.components());
        self.log_terms(sigma, x, &mut terms);
        let lse = log_sum_exp(&terms);
        for t in terms.iter_mut() {
            *t = (*t - lse).exp();
        }
        (terms, lse)
    }

    pub(crate) fn log_density_raw(&self, sigma: f64, x: &[f64]) -> f64 {
        let mut terms = Vec::with_capacity(self.components());
        self.log_terms(sigma, x, &mut terms);
        log_sum_exp(&terms)
    }

    pub(crate) fn score_into(&self, sigma: f64, x: &[f64], out: &mut [f64]) {
        let (r, _) = self.responsibilities(sigma, x);
        out.iter_mut().for_each(|o| *o = 0.0);
        for (i, ri) in r.iter().enumerate() {
            let scale = ri / (self.variances[i] + sigma * sigma);
            for ((o, m), xv) in out.iter_mut().zip(self.mean(i)).zip(x) {
                *o += scale * (m - xv);
            }
        }
    }

    /// Draws one sample from the (unsmoothed) prior.
    pub fn sample(&self, stream: &RngStream) -> Vector {
        let mut rng = stream.generator();
        let u = unit_f64(rand::RngCore::next_u64(&mut rng));
        let mut acc = 0.0;
        let mut comp = self.components() - 1;
        for (i, w) in self.weights.iter().enumerate() {
            acc += w;
            if u < acc {
                comp = i;
                break;
            }
        }
        let tau = self.variances[comp].sqrt();
        let data = self
            .mean(comp)
            .iter()
            .map(|m| {
                let z: f64 = StandardNormal.sample(&mut rng);
                m + tau * z
            })
            .collect();
        Vector::from_raw(data)
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(invalid("sigma", "noise level must be positive"));
    }
    Ok(())
}

/// `log p_σ(x)` for `p_σ = p ⋆ N(0, σ² I)`.
pub fn smoothed_log_density(prior: &GmmPrior, sigma: f64, x: &Vector) -> Result<f64> {
    check_sigma(sigma)?;
    check_len(prior.dim, x.dim())?;
    Ok(prior.log_density_raw(sigma, x.as_slice()))
}

/// `∇ log p_σ(x)`.
pub fn score(prior: &GmmPrior, sigma: f64, x: &Vector) -> Result<Vector> {
    check_sigma(sigma)?;
    check_len(prior.dim, x.dim())?;
    let mut out = vec![0.0; x.dim()];
    prior.score_into(sigma, x.as_slice(), &mut out);
    Ok(Vector::from_raw(out).with_shape_of(x))
}

/// Borrowed view of a single isotropic Gaussian prior `N(mean, variance·I)`.
#[derive(Debug, Clone, Copy)]
pub struct GaussianPrior<'a> {
    pub mean: &'a [f64],
    pub variance: f64,
}

/// A gradient-step denoiser `D_σ = Id − ∇h_σ` with a known Lipschitz bound.
pub trait Denoiser: Sync {
    fn dim(&self) -> usize;

    fn denoise_into(&self, sigma: f64, x: &[f64], out: &mut [f64]);

    /// `h_σ(x)`.
    fn potential(&self, sigma: f64, x: &[f64]) -> f64;

    /// Lipschitz constant `L` of `D_σ` used in step-size and bound formulas.
    fn lipschitz(&self, sigma: f64) -> f64;

    /// Present when the denoiser is the exact MMSE denoiser of one Gaussian,
    /// which makes `g_σ` and its gradient available in closed form.
    fn gaussian_prior(&self) -> Option<GaussianPrior<'_>> {
        None
    }

    fn denoise(&self, sigma: f64, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        self.denoise_into(sigma, x, &mut out);
        out
    }
}

/// Exact MMSE denoiser of a [`GmmPrior`].
#[derive(Debug, Clone)]
pub struct DenoiserModel {
    prior: GmmPrior,
    safety: f64,
    probes: ProbePlan,
}

impl DenoiserModel {
    pub fn new(prior: GmmPrior) -> Self {
        Self {
            prior,
            safety: DEFAULT_LIPSCHITZ_SAFETY,
            probes: ProbePlan::default(),
        }
    }

    pub fn with_safety_factor(mut self, safety: f64) -> Result<Self> {
        if !(safety >= 1.0 && safety.is_finite()) {
            return Err(invalid("lipschitz_safety", "must be ≥ 1"));
        }
        self.safety = safety;
        Ok(self)
    }

    pub fn with_probes(mut self, probes: ProbePlan) -> Self {
        self.probes = probes;
        self
    }

    pub fn prior(&self) -> &GmmPrior {
        &self.prior
    }

    pub fn safety_factor(&self) -> f64 {
        self.safety
    }

    /// Spectral norm of the Jacobian of `D_σ` at `x`.
    ///
    /// `J = c·I + σ² Σ_i r_i (a_i − m)(a_i − m)ᵀ` with `a_i = (μ_i − x)/v_i`,
    /// `m = Σ r_i a_i` and `c = 1 − σ² Σ r_i / v_i > 0`; the rank-(K−1) part is
    /// diagonalized through its K×K Gram matrix.
    pub fn jacobian_norm(&self, sigma: f64, x: &[f64]) -> f64 {
        let p = &self.prior;
        let k = p.components();
        let s2 = sigma * sigma;
        let (r, _) = p.responsibilities(sigma, x);
        let mut c = 1.0;
        let mut a = vec![0.0; k * p.dim];
        let mut m = vec![0.0; p.dim];
        for i in 0..k {
            let v = p.variances[i] + s2;
            c -= s2 * r[i] / v;
            for (j, (mu, xv)) in p.mean(i).iter().zip(x).enumerate() {
                let aij = (mu - xv) / v;
                a[i * p.dim + j] = aij;
                m[j] += r[i] * aij;
            }
        }
        if k == 1 {
            return c.abs();
        }
        for i in 0..k {
            for (aij, mj) in a[i * p.dim..(i + 1) * p.dim].iter_mut().zip(&m) {
                *aij -= mj;
            }
        }
        let mut gram = vec![0.0; k * k];
        for i in 0..k {
            for j in i..k {
                let dot: f64 = a[i * p.dim..(i + 1) * p.dim]
                    .iter()
                    .zip(&a[j * p.dim..(j + 1) * p.dim])
                    .map(|(u, v)| u * v)
                    .sum();
                let g = (r[i] * r[j]).sqrt() * dot;
                gram[i * k + j] = g;
                gram[j * k + i] = g;
            }
        }
        let top = symmetric_max_eigenvalue(gram, k).max(0.0);
        c.abs().max((c + s2 * top).abs())
    }

    /// Lipschitz estimate of `D_σ`: exact for one component, otherwise the
    /// largest Jacobian norm over the probe plan (not inflated).
    pub fn lipschitz_estimate(&self, sigma: f64, plan: &ProbePlan) -> LipschitzEstimate {
        let p = &self.prior;
        if p.components() == 1 {
            let t = p.variances[0];
            return LipschitzEstimate {
                value: t / (t + sigma * sigma),
                exact: true,
            };
        }
        let value = plan
            .points(p, sigma)
            .iter()
            .map(|x| self.jacobian_norm(sigma, x))
            .fold(0.0, f64::max);
        LipschitzEstimate {
            value,
            exact: false,
        }
    }
}

impl Denoiser for DenoiserModel {
    fn dim(&self) -> usize {
        self.prior.dim
    }

    fn denoise_into(&self, sigma: f64, x: &[f64], out: &mut [f64]) {
        self.prior.score_into(sigma, x, out);
        let s2 = sigma * sigma;
        for (o, xv) in out.iter_mut().zip(x) {
            *o = xv + s2 * *o;
        }
    }

    fn potential(&self, sigma: f64, x: &[f64]) -> f64 {
        -sigma * sigma * self.prior.log_density_raw(sigma, x)
    }

    fn lipschitz(&self, sigma: f64) -> f64 {
        let est = self.lipschitz_estimate(sigma, &self.probes);
        if est.exact {
            est.value
        } else {
            est.value * self.safety
        }
    }

    fn gaussian_prior(&self) -> Option<GaussianPrior<'_>> {
        (self.prior.components() == 1).then(|| GaussianPrior {
            mean: self.prior.mean(0),
            variance: self.prior.variances[0],
        })
    }
}

/// Denoiser returning a fixed image; its potential is `‖x − c‖²/2`. Useful as a
/// zero-variance surrogate.
#[derive(Debug, Clone)]
pub struct ConstantDenoiser {
    pub value: Vec<f64>,
}

impl Denoiser for ConstantDenoiser {
    fn dim(&self) -> usize {
        self.value.len()
    }

    fn denoise_into(&self, _sigma: f64, _x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.value);
    }

    fn potential(&self, _sigma: f64, x: &[f64]) -> f64 {
        0.5 * x
            .iter()
            .zip(&self.value)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
    }

    fn lipschitz(&self, _sigma: f64) -> f64 {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzEstimate {
    pub value: f64,
    /// `true` when `value` is the exact constant rather than a probe maximum.
    pub exact: bool,
}

/// Where to evaluate the denoiser Jacobian when estimating `L`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbePlan {
    /// Points drawn from the smoothed mixture.
    pub random: usize,
    /// Points on each segment between two means (extended by half its length
    /// on both sides).
    pub segment: usize,
    pub seed: u64,
}

impl Default for ProbePlan {
    fn default() -> Self {
        Self {
            random: 512,
            segment: 257,
            seed: 0x1ab5,
        }
    }
}

impl ProbePlan {
    pub fn points(&self, prior: &GmmPrior, sigma: f64) -> Vec<Vec<f64>> {
        let k = prior.components();
        let base = RngStream::new(self.seed).with_run(lane::PROBES);
        let mut pts = Vec::with_capacity(self.random + self.segment * k * k / 2);
        for s in 0..self.random {
            let i = s % k;
            let spread = (prior.variances[i] + sigma * sigma).sqrt();
            let z = base.at(0, s as u64).gaussian(prior.dim);
            pts.push(
                prior
                    .mean(i)
                    .iter()
                    .zip(z)
                    .map(|(m, zj)| m + spread * zj)
                    .collect(),
            );
        }
        if self.segment >= 2 {
            for i in 0..k {
                for j in (i + 1)..k {
                    for s in 0..self.segment {
                        let t = -0.5 + 2.0 * s as f64 / (self.segment - 1) as f64;
                        pts.push(
                            prior
                                .mean(i)
                                .iter()
                                .zip(prior.mean(j))
                                .map(|(a, b)| a + t * (b - a))
                                .collect(),
                        );
                    }
                }
            }
        }
        pts
    }
}

/// `D_σ(x)`, the posterior mean `E[X | X + σZ = x]`.
pub fn mmse_denoise(den: &DenoiserModel, sigma: f64, x: &Vector) -> Result<Vector> {
    check_sigma(sigma)?;
    check_len(den.dim(), x.dim())?;
    Ok(Vector::from_raw(den.denoise(sigma, x.as_slice())).with_shape_of(x))
}

/// `h_σ(x) = −σ² log p_σ(x)`.
pub fn potential(den: &DenoiserModel, sigma: f64, x: &Vector) -> Result<f64> {
    check_sigma(sigma)?;
    check_len(den.dim(), x.dim())?;
    Ok(den.potential(sigma, x.as_slice()))
}

pub fn denoiser_lipschitz(
    den: &DenoiserModel,
    sigma: f64,
    probes: &ProbePlan,
) -> Result<LipschitzEstimate> {
    check_sigma(sigma)?;
    Ok(den.lipschitz_estimate(sigma, probes))
}

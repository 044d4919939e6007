//! The smoothed regularizer `g_σ(x) = E_z[h_σ(x + σz)] / σ²` and its gradient
//! `∇g_σ(x) = (x − E_z[D_σ(x + σz)]) / σ²`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)] // shadowed by inherent methods whenever std is linked
use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::numeric::GaussHermite;
use crate::prior::Denoiser;
use crate::rng::RngStream;
use crate::vector::{check_len, norm_sq, Vector};

/// Nodes per axis of the tensor Gauss–Hermite rule behind the exact routes.
pub const QUADRATURE_NODES: usize = 64;
/// Largest dimension handled by tensor quadrature.
pub const MAX_QUADRATURE_DIM: usize = 3;

/// Monte-Carlo vector estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct GradEstimate {
    pub value: Vector,
    /// Largest per-component standard error.
    pub stderr: f64,
    pub component_stderr: Vec<f64>,
    pub n_samples: usize,
}

/// Monte-Carlo scalar estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValueEstimate {
    pub value: f64,
    pub stderr: f64,
    pub n_samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiasSample {
    pub zeta: Vector,
    pub norm_sq: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasMoment {
    /// MC estimate of `E‖ζ‖²`.
    pub estimate: f64,
    pub stderr: f64,
    /// `2L²/σ²`.
    pub bound: f64,
    /// `d·L²/σ²`, the Gaussian-Poincaré bound, which holds in every dimension.
    pub dimension_bound: f64,
    /// `estimate − 4·stderr > bound`.
    pub violated: bool,
}

fn check_inputs<D: Denoiser + ?Sized>(den: &D, sigma: f64, x: &[f64]) -> Result<()> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(invalid("sigma", "noise level must be positive"));
    }
    check_len(den.dim(), x.len())
}

/// `(x − D_σ(x + σz)) / σ²` for a given `z`.
pub fn stoch_grad_with_noise<D: Denoiser + ?Sized>(
    den: &D,
    sigma: f64,
    x: &[f64],
    z: &[f64],
) -> Vec<f64> {
    let noisy: Vec<f64> = x.iter().zip(z).map(|(a, b)| a + sigma * b).collect();
    let mut out = den.denoise(sigma, &noisy);
    let inv = 1.0 / (sigma * sigma);
    for (o, xv) in out.iter_mut().zip(x) {
        *o = (xv - *o) * inv;
    }
    out
}

/// Single-sample SNORE estimate of `∇g_σ(x)`; returns the estimate and the `z`
/// that produced it.
pub fn stoch_grad_g<D: Denoiser + ?Sized>(
    den: &D,
    sigma: f64,
    x: &Vector,
    stream: &RngStream,
) -> Result<(Vector, Vector)> {
    check_inputs(den, sigma, x.as_slice())?;
    let z = stream.gaussian(x.dim());
    let g = stoch_grad_with_noise(den, sigma, x.as_slice(), &z);
    Ok((
        Vector::from_raw(g).with_shape_of(x),
        Vector::from_raw(z).with_shape_of(x),
    ))
}

pub(crate) fn exact_grad_raw<D: Denoiser + ?Sized>(
    den: &D,
    sigma: f64,
    x: &[f64],
) -> Result<Vec<f64>> {
    if let Some(g) = den.gaussian_prior() {
        // E_z D_σ(x + σz) = μ + s(x − μ) with s = τ²/(τ²+σ²), hence (x − μ)/(τ² + σ²).
        let v = g.variance + sigma * sigma;
        return Ok(x.iter().zip(g.mean).map(|(a, m)| (a - m) / v).collect());
    }
    let d = x.len();
    if d > MAX_QUADRATURE_DIM {
        return Err(Error::QuadratureDimension { dim: d });
    }
    let gh = GaussHermite::new(QUADRATURE_NODES);
    let mut mean = vec![0.0; d];
    let mut point = vec![0.0; d];
    let mut out = vec![0.0; d];
    gh.for_each_tensor(d, |t, w| {
        for ((p, xv), tv) in point.iter_mut().zip(x).zip(t) {
            *p = xv + sigma * tv;
        }
        den.denoise_into(sigma, &point, &mut out);
        for (m, o) in mean.iter_mut().zip(&out) {
            *m += w * o;
        }
    });
    let inv = 1.0 / (sigma * sigma);
    Ok(x.iter().zip(&mean).map(|(a, m)| (a - m) * inv).collect())
}

/// `∇g_σ(x)`: closed form for a single Gaussian prior, tensor Gauss–Hermite
/// quadrature for `d ≤ 3`, otherwise an error pointing to [`mc_grad_g`].
pub fn exact_grad_g<D: Denoiser + ?Sized>(den: &D, sigma: f64, x: &Vector) -> Result<Vector> {
    check_inputs(den, sigma, x.as_slice())?;
    Ok(Vector::from_raw(exact_grad_raw(den, sigma, x.as_slice())?).with_shape_of(x))
}

pub(crate) fn exact_value_raw<D: Denoiser + ?Sized>(den: &D, sigma: f64, x: &[f64]) -> Result<f64> {
    if let Some(g) = den.gaussian_prior() {
        // h_σ = −σ² log N(·; μ, vI) with v = τ² + σ², averaged over x + σz.
        let v = g.variance + sigma * sigma;
        let d = x.len() as f64;
        let r2: f64 = x.iter().zip(g.mean).map(|(a, m)| (a - m) * (a - m)).sum();
        return Ok((r2 + d * sigma * sigma) / (2.0 * v) + 0.5 * d * (2.0 * PI * v).ln());
    }
    let d = x.len();
    if d > MAX_QUADRATURE_DIM {
        return Err(Error::QuadratureDimension { dim: d });
    }
    let gh = GaussHermite::new(QUADRATURE_NODES);
    let mut point = vec![0.0; d];
    let mut total = 0.0;
    gh.for_each_tensor(d, |t, w| {
        for ((p, xv), tv) in point.iter_mut().zip(x).zip(t) {
            *p = xv + sigma * tv;
        }
        total += w * den.potential(sigma, &point);
    });
    Ok(total / (sigma * sigma))
}

/// `g_σ(x)` through the exact routes of [`exact_grad_g`].
pub fn exact_value_g<D: Denoiser + ?Sized>(den: &D, sigma: f64, x: &Vector) -> Result<f64> {
    check_inputs(den, sigma, x.as_slice())?;
    exact_value_raw(den, sigma, x.as_slice())
}

/// Running mean/variance, accumulated in sample order.
struct Welford {
    n: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Welford {
    fn new(d: usize) -> Self {
        Self {
            n: 0,
            mean: vec![0.0; d],
            m2: vec![0.0; d],
        }
    }

    fn push(&mut self, sample: &[f64]) {
        self.n += 1;
        let n = self.n as f64;
        for ((m, s), v) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(sample) {
            let delta = v - *m;
            *m += delta / n;
            *s += delta * (v - *m);
        }
    }

    fn stderr(&self) -> Vec<f64> {
        let n = self.n as f64;
        self.m2
            .iter()
            .map(|s| (s / (n - 1.0)).max(0.0).sqrt() / n.sqrt())
            .collect()
    }
}

fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        return Err(invalid("n", "at least two samples are required"));
    }
    Ok(())
}

/// Mean of `n` SNORE draws; sample `i` uses `stream.with_sample(i)`.
pub fn mc_grad_g<D: Denoiser + ?Sized>(
    den: &D,
    sigma: f64,
    x: &Vector,
    n: usize,
    stream: &RngStream,
) -> Result<GradEstimate> {
    check_inputs(den, sigma, x.as_slice())?;
    check_n(n)?;
    mc_grad_with(den, sigma, x, n, |i| {
        stream.with_sample(i as u64).gaussian(x.dim())
    })
}

pub(crate) fn mc_grad_with<D: Denoiser + ?Sized>(
    den: &D,
    sigma: f64,
    x: &Vector,
    n: usize,
    mut noise: impl FnMut(usize) -> Vec<f64>,
) -> Result<GradEstimate> {
    let mut acc = Welford::new(x.dim());
    for i in 0..n {
        let z = noise(i);
        acc.push(&stoch_grad_with_noise(den, sigma, x.as_slice(), &z));
    }
    let component_stderr = acc.stderr();
    let stderr = component_stderr.iter().copied().fold(0.0, f64::max);
    Ok(GradEstimate {
        value: Vector::from_raw(acc.mean).with_shape_of(x),
        stderr,
        component_stderr,
        n_samples: n,
    })
}

/// MC estimate of `g_σ(x)` as the mean of `h_σ(x + σz)/σ²`.
pub fn mc_value_g<D: Denoiser + ?Sized>(
    den: &D,
    sigma: f64,
    x: &Vector,
    n: usize,
    stream: &RngStream,
) -> Result<ValueEstimate> {
    check_inputs(den, sigma, x.as_slice())?;
    check_n(n)?;
    let mut acc = Welford::new(1);
    let inv = 1.0 / (sigma * sigma);
    let mut point = vec![0.0; x.dim()];
    for i in 0..n {
        let z = stream.with_sample(i as u64).gaussian(x.dim());
        for ((p, xv), zv) in point.iter_mut().zip(x.iter()).zip(&z) {
            *p = xv + sigma * zv;
        }
        acc.push(&[den.potential(sigma, &point) * inv]);
    }
    Ok(ValueEstimate {
        value: acc.mean[0],
        stderr: acc.stderr()[0],
        n_samples: n,
    })
}

/// One draw of `ζ = ∇̃g_σ(x) − ∇g_σ(x)`.
pub fn bias_sample<D: Denoiser + ?Sized>(
    den: &D,
    sigma: f64,
    x: &Vector,
    stream: &RngStream,
) -> Result<BiasSample> {
    let exact = exact_grad_raw(den, sigma, x.as_slice())?;
    let (g, _) = stoch_grad_g(den, sigma, x, stream)?;
    let zeta: Vec<f64> = g.iter().zip(&exact).map(|(a, b)| a - b).collect();
    let norm_sq = norm_sq(&zeta);
    Ok(BiasSample {
        zeta: Vector::from_raw(zeta),
        norm_sq,
    })
}

/// MC estimate of `E‖ζ‖²` against `2L²/σ²`.
pub fn bias_second_moment<D: Denoiser + ?Sized>(
    den: &D,
    sigma: f64,
    x: &Vector,
    n: usize,
    stream: &RngStream,
) -> Result<BiasMoment> {
    check_inputs(den, sigma, x.as_slice())?;
    check_n(n)?;
    let exact = exact_grad_raw(den, sigma, x.as_slice())?;
    let mut acc = Welford::new(1);
    for i in 0..n {
        let z = stream.with_sample(i as u64).gaussian(x.dim());
        let g = stoch_grad_with_noise(den, sigma, x.as_slice(), &z);
        let sq: f64 = g.iter().zip(&exact).map(|(a, b)| (a - b) * (a - b)).sum();
        acc.push(&[sq]);
    }
    let estimate = acc.mean[0];
    let stderr = acc.stderr()[0];
    let l = den.lipschitz(sigma);
    let bound = 2.0 * l * l / (sigma * sigma);
    Ok(BiasMoment {
        estimate,
        stderr,
        bound,
        dimension_bound: x.dim() as f64 * l * l / (sigma * sigma),
        violated: estimate - 4.0 * stderr > bound,
    })
}

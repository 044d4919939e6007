//! Brute-force references for cross-checking the closed forms: central finite
//! differences, grid proximal minimization, quadrature posterior means and
//! plain Monte-Carlo expectations. Nothing here depends on the solvers or the
//! theory module.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::numeric::{log_sum_exp, GaussHermite};
use crate::prior::GmmPrior;
use crate::rng::RngStream;
use crate::vector::{check_len, Vector};

/// Uniform grid `lo + (hi − lo)·j/steps`, `j = 0..=steps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl GridSpec {
    pub fn new(lo: f64, hi: f64, steps: usize) -> Result<Self> {
        let g = Self { lo, hi, steps };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lo < self.hi && self.lo.is_finite() && self.hi.is_finite()) {
            return Err(invalid("grid", "need finite lo < hi"));
        }
        if self.steps < 100 {
            return Err(invalid("grid.steps", "must be at least 100"));
        }
        Ok(())
    }

    pub fn point(&self, j: usize) -> f64 {
        self.lo + (self.hi - self.lo) * j as f64 / self.steps as f64
    }

    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / self.steps as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    pub fd_step: f64,
    pub grid: GridSpec,
    pub quad_nodes: usize,
    pub mc_n: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            fd_step: 1e-5,
            grid: GridSpec {
                lo: -10.0,
                hi: 10.0,
                steps: 2000,
            },
            quad_nodes: 64,
            mc_n: 10_000,
        }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        if !(self.fd_step > 0.0) {
            return Err(invalid("fd_step", "must be positive"));
        }
        if self.quad_nodes < 16 {
            return Err(invalid("quad_nodes", "must be at least 16"));
        }
        if self.mc_n < 2 {
            return Err(invalid("mc_n", "must be at least 2"));
        }
        Ok(())
    }
}

/// Central differences `(f(x + h e_i) − f(x − h e_i)) / 2h`.
pub fn fd_gradient(fun: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let up = fun(&probe);
            probe[i] = x[i] - h;
            let down = fun(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Golden-section minimization of a unimodal `obj` on `[a, b]`.
fn golden(obj: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (obj(c), obj(d));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-13 * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = obj(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = obj(d);
        }
    }
    0.5 * (a + b)
}

fn grid_argmin(obj: &impl Fn(f64) -> f64, grid: &GridSpec) -> Result<f64> {
    let (mut best, mut best_val) = (0, f64::INFINITY);
    for j in 0..=grid.steps {
        let v = obj(grid.point(j));
        if v < best_val {
            best = j;
            best_val = v;
        }
    }
    if !best_val.is_finite() {
        return Err(invalid("grid", "objective is infinite on every grid point"));
    }
    if best == 0 || best == grid.steps {
        return Err(Error::GridBoundary);
    }
    let z = grid.point(best);
    let (left, right) = (grid.point(best - 1), grid.point(best + 1));
    // A minimizer pinned to one grid point by an indicator stays there.
    if !(obj(left).is_finite() && obj(right).is_finite()) {
        return Ok(z);
    }
    let refined = golden(obj, left, right);
    Ok(if obj(refined) <= best_val { refined } else { z })
}

/// `argmin_z (z − x)²/(2δ) + fun(z)` on a grid, refined by golden section.
pub fn grid_prox(fun: impl Fn(f64) -> f64, delta: f64, x: f64, grid: &GridSpec) -> Result<f64> {
    grid.validate()?;
    if !(delta > 0.0) {
        return Err(invalid("delta", "must be positive"));
    }
    let obj = |z: f64| (z - x) * (z - x) / (2.0 * delta) + fun(z);
    grid_argmin(&obj, grid)
}

/// Vector prox `argmin_z ‖z − x‖²/(2δ) + fun(z)` for small `d` by cyclic
/// coordinate minimization, each coordinate solved with [`grid_prox`]'s
/// grid-plus-golden search.
pub fn grid_prox_coordinatewise(
    fun: impl Fn(&[f64]) -> f64,
    delta: f64,
    x: &[f64],
    grid: &GridSpec,
) -> Result<Vec<f64>> {
    grid.validate()?;
    if !(delta > 0.0) {
        return Err(invalid("delta", "must be positive"));
    }
    if x.len() > 4 {
        return Err(invalid(
            "x",
            "coordinate-wise grid prox is limited to d ≤ 4",
        ));
    }
    let mut z = x.to_vec();
    let window = 4.0 * grid.spacing();
    for sweep in 0..10_000 {
        let mut moved: f64 = 0.0;
        for i in 0..z.len() {
            let old = z[i];
            let obj = |t: f64| {
                let mut w = z.clone();
                w[i] = t;
                let dist: f64 = w.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
                dist / (2.0 * delta) + fun(&w)
            };
            let new = if sweep == 0 {
                grid_argmin(&obj, grid)?
            } else {
                let t = golden(&obj, old - window, old + window);
                if (t - old).abs() > 0.99 * window {
                    grid_argmin(&obj, grid)?
                } else {
                    t
                }
            };
            moved = moved.max((new - old).abs());
            z[i] = new;
        }
        if moved < 1e-11 {
            break;
        }
    }
    Ok(z)
}

fn log_normal(a: &[f64], b: &[f64], var: f64) -> f64 {
    let d = a.len() as f64;
    let r2: f64 = a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum();
    -r2 / (2.0 * var) - 0.5 * d * (2.0 * PI * var).ln()
}

/// `E[X | X + σZ = x]` for `X ~ prior`, by tensor Gauss–Hermite integration of
/// `∫ u p(u) N(x; u, σ²I) du / ∫ p(u) N(x; u, σ²I) du`. Each component is
/// integrated in the variable of its narrower Gaussian factor.
pub fn quadrature_posterior_mean(
    prior: &GmmPrior,
    sigma: f64,
    x: &Vector,
    nodes: usize,
) -> Result<Vector> {
    let d = x.dim();
    check_len(prior.dim(), d)?;
    if d > 3 {
        return Err(Error::QuadratureDimension { dim: d });
    }
    if !(sigma > 0.0) {
        return Err(invalid("sigma", "must be positive"));
    }
    if nodes < 16 {
        return Err(invalid("quad_nodes", "must be at least 16"));
    }
    let gh = GaussHermite::new(nodes);
    let s2 = sigma * sigma;
    let xs = x.as_slice();
    let mut log_w = Vec::new();
    let mut points: Vec<Vec<f64>> = Vec::new();
    let mut u = vec![0.0; d];
    for i in 0..prior.components() {
        let mu = prior.mean(i);
        let tau2 = prior.variances()[i];
        let lw = prior.weights()[i].ln();
        let around_prior = tau2 <= s2;
        let (centre, scale) = if around_prior {
            (mu, tau2.sqrt())
        } else {
            (xs, sigma)
        };
        gh.for_each_tensor(d, |t, w| {
            for ((ui, c), ti) in u.iter_mut().zip(centre).zip(t) {
                *ui = c + scale * ti;
            }
            let rest = if around_prior {
                log_normal(xs, &u, s2)
            } else {
                log_normal(&u, mu, tau2)
            };
            log_w.push(w.ln() + lw + rest);
            points.push(u.clone());
        });
    }
    let lse = log_sum_exp(&log_w);
    let mut mean = vec![0.0; d];
    for (lw, p) in log_w.iter().zip(&points) {
        let r = (lw - lse).exp();
        for (m, v) in mean.iter_mut().zip(p) {
            *m += r * v;
        }
    }
    Ok(Vector::from_raw(mean).with_shape_of(x))
}

/// Monte-Carlo mean and per-component standard error of `fun(x + σz)`;
/// sample `i` uses `stream.with_sample(i)`.
pub fn mc_expectation(
    mut fun: impl FnMut(&[f64]) -> Vec<f64>,
    sigma: f64,
    x: &[f64],
    n: usize,
    stream: &RngStream,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if n < 2 {
        return Err(invalid("n", "at least two samples are required"));
    }
    let mut point = vec![0.0; x.len()];
    let mut sum: Vec<f64> = Vec::new();
    let mut sum_sq: Vec<f64> = Vec::new();
    for i in 0..n {
        let z = stream.with_sample(i as u64).gaussian(x.len());
        for ((p, a), b) in point.iter_mut().zip(x).zip(&z) {
            *p = a + sigma * b;
        }
        let v = fun(&point);
        if i == 0 {
            sum = vec![0.0; v.len()];
            sum_sq = vec![0.0; v.len()];
        }
        for ((s, q), val) in sum.iter_mut().zip(sum_sq.iter_mut()).zip(&v) {
            *s += val;
            *q += val * val;
        }
    }
    let nf = n as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / nf).collect();
    let stderr = sum_sq
        .iter()
        .zip(&mean)
        .map(|(q, m)| ((q - nf * m * m) / (nf - 1.0)).max(0.0).sqrt() / nf.sqrt())
        .collect();
    Ok((mean, stderr))
}

/// Scalar form of [`mc_expectation`].
pub fn mc_expectation_scalar(
    mut fun: impl FnMut(&[f64]) -> f64,
    sigma: f64,
    x: &[f64],
    n: usize,
    stream: &RngStream,
) -> Result<(f64, f64)> {
    let (m, s) = mc_expectation(|p| vec![fun(p)], sigma, x, n, stream)?;
    Ok((m[0], s[0]))
}

/// Largest `‖F(a) − F(b)‖ / ‖a − b‖` over the given pairs.
pub fn max_difference_ratio(
    fun: impl Fn(&[f64]) -> Vec<f64>,
    pairs: &[(Vec<f64>, Vec<f64>)],
) -> f64 {
    pairs
        .iter()
        .map(|(a, b)| {
            let (fa, fb) = (fun(a), fun(b));
            let num: f64 = fa.iter().zip(&fb).map(|(p, q)| (p - q) * (p - q)).sum();
            let den: f64 = a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum();
            (num / den).sqrt()
        })
        .fold(0.0, f64::max)
}

/// Composite trapezoid rule of `fun` on `[lo, hi]` with `steps` panels.
pub fn trapezoid(fun: impl Fn(f64) -> f64, lo: f64, hi: f64, steps: usize) -> f64 {
    let h = (hi - lo) / steps as f64;
    let inner: f64 = (1..steps).map(|j| fun(lo + h * j as f64)).sum();
    h * (0.5 * (fun(lo) + fun(hi)) + inner)
}

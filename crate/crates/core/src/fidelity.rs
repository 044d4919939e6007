//! Quadratic data-fidelity terms `f(x) = ‖y − Ax‖² / (2σ_y²)` for denoising,
//! inpainting and periodic 1-D deblurring, with exact proximal maps.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::numeric::fft;
use crate::rng::{below, RngStream};
use crate::vector::{check_len, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FidelityKind {
    DenoiseQuadratic,
    InpaintNoisy,
    InpaintNoiseless,
    DeblurCirculant,
}

/// Regularity constants of a fidelity term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FidelityConstants {
    /// Weak-convexity modulus.
    pub rho: f64,
    /// Smoothness constant (largest Hessian eigenvalue); infinite when not differentiable.
    pub m: f64,
    pub differentiable: bool,
}

/// A forward model `y = Ax + σ_y n` without the observation.
#[derive(Debug, Clone, PartialEq)]
pub enum Degradation {
    /// `A = I`.
    Denoise { sigma_y: f64 },
    /// `A = diag(mask)`; `sigma_y = 0` gives the noiseless (projection) variant.
    Inpaint { mask: Vec<bool>, sigma_y: f64 },
    /// Periodic correlation with centered taps: `(Ax)_i = Σ_j k_j x_{i+j−⌊n/2⌋}`.
    Deblur { kernel: Vec<f64>, sigma_y: f64 },
}

impl Degradation {
    pub fn denoise(sigma_y: f64) -> Result<Self> {
        positive_noise(sigma_y)?;
        Ok(Self::Denoise { sigma_y })
    }

    pub fn inpaint(mask: Vec<bool>, sigma_y: f64) -> Result<Self> {
        if !(sigma_y >= 0.0 && sigma_y.is_finite()) {
            return Err(invalid("sigma_y", "must be finite and non-negative"));
        }
        if mask.is_empty() {
            return Err(invalid("mask", "must not be empty"));
        }
        Ok(Self::Inpaint { mask, sigma_y })
    }

    pub fn deblur(kernel: Vec<f64>, sigma_y: f64) -> Result<Self> {
        positive_noise(sigma_y)?;
        if kernel.is_empty() || kernel.iter().any(|k| !k.is_finite()) {
            return Err(invalid("kernel", "taps must be finite and non-empty"));
        }
        let sum: f64 = kernel.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(invalid("kernel", "taps must sum to 1"));
        }
        Ok(Self::Deblur { kernel, sigma_y })
    }

    pub fn kind(&self) -> FidelityKind {
        match self {
            Self::Denoise { .. } => FidelityKind::DenoiseQuadratic,
            Self::Inpaint { sigma_y, .. } if *sigma_y == 0.0 => FidelityKind::InpaintNoiseless,
            Self::Inpaint { .. } => FidelityKind::InpaintNoisy,
            Self::Deblur { .. } => FidelityKind::DeblurCirculant,
        }
    }

    pub fn sigma_y(&self) -> f64 {
        match self {
            Self::Denoise { sigma_y }
            | Self::Inpaint { sigma_y, .. }
            | Self::Deblur { sigma_y, .. } => *sigma_y,
        }
    }

    pub fn mask(&self) -> Option<&[bool]> {
        match self {
            Self::Inpaint { mask, .. } => Some(mask),
            _ => None,
        }
    }

    fn check_dim(&self, d: usize) -> Result<()> {
        match self {
            Self::Inpaint { mask, .. } => check_len(mask.len(), d),
            Self::Deblur { kernel, .. } if kernel.len() > d => {
                Err(invalid("kernel", "more taps than signal samples"))
            }
            _ => Ok(()),
        }
    }

    /// `A x`, evaluated directly (no transforms).
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Self::Denoise { .. } => x.to_vec(),
            Self::Inpaint { mask, .. } => x
                .iter()
                .zip(mask)
                .map(|(v, &m)| if m { *v } else { 0.0 })
                .collect(),
            Self::Deblur { kernel, .. } => {
                let d = x.len();
                let c = kernel.len() / 2;
                (0..d)
                    .map(|i| {
                        kernel
                            .iter()
                            .enumerate()
                            .map(|(j, k)| k * x[(i + j + d - c) % d])
                            .sum()
                    })
                    .collect()
            }
        }
    }

    /// `Aᵀ r`, evaluated directly.
    pub fn apply_adjoint(&self, r: &[f64]) -> Vec<f64> {
        match self {
            Self::Deblur { kernel, .. } => {
                let d = r.len();
                let c = kernel.len() / 2;
                let mut out = vec![0.0; d];
                for (i, ri) in r.iter().enumerate() {
                    for (j, k) in kernel.iter().enumerate() {
                        out[(i + j + d - c) % d] += k * ri;
                    }
                }
                out
            }
            _ => self.apply(r),
        }
    }

    /// `A x_true + σ_y z`; masked entries of `y` are stored as zero.
    pub fn degrade(&self, truth: &Vector, stream: &RngStream) -> Result<Vector> {
        self.check_dim(truth.dim())?;
        let mut y = self.apply(truth.as_slice());
        let sigma_y = self.sigma_y();
        if sigma_y > 0.0 {
            let z = stream.gaussian(y.len());
            for (v, zv) in y.iter_mut().zip(z) {
                *v += sigma_y * zv;
            }
        }
        if let Some(mask) = self.mask() {
            for (v, &m) in y.iter_mut().zip(mask) {
                if !m {
                    *v = 0.0;
                }
            }
        }
        Ok(Vector::from_raw(y).with_shape_of(truth))
    }

    /// Attach an observation, producing the fidelity term.
    pub fn observe(self, y: Vector) -> Result<Fidelity> {
        self.check_dim(y.dim())?;
        let eigenvalues = match &self {
            Self::Deblur { kernel, .. } => circulant_eigenvalues(kernel, y.dim()),
            _ => Vec::new(),
        };
        Ok(Fidelity {
            degradation: self,
            y,
            eigenvalues,
        })
    }
}

fn positive_noise(sigma_y: f64) -> Result<()> {
    if !(sigma_y > 0.0 && sigma_y.is_finite()) {
        return Err(invalid("sigma_y", "must be positive for this fidelity"));
    }
    Ok(())
}

/// DFT of the convolution kernel equivalent to the centered correlation.
fn circulant_eigenvalues(kernel: &[f64], d: usize) -> Vec<Complex64> {
    let c = kernel.len() / 2;
    let mut a = vec![Complex64::new(0.0, 0.0); d];
    for (j, k) in kernel.iter().enumerate() {
        a[(c + d - j) % d].re += k;
    }
    fft(&mut a, false);
    a
}

/// `f(x) = ‖y − Ax‖² / (2σ_y²)` for a fixed observation `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct Fidelity {
    degradation: Degradation,
    y: Vector,
    eigenvalues: Vec<Complex64>,
}

impl Fidelity {
    pub fn degradation(&self) -> &Degradation {
        &self.degradation
    }

    pub fn kind(&self) -> FidelityKind {
        self.degradation.kind()
    }

    pub fn observation(&self) -> &Vector {
        &self.y
    }

    pub fn dim(&self) -> usize {
        self.y.dim()
    }

    pub fn sigma_y(&self) -> f64 {
        self.degradation.sigma_y()
    }

    pub fn is_differentiable(&self) -> bool {
        self.kind() != FidelityKind::InpaintNoiseless
    }

    /// `f(x)`; the noiseless variant returns 0 on the constraint set and `+∞` off it.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        check_len(self.dim(), x.len())?;
        let ax = self.degradation.apply(x);
        let y = self.y.as_slice();
        if let Degradation::Inpaint { mask, sigma_y } = &self.degradation {
            let pairs = ax
                .iter()
                .zip(y)
                .zip(mask)
                .filter(|(_, &m)| m)
                .map(|(p, _)| p);
            if *sigma_y == 0.0 {
                let feasible = pairs.into_iter().all(|(a, b)| a == b);
                return Ok(if feasible { 0.0 } else { f64::INFINITY });
            }
            let r2: f64 = pairs.map(|(a, b)| (a - b) * (a - b)).sum();
            return Ok(r2 / (2.0 * sigma_y * sigma_y));
        }
        let s = self.sigma_y();
        let r2: f64 = ax.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
        Ok(r2 / (2.0 * s * s))
    }

    /// `Aᵀ(Ax − y) / σ_y²`.
    pub fn grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.dim(), x.len())?;
        if !self.is_differentiable() {
            return Err(Error::NonDifferentiable);
        }
        let s2 = self.sigma_y() * self.sigma_y();
        let mut r = self.degradation.apply(x);
        for (ri, yi) in r.iter_mut().zip(self.y.iter()) {
            *ri -= yi;
        }
        let mut g = self.degradation.apply_adjoint(&r);
        for v in &mut g {
            *v /= s2;
        }
        Ok(g)
    }

    /// `argmin_z ‖z − x‖²/(2δ) + f(z)`.
    pub fn prox(&self, delta: f64, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.dim(), x.len())?;
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(invalid("delta", "prox step must be positive"));
        }
        let y = self.y.as_slice();
        Ok(match &self.degradation {
            Degradation::Denoise { sigma_y } => {
                let t = delta / (sigma_y * sigma_y);
                x.iter()
                    .zip(y)
                    .map(|(a, b)| (a + t * b) / (1.0 + t))
                    .collect()
            }
            Degradation::Inpaint { mask, sigma_y } if *sigma_y == 0.0 => {
                // Projection onto {z : z_i = y_i on observed pixels}.
                x.iter()
                    .zip(y)
                    .zip(mask)
                    .map(|((a, b), &m)| if m { *b } else { *a })
                    .collect()
            }
            Degradation::Inpaint { mask, sigma_y } => {
                let gain = 1.0 / (1.0 + sigma_y * sigma_y / delta);
                x.iter()
                    .zip(y)
                    .zip(mask)
                    .map(|((a, b), &m)| if m { a + gain * (b - a) } else { *a })
                    .collect()
            }
            Degradation::Deblur { sigma_y, .. } => {
                let t = delta / (sigma_y * sigma_y);
                let aty = self.degradation.apply_adjoint(y);
                let mut rhs: Vec<Complex64> = x
                    .iter()
                    .zip(&aty)
                    .map(|(a, b)| Complex64::new(a + t * b, 0.0))
                    .collect();
                fft(&mut rhs, false);
                for (r, e) in rhs.iter_mut().zip(&self.eigenvalues) {
                    *r /= 1.0 + t * e.norm_sqr();
                }
                fft(&mut rhs, true);
                let n = x.len() as f64;
                rhs.iter().map(|c| c.re / n).collect()
            }
        })
    }

    pub fn constants(&self) -> FidelityConstants {
        let s2 = self.sigma_y() * self.sigma_y();
        match &self.degradation {
            Degradation::Inpaint { sigma_y, .. } if *sigma_y == 0.0 => FidelityConstants {
                rho: 0.0,
                m: f64::INFINITY,
                differentiable: false,
            },
            Degradation::Deblur { .. } => FidelityConstants {
                rho: 0.0,
                m: self
                    .eigenvalues
                    .iter()
                    .map(|e| e.norm_sqr())
                    .fold(0.0, f64::max)
                    / s2,
                differentiable: true,
            },
            _ => FidelityConstants {
                rho: 0.0,
                m: 1.0 / s2,
                differentiable: true,
            },
        }
    }

    /// Eigenvalues of the circulant operator (empty for diagonal operators).
    pub fn operator_spectrum(&self) -> &[Complex64] {
        &self.eigenvalues
    }

    /// Warm start: `y` with unobserved pixels set to the mean of the observed ones.
    pub fn warm_start(&self) -> Vector {
        let y = self.y.as_slice();
        let data = match self.degradation.mask() {
            Some(mask) => {
                let (sum, count) = y
                    .iter()
                    .zip(mask)
                    .filter(|(_, &m)| m)
                    .fold((0.0, 0usize), |(s, c), (v, _)| (s + v, c + 1));
                let fill = if count == 0 { 0.0 } else { sum / count as f64 };
                y.iter()
                    .zip(mask)
                    .map(|(v, &m)| if m { *v } else { fill })
                    .collect()
            }
            None => y.to_vec(),
        };
        Vector::from_raw(data).with_shape_of(&self.y)
    }
}

/// `f(x)` for a checked vector.
pub fn eval_f(fid: &Fidelity, x: &Vector) -> Result<f64> {
    fid.eval(x.as_slice())
}

pub fn grad_f(fid: &Fidelity, x: &Vector) -> Result<Vector> {
    Ok(Vector::from_raw(fid.grad(x.as_slice())?).with_shape_of(x))
}

pub fn prox_f(fid: &Fidelity, delta: f64, x: &Vector) -> Result<Vector> {
    Ok(Vector::from_raw(fid.prox(delta, x.as_slice())?).with_shape_of(x))
}

pub fn fidelity_constants(fid: &Fidelity) -> FidelityConstants {
    fid.constants()
}

pub fn degrade(spec: &Degradation, truth: &Vector, stream: &RngStream) -> Result<Vector> {
    spec.degrade(truth, stream)
}

/// Mask with exactly `⌊(1−p)·d⌋` observed pixels chosen uniformly at random,
/// where `p` is the probability of a missing pixel.
pub fn random_mask(d: usize, p: f64, stream: &RngStream) -> Result<Vec<bool>> {
    if !(0.0..=1.0).contains(&p) {
        return Err(invalid("p", "missing-pixel probability must lie in [0, 1]"));
    }
    if d == 0 {
        return Err(invalid("mask", "dimension must be positive"));
    }
    let observed = ((1.0 - p) * d as f64).floor() as usize;
    let mut order: Vec<usize> = (0..d).collect();
    let mut rng = stream.generator();
    // Partial Fisher–Yates: the first `observed` slots become a uniform subset.
    for i in 0..observed.min(d.saturating_sub(1)) {
        let j = i + below(&mut rng, d - i);
        order.swap(i, j);
    }
    let mut mask = vec![false; d];
    for &i in &order[..observed] {
        mask[i] = true;
    }
    Ok(mask)
}

impl core::fmt::Display for FidelityKind {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            Self::DenoiseQuadratic => "denoise-quadratic",
            Self::InpaintNoisy => "inpaint-noisy",
            Self::InpaintNoiseless => "inpaint-noiseless",
            Self::DeblurCirculant => "deblur-circulant",
        })
    }
}

impl core::str::FromStr for FidelityKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "denoise-quadratic" => Ok(Self::DenoiseQuadratic),
            "inpaint-noisy" => Ok(Self::InpaintNoisy),
            "inpaint-noiseless" => Ok(Self::InpaintNoiseless),
            "deblur-circulant" => Ok(Self::DeblurCirculant),
            other => Err(invalid("problem.kind", other.to_string())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(deg: Degradation, y: f64) -> Fidelity {
        deg.observe(Vector::new(vec![y]).unwrap()).unwrap()
    }

    #[test]
    fn scalar_hand_cases() {
        let fid = scalar(Degradation::denoise(1.0).unwrap(), 0.0);
        assert_eq!(fid.eval(&[2.0]).unwrap(), 2.0);
        assert_eq!(fid.grad(&[2.0]).unwrap(), vec![2.0]);
        let inpaint = scalar(Degradation::inpaint(vec![true], 1.0).unwrap(), 0.0);
        assert_eq!(inpaint.prox(1.0, &[2.0]).unwrap(), vec![1.0]);
        assert_eq!(inpaint.kind(), FidelityKind::InpaintNoisy);
    }

    #[test]
    fn masked_pixels_do_not_matter() {
        let fid = Degradation::inpaint(vec![true, false], 0.5)
            .unwrap()
            .observe(Vector::new(vec![0.3, 0.0]).unwrap())
            .unwrap();
        assert_eq!(
            fid.eval(&[0.1, 7.0]).unwrap(),
            fid.eval(&[0.1, -3.0]).unwrap()
        );
        assert_eq!(fid.grad(&[0.1, 7.0]).unwrap()[1], 0.0);
        assert_eq!(fid.prox(0.2, &[0.1, 7.0]).unwrap()[1], 7.0);
    }

    #[test]
    fn noiseless_inpainting_is_a_projection() {
        let fid = Degradation::inpaint(vec![true, false], 0.0)
            .unwrap()
            .observe(Vector::new(vec![0.3, 0.0]).unwrap())
            .unwrap();
        assert_eq!(fid.kind(), FidelityKind::InpaintNoiseless);
        assert_eq!(fid.prox(0.7, &[0.9, 0.4]).unwrap(), vec![0.3, 0.4]);
        assert_eq!(fid.eval(&[0.3, 5.0]).unwrap(), 0.0);
        assert_eq!(fid.eval(&[0.31, 5.0]).unwrap(), f64::INFINITY);
        assert_eq!(fid.grad(&[0.3, 0.0]), Err(Error::NonDifferentiable));
        assert!(!fid.constants().differentiable);
    }

    #[test]
    fn constants_match_paper_noise_level() {
        let sigma_y = 5.0 / 255.0;
        let fid = Degradation::inpaint(vec![true, false, true], sigma_y)
            .unwrap()
            .observe(Vector::zeros(3))
            .unwrap();
        let c = fid.constants();
        assert!((c.m - 2601.0).abs() < 1e-9);
        assert_eq!(c.rho, 0.0);
    }

    #[test]
    fn validation() {
        assert!(Degradation::denoise(0.0).is_err());
        assert!(Degradation::deblur(vec![0.5, 0.6], 0.1).is_err());
        assert!(Degradation::inpaint(vec![true], -1.0).is_err());
        let deg = Degradation::inpaint(vec![true, true], 0.1).unwrap();
        assert!(deg.clone().observe(Vector::zeros(3)).is_err());
        assert!(Degradation::deblur(vec![0.25; 4], 0.1)
            .unwrap()
            .observe(Vector::zeros(3))
            .is_err());
    }

    #[test]
    fn deblur_eigenvalues_match_operator() {
        let deg = Degradation::deblur(vec![0.2, 0.5, 0.3], 0.1).unwrap();
        let d = 6;
        let fid = deg.clone().observe(Vector::zeros(d)).unwrap();
        // A applied to a Fourier mode scales it by the corresponding eigenvalue.
        for w in 0..d {
            let mode_re: Vec<f64> = (0..d)
                .map(|i| (2.0 * core::f64::consts::PI * (w * i) as f64 / d as f64).cos())
                .collect();
            let mode_im: Vec<f64> = (0..d)
                .map(|i| (2.0 * core::f64::consts::PI * (w * i) as f64 / d as f64).sin())
                .collect();
            let are = deg.apply(&mode_re);
            let aim = deg.apply(&mode_im);
            let e = fid.operator_spectrum()[w];
            for i in 0..d {
                let want = Complex64::new(mode_re[i], mode_im[i]) * e;
                assert!((are[i] - want.re).abs() < 1e-12);
                assert!((aim[i] - want.im).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn adjoint_is_transpose() {
        let deg = Degradation::deblur(vec![0.1, 0.2, 0.4, 0.3], 0.1).unwrap();
        let x = [0.3, -1.0, 2.0, 0.5, 0.7];
        let r = [1.0, 0.2, -0.4, 0.9, 0.1];
        let lhs: f64 = deg.apply(&x).iter().zip(&r).map(|(a, b)| a * b).sum();
        let rhs: f64 = x
            .iter()
            .zip(deg.apply_adjoint(&r))
            .map(|(a, b)| a * b)
            .sum();
        assert!((lhs - rhs).abs() < 1e-14);
    }

    #[test]
    fn mask_has_exact_count() {
        let s = RngStream::new(7);
        for d in [1, 2, 9, 100, 1024] {
            let mask = random_mask(d, 0.5, &s).unwrap();
            assert_eq!(mask.iter().filter(|&&m| m).count(), d / 2);
        }
        assert!(random_mask(10, 0.0, &s).unwrap().iter().all(|&m| m));
        assert!(random_mask(10, 1.0, &s).unwrap().iter().all(|&m| !m));
        assert_eq!(
            random_mask(64, 0.3, &s).unwrap(),
            random_mask(64, 0.3, &s).unwrap()
        );
    }

    #[test]
    fn degrade_noiseless_full_mask_is_identity() {
        let truth = Vector::new(vec![0.1, 0.5, 0.9]).unwrap();
        let y = Degradation::inpaint(vec![true; 3], 0.0)
            .unwrap()
            .degrade(&truth, &RngStream::new(1))
            .unwrap();
        assert_eq!(y, truth);
    }

    #[test]
    fn warm_start_fills_with_observed_mean() {
        let fid = Degradation::inpaint(vec![true, false, true], 0.1)
            .unwrap()
            .observe(Vector::new(vec![0.2, 0.0, 0.6]).unwrap())
            .unwrap();
        let x0 = fid.warm_start();
        assert!((x0[1] - 0.4).abs() < 1e-15);
    }
}

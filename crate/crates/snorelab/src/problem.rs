//! Builds the fidelity, denoiser, ground truth and starting point described by
//! a [`ProblemConfig`].
//!
//! Everything random here (truth, mask, observation noise) is drawn from the
//! ensemble's base seed, so all members of an ensemble share one problem and
//! differ only in their iterate noise.

use snorelab_core::fidelity::{random_mask, Degradation};
use snorelab_core::rng::lane;
use snorelab_core::{DenoiserModel, Fidelity, FidelityKind, GmmPrior, RngStream, Vector};

use crate::config::{InitKind, MeanSpec, MeansSpec, ProblemConfig, TruthSource};
use crate::error::{field, Result};
use crate::io;

/// Number of built-in pattern means.
pub const PATTERN_COUNT: usize = 4;

#[derive(Debug, Clone)]
pub struct Problem {
    pub fid: Fidelity,
    pub den: DenoiserModel,
    pub truth: Vector,
    pub x0: Vector,
    pub height: usize,
    pub width: usize,
}

impl Problem {
    pub fn mask(&self) -> Option<&[bool]> {
        self.fid.degradation().mask()
    }
}

/// Horizontal ramp, vertical ramp, 4×4 checkerboard and centered disk, all in
/// [0.2, 0.8].
pub fn pattern_means(height: usize, width: usize) -> Vec<Vec<f64>> {
    let ramp = |i: usize, n: usize| {
        if n <= 1 {
            0.5
        } else {
            0.2 + 0.6 * i as f64 / (n - 1) as f64
        }
    };
    let (cy, cx) = ((height as f64 - 1.0) / 2.0, (width as f64 - 1.0) / 2.0);
    let radius = 0.3 * height.min(width) as f64;
    let mut out: Vec<Vec<f64>> = (0..PATTERN_COUNT)
        .map(|_| Vec::with_capacity(height * width))
        .collect();
    for r in 0..height {
        for c in 0..width {
            out[0].push(ramp(c, width));
            out[1].push(ramp(r, height));
            out[2].push(if (r / 4 + c / 4) % 2 == 0 { 0.3 } else { 0.7 });
            let inside = (r as f64 - cy).hypot(c as f64 - cx) <= radius;
            out[3].push(if inside { 0.8 } else { 0.2 });
        }
    }
    out
}

pub fn build_prior(cfg: &ProblemConfig) -> Result<GmmPrior> {
    let d = cfg.dim();
    let means: Vec<Vec<f64>> = match &cfg.prior.means {
        MeansSpec::Patterns => pattern_means(cfg.height, cfg.width),
        MeansSpec::List(list) => list
            .iter()
            .map(|m| match m {
                MeanSpec::Constant(v) => vec![*v; d],
                MeanSpec::Vector(v) => v.clone(),
            })
            .collect(),
    };
    let k = means.len();
    let weights = if cfg.prior.weights.is_empty() {
        vec![1.0 / k as f64; k]
    } else {
        let total: f64 = cfg.prior.weights.iter().sum();
        cfg.prior.weights.iter().map(|w| w / total).collect()
    };
    let variances = if cfg.prior.variances.len() == 1 {
        vec![cfg.prior.variances[0]; k]
    } else {
        cfg.prior.variances.clone()
    };
    Ok(GmmPrior::new(weights, means, variances)?)
}

fn load_truth(cfg: &ProblemConfig, prior: &GmmPrior, base_seed: u64) -> Result<Vector> {
    let (data, shape) = match &cfg.truth {
        TruthSource::Prior => {
            let x = prior.sample(&RngStream::new(base_seed).with_run(lane::TRUTH));
            (x.into_vec(), None)
        }
        TruthSource::Pgm(path) => {
            let img = io::read_pgm(path)?;
            (img.data, Some((img.height, img.width)))
        }
        TruthSource::Sidecar(path) => {
            let img = io::read_sidecar(path)?;
            (img.data, Some((img.height, img.width)))
        }
    };
    if let Some(shape) = shape {
        if shape != (cfg.height, cfg.width) {
            return Err(field(
                "problem.truth",
                format!(
                    "image is {}×{}, config says {}×{}",
                    shape.0, shape.1, cfg.height, cfg.width
                ),
            ));
        }
    }
    Ok(Vector::image(data, cfg.height, cfg.width)?)
}

fn degradation(cfg: &ProblemConfig, base_seed: u64) -> Result<Degradation> {
    let d = cfg.dim();
    let mask = || -> Result<Vec<bool>> {
        match &cfg.mask {
            Some(path) => {
                let m = io::read_mask(path)?;
                if m.len() != d {
                    return Err(field(
                        "problem.mask",
                        format!("{} entries for {d} pixels", m.len()),
                    ));
                }
                Ok(m)
            }
            None => Ok(random_mask(
                d,
                cfg.missing,
                &RngStream::new(base_seed).with_run(lane::MASK),
            )?),
        }
    };
    Ok(match cfg.kind {
        FidelityKind::DenoiseQuadratic => Degradation::denoise(cfg.sigma_y)?,
        FidelityKind::InpaintNoisy | FidelityKind::InpaintNoiseless => {
            Degradation::inpaint(mask()?, cfg.sigma_y)?
        }
        FidelityKind::DeblurCirculant => Degradation::deblur(cfg.kernel.clone(), cfg.sigma_y)?,
    })
}

pub fn build_problem(cfg: &ProblemConfig, base_seed: u64) -> Result<Problem> {
    let prior = build_prior(cfg)?;
    let truth = load_truth(cfg, &prior, base_seed)?;
    let deg = degradation(cfg, base_seed)?;
    let y = deg.degrade(&truth, &RngStream::new(base_seed).with_run(lane::OBSERVATION))?;
    let y = Vector::image(y.into_vec(), cfg.height, cfg.width)?;
    let fid = deg.observe(y)?;
    let x0 = match cfg.x0 {
        InitKind::Observation => fid.warm_start(),
        InitKind::Zeros => Vector::image(vec![0.0; cfg.dim()], cfg.height, cfg.width)?,
    };
    let den = DenoiserModel::new(prior).with_safety_factor(cfg.lipschitz_safety)?;
    Ok(Problem {
        fid,
        den,
        truth,
        x0,
        height: cfg.height,
        width: cfg.width,
    })
}

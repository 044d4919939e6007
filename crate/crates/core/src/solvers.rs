//! SNORE Prox, SNORE, RED, RED Prox and PnP iterations and the run loop.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::fidelity::Fidelity;
use crate::metrics::{psnr, DEFAULT_PEAK};
use crate::prior::Denoiser;
use crate::regularizer::{
    exact_grad_raw, exact_value_raw, mc_grad_g, mc_value_g, stoch_grad_with_noise,
    MAX_QUADRATURE_DIM,
};
use crate::rng::{lane, RngStream};
use crate::schedule::StepSchedule;
use crate::theory::max_step;
use crate::trace::{RunAbort, RunMetadata, RunTrace, TraceRecord};
use crate::vector::{check_len, dist_sq, norm_sq, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    SnoreProx,
    Snore,
    Red,
    RedProx,
    Pnp,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::SnoreProx,
        Method::Snore,
        Method::Red,
        Method::RedProx,
        Method::Pnp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::SnoreProx => "snore-prox",
            Self::Snore => "snore",
            Self::Red => "red",
            Self::RedProx => "red-prox",
            Self::Pnp => "pnp",
        }
    }

    pub fn is_stochastic(self) -> bool {
        matches!(self, Self::SnoreProx | Self::Snore)
    }

    /// Uses `∇f` explicitly (and therefore needs a differentiable fidelity).
    pub fn needs_gradient(self) -> bool {
        matches!(self, Self::Snore | Self::Red | Self::Pnp)
    }
}

impl core::fmt::Display for Method {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

impl core::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| invalid("method", format!("unknown method `{s}`")))
    }
}

/// Stagewise `(λ, σ)` schedule: `σ` geometric from `sigma_start` down to
/// `sigma_end`, `λ` linear from `lambda_start` up to `lambda_end`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Anneal {
    pub stages: usize,
    pub lambda_start: f64,
    pub lambda_end: f64,
    pub sigma_start: f64,
    pub sigma_end: f64,
}

impl Anneal {
    pub fn validate(&self) -> Result<()> {
        if self.stages == 0 {
            return Err(invalid("anneal.stages", "must be at least 1"));
        }
        if !(self.sigma_end > 0.0
            && self.sigma_start >= self.sigma_end
            && self.sigma_start.is_finite())
        {
            return Err(invalid("anneal.sigma", "need sigma_start ≥ sigma_end > 0"));
        }
        if !(self.lambda_start > 0.0
            && self.lambda_end >= self.lambda_start
            && self.lambda_end.is_finite())
        {
            return Err(invalid(
                "anneal.lambda",
                "need 0 < lambda_start ≤ lambda_end",
            ));
        }
        Ok(())
    }

    /// `(λ, σ)` of stage `s`.
    pub fn stage(&self, s: usize) -> (f64, f64) {
        if self.stages == 1 {
            return (self.lambda_start, self.sigma_start);
        }
        let t = s.min(self.stages - 1) as f64 / (self.stages - 1) as f64;
        let lambda = self.lambda_start + (self.lambda_end - self.lambda_start) * t;
        let sigma = self.sigma_start * (self.sigma_end / self.sigma_start).powf(t);
        (lambda, sigma)
    }

    fn stage_len(&self, iters: usize) -> usize {
        iters.div_ceil(self.stages).max(1)
    }

    /// Parameters for iteration `k` of an `iters`-step run; `k ≥ iters` stays in the last stage.
    pub fn at(&self, k: usize, iters: usize) -> (f64, f64) {
        self.stage(k / self.stage_len(iters))
    }
}

/// `(λ_k, σ_k)` for `k = 0..N`.
pub fn annealing_plan(anneal: &Anneal, iters: usize) -> Result<Vec<(f64, f64)>> {
    anneal.validate()?;
    if anneal.stages > iters {
        return Err(Error::AnnealStages {
            stages: anneal.stages,
            iters,
        });
    }
    Ok((0..iters).map(|k| anneal.at(k, iters)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Telemetry {
    /// Monte-Carlo samples for `g_σ` and `∇g_σ` when no exact route exists.
    pub grad_samples: usize,
    pub record_every: usize,
}

impl Default for Telemetry {
    fn default() -> Self {
        Self {
            grad_samples: 256,
            record_every: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub method: Method,
    pub schedule: StepSchedule,
    pub lambda: f64,
    pub sigma: f64,
    pub iters: usize,
    pub seed: u64,
    pub anneal: Option<Anneal>,
    pub telemetry: Telemetry,
}

impl SolverConfig {
    pub fn new(
        method: Method,
        schedule: StepSchedule,
        lambda: f64,
        sigma: f64,
        iters: usize,
    ) -> Self {
        Self {
            method,
            schedule,
            lambda,
            sigma,
            iters,
            seed: 0,
            anneal: None,
            telemetry: Telemetry::default(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_anneal(mut self, anneal: Anneal) -> Self {
        self.anneal = Some(anneal);
        self
    }

    pub fn with_telemetry(mut self, telemetry: Telemetry) -> Self {
        self.telemetry = telemetry;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(invalid("lambda", "must be finite and non-negative"));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(invalid("sigma", "must be positive"));
        }
        if self.telemetry.grad_samples < 2 {
            return Err(invalid("telemetry.grad_samples", "must be at least 2"));
        }
        if self.telemetry.record_every == 0 {
            return Err(invalid("telemetry.record_every", "must be at least 1"));
        }
        if let Some(a) = &self.anneal {
            a.validate()?;
            if a.stages > self.iters.max(1) {
                return Err(Error::AnnealStages {
                    stages: a.stages,
                    iters: self.iters,
                });
            }
        }
        Ok(())
    }

    /// `(δ_k, λ_k, σ_k)`.
    pub fn params(&self, k: usize) -> (f64, f64, f64) {
        let (lambda, sigma) = match &self.anneal {
            Some(a) => a.at(k, self.iters),
            None => (self.lambda, self.sigma),
        };
        (self.schedule.value(k as u64), lambda, sigma)
    }

    /// Distinct `(λ, σ)` pairs visited by the run.
    pub fn stage_params(&self) -> Vec<(f64, f64)> {
        match &self.anneal {
            Some(a) => (0..a.stages).map(|s| a.stage(s)).collect(),
            None => vec![(self.lambda, self.sigma)],
        }
    }

    /// FNV-1a hash of everything but the seed.
    pub fn fingerprint(&self) -> u64 {
        let mut h = Fnv::default();
        h.word(self.method as u64);
        match self.schedule {
            StepSchedule::Constant { c } => {
                h.word(0);
                h.real(c);
            }
            StepSchedule::PowerDecay { c, alpha } => {
                h.word(1);
                h.real(c);
                h.real(alpha);
            }
        }
        h.real(self.lambda);
        h.real(self.sigma);
        h.word(self.iters as u64);
        if let Some(a) = &self.anneal {
            h.word(a.stages as u64);
            for v in [a.lambda_start, a.lambda_end, a.sigma_start, a.sigma_end] {
                h.real(v);
            }
        }
        h.word(self.telemetry.grad_samples as u64);
        h.word(self.telemetry.record_every as u64);
        h.0
    }
}

struct Fnv(u64);

impl Default for Fnv {
    fn default() -> Self {
        Self(0xcbf2_9ce4_8422_2325)
    }
}

impl Fnv {
    fn word(&mut self, w: u64) {
        for b in w.to_le_bytes() {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }

    fn real(&mut self, v: f64) {
        self.word(v.to_bits());
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub x: Vector,
    pub k: usize,
    /// Noise drawn by the last stochastic step, for replay.
    pub last_z: Option<Vector>,
}

impl SolverState {
    pub fn new(x: Vector) -> Self {
        Self {
            x,
            k: 0,
            last_z: None,
        }
    }
}

fn check_step(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(invalid("delta", "step must be positive"));
    }
    Ok(())
}

fn finish(state: &SolverState, next: Vec<f64>, z: Option<Vec<f64>>) -> Result<SolverState> {
    if let Some(index) = next.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    let x = Vector::from_raw(next).with_shape_of(&state.x);
    Ok(SolverState {
        last_z: z.map(|z| Vector::from_raw(z).with_shape_of(&state.x)),
        x,
        k: state.k + 1,
    })
}

/// One iteration of `method` with the injected noise fixed to `z`
/// (`None` means `z = 0`, i.e. the deterministic variants).
#[allow(clippy::too_many_arguments)]
pub fn step_with_noise<D: Denoiser + ?Sized>(
    method: Method,
    state: &SolverState,
    fid: &Fidelity,
    den: &D,
    delta: f64,
    lambda: f64,
    sigma: f64,
    z: Option<&[f64]>,
) -> Result<SolverState> {
    check_step(delta)?;
    let x = state.x.as_slice();
    check_len(fid.dim(), x.len())?;
    check_len(den.dim(), x.len())?;
    let zeros;
    let noise = match z {
        Some(z) => {
            check_len(x.len(), z.len())?;
            z
        }
        None => {
            zeros = vec![0.0; x.len()];
            &zeros[..]
        }
    };
    let next = match method {
        Method::SnoreProx | Method::RedProx => {
            let g = stoch_grad_with_noise(den, sigma, x, noise);
            let v: Vec<f64> = x
                .iter()
                .zip(&g)
                .map(|(a, b)| a - delta * lambda * b)
                .collect();
            fid.prox(delta, &v)?
        }
        Method::Snore | Method::Red => {
            let gf = fid.grad(x)?;
            let g = stoch_grad_with_noise(den, sigma, x, noise);
            x.iter()
                .zip(&gf)
                .zip(&g)
                .map(|((a, f), r)| a - delta * f - delta * lambda * r)
                .collect()
        }
        Method::Pnp => {
            let gf = fid.grad(x)?;
            let v: Vec<f64> = x.iter().zip(&gf).map(|(a, f)| a - delta * f).collect();
            den.denoise(sigma, &v)
        }
    };
    let recorded = match method {
        Method::SnoreProx | Method::Snore => Some(noise.to_vec()),
        _ => None,
    };
    finish(state, next, recorded)
}

/// Stream of the noise `z_{k+1}` injected at iteration `k`.
pub fn iterate_stream(seed: u64, k: usize) -> RngStream {
    RngStream::new(seed)
        .with_run(lane::ITERATES)
        .at(k as u64, 0)
}

/// `x_{k+1} = Prox_{δf}(x_k − δλ ∇̃g_σ(x_k))`.
pub fn snore_prox_step<D: Denoiser + ?Sized>(
    state: &SolverState,
    fid: &Fidelity,
    den: &D,
    delta: f64,
    lambda: f64,
    sigma: f64,
    stream: &RngStream,
) -> Result<SolverState> {
    let z = stream.gaussian(state.x.dim());
    step_with_noise(
        Method::SnoreProx,
        state,
        fid,
        den,
        delta,
        lambda,
        sigma,
        Some(&z),
    )
}

/// `x_{k+1} = x_k − δ∇f(x_k) − δλ ∇̃g_σ(x_k)`.
pub fn snore_step<D: Denoiser + ?Sized>(
    state: &SolverState,
    fid: &Fidelity,
    den: &D,
    delta: f64,
    lambda: f64,
    sigma: f64,
    stream: &RngStream,
) -> Result<SolverState> {
    let z = stream.gaussian(state.x.dim());
    step_with_noise(
        Method::Snore,
        state,
        fid,
        den,
        delta,
        lambda,
        sigma,
        Some(&z),
    )
}

/// `x_{k+1} = x_k − δ∇f(x_k) − (δλ/σ²)(x_k − D_σ(x_k))`.
pub fn red_step<D: Denoiser + ?Sized>(
    state: &SolverState,
    fid: &Fidelity,
    den: &D,
    delta: f64,
    lambda: f64,
    sigma: f64,
) -> Result<SolverState> {
    step_with_noise(Method::Red, state, fid, den, delta, lambda, sigma, None)
}

/// `x_{k+1} = Prox_{δf}(x_k − (δλ/σ²)(x_k − D_σ(x_k)))`.
pub fn red_prox_step<D: Denoiser + ?Sized>(
    state: &SolverState,
    fid: &Fidelity,
    den: &D,
    delta: f64,
    lambda: f64,
    sigma: f64,
) -> Result<SolverState> {
    step_with_noise(Method::RedProx, state, fid, den, delta, lambda, sigma, None)
}

/// `x_{k+1} = D_σ(x_k − δ∇f(x_k))`.
pub fn pnp_step<D: Denoiser + ?Sized>(
    state: &SolverState,
    fid: &Fidelity,
    den: &D,
    delta: f64,
    sigma: f64,
) -> Result<SolverState> {
    step_with_noise(Method::Pnp, state, fid, den, delta, 0.0, sigma, None)
}

/// Estimates of `F(x)` and `‖∇F(x)‖²` with standard errors (zero when exact).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Objective {
    pub f: f64,
    pub f_stderr: f64,
    pub grad_sq: f64,
    pub grad_sq_stderr: f64,
}

/// Evaluates `F = f + λ g_σ` and `‖∇F‖²` at `x`. Exact routes are used when the
/// prior is a single Gaussian or `d ≤ 3`; otherwise `n` Monte-Carlo samples
/// from `stream` are used and the squared norm is debiased by `λ² Σ s_j²`.
pub fn objective<D: Denoiser + ?Sized>(
    fid: &Fidelity,
    den: &D,
    x: &Vector,
    lambda: f64,
    sigma: f64,
    n: usize,
    stream: &RngStream,
) -> Result<Objective> {
    let xs = x.as_slice();
    let f = fid.eval(xs)?;
    let grad_f = if fid.is_differentiable() {
        Some(fid.grad(xs)?)
    } else {
        None
    };
    let exact = den.gaussian_prior().is_some() || xs.len() <= MAX_QUADRATURE_DIM;
    if lambda == 0.0 {
        let grad_sq = grad_f.as_deref().map_or(f64::NAN, norm_sq);
        return Ok(Objective {
            f,
            f_stderr: 0.0,
            grad_sq,
            grad_sq_stderr: if grad_sq.is_nan() { f64::NAN } else { 0.0 },
        });
    }
    if exact {
        let g = exact_value_raw(den, sigma, xs)?;
        let grad_sq = match &grad_f {
            Some(gf) => {
                let gg = exact_grad_raw(den, sigma, xs)?;
                gf.iter()
                    .zip(&gg)
                    .map(|(a, b)| (a + lambda * b).powi(2))
                    .sum()
            }
            None => f64::NAN,
        };
        return Ok(Objective {
            f: f + lambda * g,
            f_stderr: 0.0,
            grad_sq,
            grad_sq_stderr: if grad_sq.is_nan() { f64::NAN } else { 0.0 },
        });
    }
    let value = mc_value_g(den, sigma, x, n, stream)?;
    let (grad_sq, grad_sq_stderr) = match &grad_f {
        Some(gf) => {
            let est = mc_grad_g(den, sigma, x, n, stream)?;
            let mut sq = 0.0;
            let mut var_bias = 0.0;
            let mut delta_var = 0.0;
            for ((a, m), s) in gf.iter().zip(est.value.iter()).zip(&est.component_stderr) {
                let g = a + lambda * m;
                sq += g * g;
                var_bias += s * s;
                delta_var += g * g * s * s;
            }
            let debiased = (sq - lambda * lambda * var_bias).max(0.0);
            (debiased, 2.0 * lambda * delta_var.sqrt())
        }
        None => (f64::NAN, f64::NAN),
    };
    Ok(Objective {
        f: f + lambda * value.value,
        f_stderr: lambda * value.stderr,
        grad_sq,
        grad_sq_stderr,
    })
}

fn telemetry_stream(seed: u64, k: usize) -> RngStream {
    RngStream::new(seed)
        .with_run(lane::TELEMETRY)
        .at(k as u64, 0)
}

/// Whether `δ_0` lies below the step ceiling at every annealing stage.
pub fn within_step_bound<D: Denoiser + ?Sized>(
    config: &SolverConfig,
    fid: &Fidelity,
    den: &D,
) -> bool {
    let constants = fid.constants();
    if !constants.differentiable {
        return false;
    }
    let delta0 = config.schedule.initial();
    config.stage_params().iter().all(|&(lambda, sigma)| {
        let bound = max_step(lambda, sigma, den.lipschitz(sigma), constants.rho);
        delta0 <= bound * (1.0 + 1e-12)
    })
}

/// Runs `config.iters` iterations from `x0`.
pub fn run<D: Denoiser + ?Sized>(
    config: &SolverConfig,
    fid: &Fidelity,
    den: &D,
    x0: &Vector,
) -> Result<RunTrace> {
    run_with_reference(config, fid, den, x0, None)
}

/// [`run`] with PSNR telemetry against `truth`.
pub fn run_with_reference<D: Denoiser + ?Sized>(
    config: &SolverConfig,
    fid: &Fidelity,
    den: &D,
    x0: &Vector,
    truth: Option<&Vector>,
) -> Result<RunTrace> {
    config.validate()?;
    check_len(fid.dim(), x0.dim())?;
    check_len(den.dim(), x0.dim())?;
    if let Some(t) = truth {
        check_len(x0.dim(), t.dim())?;
    }
    if config.method.needs_gradient() && !fid.is_differentiable() {
        return Err(Error::NonDifferentiable);
    }
    let n = config.iters;
    let every = config.telemetry.record_every;
    let metadata = RunMetadata {
        seed: config.seed,
        method: config.method,
        fingerprint: config.fingerprint(),
        iters: n,
        record_every: every,
        practical_mode: !within_step_bound(config, fid, den),
        lipschitz_exact: den.gaussian_prior().is_some(),
    };
    let record = |k: usize, x: &Vector, residual: f64| -> Result<TraceRecord> {
        let (delta, lambda, sigma) = config.params(k);
        let obj = objective(
            fid,
            den,
            x,
            lambda,
            sigma,
            config.telemetry.grad_samples,
            &telemetry_stream(config.seed, k),
        )?;
        let psnr = match truth {
            Some(t) => Some(psnr(x, t, DEFAULT_PEAK)?),
            None => None,
        };
        Ok(TraceRecord {
            k,
            delta,
            lambda,
            sigma,
            residual,
            f_est: obj.f,
            f_stderr: obj.f_stderr,
            grad_sq_est: obj.grad_sq,
            grad_sq_stderr: obj.grad_sq_stderr,
            psnr,
        })
    };

    let mut records = Vec::with_capacity(n / every + 2);
    records.push(record(0, x0, 0.0)?);
    let mut state = SolverState::new(x0.clone());
    let mut abort = None;
    for k in 0..n {
        let (delta, lambda, sigma) = config.params(k);
        let z = if config.method.is_stochastic() {
            Some(iterate_stream(config.seed, k).gaussian(x0.dim()))
        } else {
            None
        };
        let next = match step_with_noise(
            config.method,
            &state,
            fid,
            den,
            delta,
            lambda,
            sigma,
            z.as_deref(),
        ) {
            Ok(next) => next,
            Err(Error::NonFinite { index }) => {
                abort = Some(RunAbort {
                    k: k + 1,
                    reason: format!("non-finite iterate at coordinate {index} (δ_k = {delta})"),
                });
                break;
            }
            Err(e) => return Err(e),
        };
        let residual = dist_sq(next.x.as_slice(), state.x.as_slice()).sqrt();
        state = next;
        if (k + 1) % every == 0 || k + 1 == n {
            records.push(record(k + 1, &state.x, residual)?);
        }
    }
    Ok(RunTrace {
        records,
        metadata,
        final_state: state.x,
        abort,
    })
}

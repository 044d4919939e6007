//! Convergence constants and numerical certification of the residual,
//! constant-step and decreasing-step bounds over ensembles of runs.
//!
//! Every check compares a seed-averaged left-hand side with its right-hand side
//! and returns a [`BoundReport`]; the verdict allows four standard errors of
//! Monte-Carlo slack.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::fidelity::Fidelity;
use crate::prior::Denoiser;
use crate::regularizer::{exact_grad_raw, exact_value_raw, MAX_QUADRATURE_DIM};
use crate::rng::{lane, RngStream};
use crate::schedule::StepSchedule;
use crate::trace::RunTrace;
use crate::vector::Vector;

/// Relative tolerance on `δ_0 ≤ δ_max`, so a step computed as exactly
/// `δ_max` is not rejected over the last bit.
pub const STEP_TOLERANCE: f64 = 1e-12;

/// Certification slack in standard errors.
pub const SLACK_SE: f64 = 4.0;

/// `σ² / (λ(L+1) + ρσ²)`.
pub fn max_step(lambda: f64, sigma: f64, l: f64, rho: f64) -> f64 {
    let s2 = sigma * sigma;
    s2 / (lambda * (l + 1.0) + rho * s2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryBounds {
    pub lambda: f64,
    pub sigma: f64,
    pub l: f64,
    pub rho: f64,
    pub m: f64,
    pub m_bar: f64,
    pub l_f: f64,
    pub delta0: f64,
    pub delta_max: f64,
    pub a1: f64,
    pub b1: f64,
    pub a2: f64,
    pub b2: f64,
    pub a3: f64,
    pub b3: f64,
    /// Lower bound of `F`; `None` until supplied.
    pub f_star: Option<f64>,
    /// `f_star` is the analytic minimum rather than a numerical estimate.
    pub f_star_exact: bool,
}

/// All constants of the bounds for step `δ_0`.
pub fn constants(
    lambda: f64,
    sigma: f64,
    l: f64,
    rho: f64,
    m: f64,
    delta0: f64,
) -> Result<TheoryBounds> {
    for (name, v) in [("lambda", lambda), ("sigma", sigma)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(invalid(name, "must be positive"));
        }
    }
    for (name, v) in [("L", l), ("rho", rho), ("M", m)] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(invalid(name, "must be finite and non-negative"));
        }
    }
    if !(delta0 > 0.0) {
        return Err(invalid("schedule.c", "step must be positive"));
    }
    let delta_max = max_step(lambda, sigma, l, rho);
    if delta0 > delta_max * (1.0 + STEP_TOLERANCE) {
        return Err(Error::StepExceedsBound { delta0, delta_max });
    }
    let s2 = sigma * sigma;
    let m_bar = rho.max(m);
    let l_f = m + lambda * (l + 1.0) / s2;
    let curvature = l_f + delta0 * m_bar * m_bar;
    let a1 = 1.0 + delta0 * curvature;
    let b1 = 4.0 * lambda * lambda * l * l / s2 * curvature / (2.0 * (1.0 - delta0 * rho));
    Ok(TheoryBounds {
        lambda,
        sigma,
        l,
        rho,
        m,
        m_bar,
        l_f,
        delta0,
        delta_max,
        a1,
        b1,
        a2: 2.0 * a1,
        b2: 2.0 * b1,
        a3: 2.0 * a1,
        b3: 2.0 * b1,
        f_star: None,
        f_star_exact: false,
    })
}

impl TheoryBounds {
    /// Constants for a concrete problem. Single-Gaussian priors also get the
    /// analytic `F*`.
    pub fn for_problem<D: Denoiser + ?Sized>(
        fid: &Fidelity,
        den: &D,
        lambda: f64,
        sigma: f64,
        delta0: f64,
    ) -> Result<Self> {
        let c = fid.constants();
        if !c.differentiable {
            return Err(Error::Uncertifiable(
                "the fidelity is not differentiable, so ρ-weak convexity fails".into(),
            ));
        }
        let mut tb = constants(lambda, sigma, den.lipschitz(sigma), c.rho, c.m, delta0)?;
        if den.gaussian_prior().is_some() {
            let (f_star, _) = analytic_f_star(fid, den, lambda, sigma)?;
            tb = tb.with_f_star(f_star, true);
        }
        Ok(tb)
    }

    pub fn with_f_star(mut self, f_star: f64, exact: bool) -> Self {
        self.f_star = Some(f_star);
        self.f_star_exact = exact;
        self
    }

    /// Constants re-evaluated at another step (same problem).
    pub fn at_step(&self, delta0: f64) -> Result<Self> {
        let mut tb = constants(self.lambda, self.sigma, self.l, self.rho, self.m, delta0)?;
        tb.f_star = self.f_star;
        tb.f_star_exact = self.f_star_exact;
        Ok(tb)
    }

    /// Coefficient of `Σδ_k²` in the residual bound.
    pub fn residual_noise_coefficient(&self) -> f64 {
        4.0 * self.lambda * self.lambda * self.l * self.l
            / (self.sigma * self.sigma * (1.0 - self.delta0 * self.rho))
    }

    fn f_star(&self) -> Result<f64> {
        self.f_star
            .ok_or_else(|| Error::Uncertifiable("no lower bound F* available".into()))
    }
}

/// Minimum of `F = f + λ g_σ` for a single Gaussian prior `N(μ, τ²I)`:
/// `g_σ` is then `‖x − μ‖²/(2v)` plus a constant with `v = τ² + σ²`, so the
/// minimizer is `Prox_{(v/λ) f}(μ)`.
pub fn analytic_f_star<D: Denoiser + ?Sized>(
    fid: &Fidelity,
    den: &D,
    lambda: f64,
    sigma: f64,
) -> Result<(f64, Vector)> {
    let g = den.gaussian_prior().ok_or_else(|| {
        Error::Uncertifiable("F* is analytic only for a single Gaussian prior".into())
    })?;
    if !(lambda > 0.0) {
        return Err(invalid(
            "lambda",
            "must be positive for a bounded minimizer",
        ));
    }
    let v = g.variance + sigma * sigma;
    let x = fid.prox(v / lambda, g.mean)?;
    let value = fid.eval(&x)? + lambda * exact_value_raw(den, sigma, &x)?;
    Ok((value, Vector::from_raw(x).with_shape_of(fid.observation())))
}

/// Numerical lower-bound proxy for `F` (mixture priors, `d ≤ 3`): the best
/// value reached by deterministic proximal-gradient descent with exact `∇g_σ`
/// from every start.
pub fn estimate_f_star<D: Denoiser + ?Sized>(
    fid: &Fidelity,
    den: &D,
    lambda: f64,
    sigma: f64,
    starts: &[Vector],
    iters: usize,
) -> Result<f64> {
    if starts.is_empty() {
        return Err(invalid("starts", "need at least one start"));
    }
    let d = fid.dim();
    if d > MAX_QUADRATURE_DIM && den.gaussian_prior().is_none() {
        return Err(Error::QuadratureDimension { dim: d });
    }
    let rho = fid.constants().rho;
    let step = 0.5 * max_step(lambda, sigma, den.lipschitz(sigma), rho);
    let mut best = f64::INFINITY;
    for start in starts {
        let mut x = start.as_slice().to_vec();
        for _ in 0..iters {
            let g = exact_grad_raw(den, sigma, &x)?;
            let v: Vec<f64> = x
                .iter()
                .zip(&g)
                .map(|(a, b)| a - step * lambda * b)
                .collect();
            x = fid.prox(step, &v)?;
        }
        let value = fid.eval(&x)? + lambda * exact_value_raw(den, sigma, &x)?;
        best = best.min(value);
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Certified,
    Violated,
    Inconclusive,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Self::Certified => "certified",
            Self::Violated => "violated",
            Self::Inconclusive => "inconclusive",
        }
    }
}

impl core::fmt::Display for Verdict {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub mc_stderr: f64,
    pub verdict: Verdict,
    pub n_traces: usize,
}

impl BoundReport {
    /// `certified` iff `lhs ≤ rhs + 4·stderr`. Otherwise `violated`, unless the
    /// right-hand side rests on an estimated `F*`, in which case `inconclusive`.
    pub fn new(
        name: &'static str,
        lhs: f64,
        rhs: f64,
        mc_stderr: f64,
        exact_rhs: bool,
        n_traces: usize,
    ) -> Self {
        let verdict = if !(lhs.is_finite() && rhs.is_finite() && mc_stderr.is_finite()) {
            Verdict::Inconclusive
        } else if lhs <= rhs + SLACK_SE * mc_stderr {
            Verdict::Certified
        } else if exact_rhs {
            Verdict::Violated
        } else {
            Verdict::Inconclusive
        };
        Self {
            name,
            lhs,
            rhs,
            margin: rhs - lhs,
            mc_stderr,
            verdict,
            n_traces,
        }
    }
}

/// Mean and standard error of the mean.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Checks that an ensemble shares one configuration, is complete and has a
/// record for every iteration. Returns the iteration budget.
fn check_ensemble(traces: &[RunTrace], needed: usize) -> Result<usize> {
    let first = traces
        .first()
        .ok_or_else(|| Error::MixedConfigs("empty ensemble".into()))?;
    let meta = &first.metadata;
    for t in traces {
        if t.metadata.fingerprint != meta.fingerprint {
            return Err(Error::MixedConfigs(format!(
                "fingerprints {:#x} and {:#x} differ",
                meta.fingerprint, t.metadata.fingerprint
            )));
        }
        if let Some(abort) = &t.abort {
            return Err(Error::Uncertifiable(format!(
                "run with seed {} aborted at k = {}: {}",
                t.metadata.seed, abort.k, abort.reason
            )));
        }
        if t.metadata.record_every != 1 || t.records.len() != t.metadata.iters + 1 {
            return Err(Error::Uncertifiable(
                "bound checks need a telemetry record at every iteration".into(),
            ));
        }
    }
    if needed > meta.iters {
        return Err(invalid(
            "N",
            format!("traces hold {} iterations, {needed} requested", meta.iters),
        ));
    }
    Ok(meta.iters)
}

fn initial_gap(traces: &[RunTrace], tb: &TheoryBounds) -> Result<(f64, f64)> {
    let f0: Vec<f64> = traces.iter().map(|t| t.initial_objective()).collect();
    let (mean, se_seed) = mean_stderr(&f0);
    let se_mc = traces
        .iter()
        .map(|t| t.records[0].f_stderr)
        .fold(0.0, f64::max);
    Ok((mean - tb.f_star()?, se_seed.max(se_mc)))
}

fn check_step_regime(schedule: &StepSchedule, tb: &TheoryBounds) -> Result<()> {
    let delta0 = schedule.initial();
    if delta0 > tb.delta_max * (1.0 + STEP_TOLERANCE) {
        return Err(Error::StepExceedsBound {
            delta0,
            delta_max: tb.delta_max,
        });
    }
    if (delta0 - tb.delta0).abs() > 1e-12 * tb.delta0 {
        return Err(invalid(
            "schedule.c",
            "constants were computed for a different δ_0",
        ));
    }
    Ok(())
}

/// `Σ_{k<N} ‖x_{k+1} − x_k‖² ≤ 2δ_0(F(x_0) − F*) + 4λ²L²/(σ²(1−δ_0ρ)) Σ_{k≤N} δ_k²`.
pub fn check_residual_bound(
    traces: &[RunTrace],
    tb: &TheoryBounds,
    schedule: &StepSchedule,
) -> Result<BoundReport> {
    let n = check_ensemble(traces, 0)?;
    check_step_regime(schedule, tb)?;
    let sums: Vec<f64> = traces
        .iter()
        .map(|t| t.residuals().map(|r| r * r).sum())
        .collect();
    let (lhs, se) = mean_stderr(&sums);
    let (gap, gap_se) = initial_gap(traces, tb)?;
    let rhs =
        2.0 * tb.delta0 * gap + tb.residual_noise_coefficient() * schedule.partial_sum_sq(n as u64);
    let se = (se * se + (2.0 * tb.delta0 * gap_se).powi(2)).sqrt();
    Ok(BoundReport::new(
        "residual",
        lhs,
        rhs,
        se,
        tb.f_star_exact,
        traces.len(),
    ))
}

fn grad_column(traces: &[RunTrace], k: usize) -> Vec<f64> {
    traces.iter().map(|t| t.records[k].grad_sq_est).collect()
}

/// Seed-averaged `‖∇F(x_k)‖²` and its standard error for `k = 0..=n`.
pub fn mean_grad_sq(traces: &[RunTrace], n: usize) -> Vec<(f64, f64)> {
    (0..=n)
        .map(|k| mean_stderr(&grad_column(traces, k)))
        .collect()
}

/// `(1/(N+1)) Σ_{k≤N} ‖∇F(x_k)‖² ≤ A₂(F(x_0) − F*)/(δ(N+1)) + B₂δ`.
pub fn check_constant_step_bound(
    traces: &[RunTrace],
    tb: &TheoryBounds,
    delta: f64,
    n: usize,
) -> Result<BoundReport> {
    check_ensemble(traces, n)?;
    for t in traces {
        if t.records[..=n].iter().any(|r| r.delta != delta) {
            return Err(Error::Schedule(
                "the averaged-gradient bound needs a constant step".into(),
            ));
        }
    }
    let tb = if delta == tb.delta0 {
        *tb
    } else {
        tb.at_step(delta)?
    };
    let averages: Vec<f64> = traces
        .iter()
        .map(|t| t.records[..=n].iter().map(|r| r.grad_sq_est).sum::<f64>() / (n + 1) as f64)
        .collect();
    let (lhs, se) = mean_stderr(&averages);
    let (gap, gap_se) = initial_gap(traces, &tb)?;
    let scale = tb.a2 / (delta * (n + 1) as f64);
    let rhs = scale * gap + tb.b2 * delta;
    let se = (se * se + (scale * gap_se).powi(2)).sqrt();
    Ok(BoundReport::new(
        "constant-step",
        lhs,
        rhs,
        se,
        tb.f_star_exact,
        traces.len(),
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecreasingReport {
    pub report: BoundReport,
    /// `min_{j≤k}` of the seed-averaged `‖∇F(x_j)‖²`, for `k = 0..=N`.
    pub running_min: Vec<f64>,
    /// Per-seed `Σ_{k≤N} δ_k ‖∇F(x_k)‖²`.
    pub partial_sums: Vec<f64>,
}

/// `min_{k≤N} ‖∇F(x_k)‖² ≤ A₃(F(x_0) − F*)/Σδ_k + B₃ Σδ_k²/Σδ_k`.
pub fn check_decreasing_bound(
    traces: &[RunTrace],
    tb: &TheoryBounds,
    schedule: &StepSchedule,
    n: usize,
) -> Result<DecreasingReport> {
    if schedule.is_constant() {
        return Err(Error::Schedule(
            "the min-gradient bound is stated for decreasing steps".into(),
        ));
    }
    check_ensemble(traces, n)?;
    check_step_regime(schedule, tb)?;
    let means = mean_grad_sq(traces, n);
    let mut running_min = Vec::with_capacity(n + 1);
    let (mut lhs, mut se) = (f64::INFINITY, 0.0);
    for &(m, s) in &means {
        if m < lhs {
            lhs = m;
            se = s;
        }
        running_min.push(lhs);
    }
    let s1 = schedule.partial_sum(n as u64);
    let s2 = schedule.partial_sum_sq(n as u64);
    let (gap, gap_se) = initial_gap(traces, tb)?;
    let rhs = tb.a3 / s1 * gap + tb.b3 * s2 / s1;
    let se = (se * se + (tb.a3 / s1 * gap_se).powi(2)).sqrt();
    let partial_sums = traces.iter().map(|t| weighted_grad_sum(t, n)).collect();
    Ok(DecreasingReport {
        report: BoundReport::new(
            "decreasing-step",
            lhs,
            rhs,
            se,
            tb.f_star_exact,
            traces.len(),
        ),
        running_min,
        partial_sums,
    })
}

/// `Σ_{k≤n} δ_k ‖∇F(x_k)‖²` for one trace.
pub fn weighted_grad_sum(trace: &RunTrace, n: usize) -> f64 {
    trace.records[..=n]
        .iter()
        .map(|r| r.delta * r.grad_sq_est)
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateReport {
    pub slope: f64,
    pub expected: f64,
    pub n_points: usize,
}

/// Least-squares slope of `log min_{k≤N} E‖∇F(x_k)‖²` against `log N` over the
/// last decade of `N`, next to the predicted `α − 1`.
pub fn rate_slope(traces: &[RunTrace], alpha: f64) -> Result<RateReport> {
    if !(alpha > 0.5 && alpha < 1.0) {
        return Err(invalid("alpha", "the rate is stated for α in (1/2, 1)"));
    }
    let n = check_ensemble(traces, 0)?;
    let constant = traces[0]
        .records
        .windows(2)
        .all(|w| w[0].delta == w[1].delta);
    if constant {
        return Err(Error::Schedule(
            "the rate fit needs a decreasing schedule".into(),
        ));
    }
    let means = mean_grad_sq(traces, n);
    let mut running = Vec::with_capacity(n + 1);
    let mut lo = f64::INFINITY;
    for (m, _) in means {
        lo = lo.min(m);
        running.push(lo);
    }
    // Log-spaced sample of N in [N/10, N].
    let start = (n / 10).max(1);
    let mut points: Vec<usize> = (0..=64)
        .map(|i| {
            let t = i as f64 / 64.0;
            ((start as f64).ln() * (1.0 - t) + (n as f64).ln() * t)
                .exp()
                .round() as usize
        })
        .filter(|&k| k >= start && k <= n)
        .collect();
    points.dedup();
    if points.len() < 10 {
        return Err(Error::TooFewPoints {
            found: points.len(),
            needed: 10,
        });
    }
    let xs: Vec<f64> = points.iter().map(|&k| (k as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|&k| running[k].ln()).collect();
    let xm = xs.iter().sum::<f64>() / xs.len() as f64;
    let ym = ys.iter().sum::<f64>() / ys.len() as f64;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - xm) * (x - xm)).sum();
    Ok(RateReport {
        slope: sxy / sxx,
        expected: alpha - 1.0,
        n_points: points.len(),
    })
}

/// Seed-averaged residual over the first and last 5% of iterations.
pub fn residual_decay(traces: &[RunTrace]) -> Result<(f64, f64)> {
    let n = check_ensemble(traces, 0)?;
    let window = (n / 20).max(1);
    if n < 2 * window {
        return Err(Error::TooFewPoints {
            found: n,
            needed: 2 * window,
        });
    }
    let avg = |range: core::ops::Range<usize>| {
        let len = range.len() as f64;
        let per_seed: Vec<f64> = traces
            .iter()
            .map(|t| {
                t.records[range.clone()]
                    .iter()
                    .map(|r| r.residual)
                    .sum::<f64>()
                    / len
            })
            .collect();
        mean_stderr(&per_seed).0
    };
    Ok((avg(1..1 + window), avg(n + 1 - window..n + 1)))
}

/// Scalar model with a noisy regularizer gradient: `f = (a/2)x²`,
/// `g = (λ_g/2)x²`, `∇̃g(x) = λ_g x + σ_noise z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Counterexample {
    pub a: f64,
    pub lambda_g: f64,
    pub delta: f64,
    pub sigma_noise: f64,
    pub iters: usize,
    pub seeds: usize,
    pub x0: f64,
    pub base_seed: u64,
}

impl Counterexample {
    pub fn new(
        a: f64,
        lambda_g: f64,
        delta: f64,
        sigma_noise: f64,
        iters: usize,
        seeds: usize,
    ) -> Self {
        Self {
            a,
            lambda_g,
            delta,
            sigma_noise,
            iters,
            seeds,
            x0: 1.0,
            base_seed: 0,
        }
    }

    fn contraction(&self) -> (f64, f64) {
        let denom = 1.0 + self.delta * self.a;
        (
            (1.0 - self.delta * self.lambda_g) / denom,
            self.delta * self.sigma_noise / denom,
        )
    }

    /// Exact `E‖∇F(x_k)‖²` of the linear recursion.
    pub fn exact_grad_sq(&self, k: usize) -> f64 {
        let (c, b) = self.contraction();
        let c2 = c * c;
        let ck = c2.powi(k as i32);
        let second = ck * self.x0 * self.x0 + b * b * (1.0 - ck) / (1.0 - c2);
        (self.a + self.lambda_g).powi(2) * second
    }

    /// Stationary `E‖∇F‖² = (a+λ_g)² b²/(1 − c²)`.
    pub fn steady_state(&self) -> f64 {
        let (c, b) = self.contraction();
        (self.a + self.lambda_g).powi(2) * b * b / (1.0 - c * c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CounterexampleReport {
    pub min_mean_grad_sq: f64,
    pub argmin: usize,
    pub lower_bound: f64,
    pub steady_state: f64,
    pub steady_state_empirical: f64,
    pub steady_state_stderr: f64,
    pub floor_respected: bool,
    pub deterministic: bool,
}

impl CounterexampleReport {
    /// Empirical stationary level within 3 standard errors of the closed form.
    pub fn steady_state_matches(&self) -> bool {
        (self.steady_state_empirical - self.steady_state).abs() <= 3.0 * self.steady_state_stderr
    }
}

/// Simulates `x_{k+1} = (x_k − δλ_g x_k − δσ_noise z_k)/(1 + δa)` over seeds
/// and compares `min_k E‖∇F(x_k)‖²` with `σ_noise²/4`.
pub fn counterexample(p: &Counterexample) -> Result<CounterexampleReport> {
    for (name, v) in [("a", p.a), ("lambda_g", p.lambda_g), ("delta", p.delta)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(invalid(name, "must be positive"));
        }
    }
    if !(p.sigma_noise >= 0.0 && p.sigma_noise.is_finite()) {
        return Err(invalid("sigma_noise", "must be non-negative"));
    }
    if p.seeds < 2 {
        return Err(invalid("seeds", "need at least two seeds"));
    }
    let (c, b) = p.contraction();
    if c.abs() >= 1.0 {
        return Err(invalid("delta", "the recursion does not contract"));
    }
    let scale = (p.a + p.lambda_g).powi(2);
    let mut sums = vec![0.0; p.iters + 1];
    let tail_start = p.iters / 2;
    let mut tail_means = Vec::with_capacity(p.seeds);
    for s in 0..p.seeds {
        let stream =
            RngStream::new(p.base_seed.wrapping_add(s as u64)).with_run(lane::COUNTEREXAMPLE);
        let noise = stream.gaussian(p.iters);
        let mut x = p.x0;
        let mut tail = 0.0;
        for (k, slot) in sums.iter_mut().enumerate() {
            let g2 = scale * x * x;
            *slot += g2;
            if k >= tail_start {
                tail += g2;
            }
            if k < p.iters {
                x = c * x - b * noise[k];
            }
        }
        tail_means.push(tail / (p.iters + 1 - tail_start) as f64);
    }
    let (argmin, min) = sums.iter().map(|v| v / p.seeds as f64).enumerate().fold(
        (0, f64::INFINITY),
        |acc, (k, v)| if v < acc.1 { (k, v) } else { acc },
    );
    let (steady_emp, steady_se) = mean_stderr(&tail_means);
    let lower_bound = p.sigma_noise * p.sigma_noise / 4.0;
    Ok(CounterexampleReport {
        min_mean_grad_sq: min,
        argmin,
        lower_bound,
        steady_state: p.steady_state(),
        steady_state_empirical: steady_emp,
        steady_state_stderr: steady_se,
        floor_respected: min >= lower_bound,
        deterministic: p.sigma_noise == 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_ceiling() {
        assert_eq!(max_step(1.0, 1.0, 1.0, 0.0), 0.5);
        let s = 8.0 / 255.0;
        assert!((max_step(0.05, s, 0.5, 0.0) - s * s / 0.075).abs() < 1e-15);
        assert!((max_step(0.05, s, 0.5, 0.0) - 0.013_123_2).abs() < 1e-7);
        assert!(max_step(1.0, 1.0, 1.0, 1e12) < 1e-11);
    }

    #[test]
    fn constants_hand_values() {
        let tb = constants(1.0, 1.0, 0.5, 0.0, 1.0, 2.0 / 3.0).unwrap();
        assert_eq!(tb.l_f, 2.5);
        assert!((tb.a1 - 28.0 / 9.0).abs() < 1e-14);
        assert!((tb.b1 - 19.0 / 12.0).abs() < 1e-14);
        assert_eq!(tb.a2, 2.0 * tb.a1);
        assert_eq!(tb.a3, tb.a2);
        assert_eq!(tb.b2, tb.b3);
        assert_eq!(tb.b2, 2.0 * tb.b1);
    }

    #[test]
    fn step_above_ceiling_is_refused() {
        let err = constants(1.0, 1.0, 0.5, 0.0, 1.0, 0.7).unwrap_err();
        assert!(matches!(err, Error::StepExceedsBound { .. }));
        assert!(alloc::string::ToString::to_string(&err).contains("step condition"));
    }

    #[test]
    fn verdict_rule() {
        assert_eq!(
            BoundReport::new("t", 1.0, 1.0, 0.0, true, 1).verdict,
            Verdict::Certified
        );
        assert_eq!(
            BoundReport::new("t", 1.3, 1.0, 0.1, true, 1).verdict,
            Verdict::Certified
        );
        assert_eq!(
            BoundReport::new("t", 1.5, 1.0, 0.1, true, 1).verdict,
            Verdict::Violated
        );
        assert_eq!(
            BoundReport::new("t", 1.5, 1.0, 0.1, false, 1).verdict,
            Verdict::Inconclusive
        );
        assert_eq!(
            BoundReport::new("t", f64::NAN, 1.0, 0.1, true, 1).verdict,
            Verdict::Inconclusive
        );
    }

    #[test]
    fn counterexample_closed_form_is_fixed_point() {
        let p = Counterexample::new(1.0, 1.0, 0.1, 1.0, 10, 2);
        // a = λ_g = 1, δ = 0.1: (a+λ)δσ²/(2 + δ(a−λ)) = 0.1.
        assert!((p.steady_state() - 0.1).abs() < 1e-14);
        let mut q = p;
        q.x0 = (p.steady_state() / 4.0).sqrt();
        assert!((q.exact_grad_sq(1000) - q.steady_state()).abs() < 1e-12);
    }

    #[test]
    fn counterexample_deterministic_regime_decays() {
        let r = counterexample(&Counterexample::new(1.0, 1.0, 0.1, 0.0, 200, 2)).unwrap();
        assert!(r.deterministic);
        assert!(r.min_mean_grad_sq < 1e-30);
        assert_eq!(r.lower_bound, 0.0);
    }
}

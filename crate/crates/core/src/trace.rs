//! Per-iteration telemetry produced by [`crate::solvers::run`].

use alloc::string::String;
use alloc::vec::Vec;

use crate::solvers::Method;
use crate::vector::Vector;

/// One telemetry row. `residual` is `‖x_k − x_{k−1}‖` (zero at `k = 0`); the
/// stderr fields are zero when the quantity was computed exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub k: usize,
    pub delta: f64,
    pub lambda: f64,
    pub sigma: f64,
    pub residual: f64,
    pub f_est: f64,
    pub f_stderr: f64,
    pub grad_sq_est: f64,
    pub grad_sq_stderr: f64,
    pub psnr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetadata {
    pub seed: u64,
    pub method: Method,
    /// Hash of the solver configuration with the seed left out; equal across
    /// members of one ensemble.
    pub fingerprint: u64,
    pub iters: usize,
    pub record_every: usize,
    /// `δ_0` exceeds the step ceiling of the convergence theory (or the
    /// fidelity is not differentiable); the run is not certifiable.
    pub practical_mode: bool,
    /// Lipschitz constant of the denoiser is exact rather than a probe estimate.
    pub lipschitz_exact: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunAbort {
    pub k: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub records: Vec<TraceRecord>,
    pub metadata: RunMetadata,
    pub final_state: Vector,
    pub abort: Option<RunAbort>,
}

impl RunTrace {
    pub fn is_complete(&self) -> bool {
        self.abort.is_none()
    }

    pub fn initial_objective(&self) -> f64 {
        self.records.first().map_or(f64::NAN, |r| r.f_est)
    }

    pub fn residuals(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().skip(1).map(|r| r.residual)
    }

    pub fn final_psnr(&self) -> Option<f64> {
        self.records.last().and_then(|r| r.psnr)
    }
}

//! Stochastic proximal gradient with denoiser regularization.
//!
//! `snorelab-core` implements the SNORE and SNORE Prox iterations together with
//! the RED, RED Prox and PnP baselines, a closed-form Gaussian-mixture MMSE
//! denoiser, quadratic data-fidelity terms with exact proximal operators, the
//! convergence-theory constants and bound checks, and independent numerical
//! oracles for cross-checking. The crate is `no_std` and only needs `alloc`.

#![no_std]
// `!(x > 0.0)` is the NaN-rejecting form of every parameter check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod fidelity;
pub mod metrics;
pub mod numeric;
pub mod oracles;
pub mod prior;
pub mod regularizer;
pub mod rng;
pub mod schedule;
pub mod solvers;
pub mod theory;
pub mod trace;
pub mod vector;

pub use error::{Error, Result};
pub use fidelity::{Degradation, Fidelity, FidelityConstants, FidelityKind};
pub use prior::{ConstantDenoiser, Denoiser, DenoiserModel, GmmPrior, ProbePlan};
pub use rng::RngStream;
pub use schedule::StepSchedule;
pub use solvers::{Anneal, Method, SolverConfig, SolverState, Telemetry};
pub use theory::{BoundReport, TheoryBounds, Verdict};
pub use trace::{RunTrace, TraceRecord};
pub use vector::Vector;

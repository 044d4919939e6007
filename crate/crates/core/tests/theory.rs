mod common;

use common::*;
use proptest::prelude::*;
use snorelab_core::fidelity::Degradation;
use snorelab_core::rng::lane;
use snorelab_core::solvers::run;
use snorelab_core::theory::{
    analytic_f_star, check_constant_step_bound, check_decreasing_bound, check_residual_bound,
    constants, counterexample, estimate_f_star, rate_slope, residual_decay, Counterexample,
};
use snorelab_core::{
    Denoiser, DenoiserModel, Error, Fidelity, GmmPrior, Method, RngStream, RunTrace, SolverConfig,
    StepSchedule, TheoryBounds, Vector, Verdict,
};

struct Problem {
    fid: Fidelity,
    den: DenoiserModel,
    x0: Vector,
}

fn certified_problem() -> Problem {
    let prior = GmmPrior::gaussian(vec![0.5; 4], 0.0625).unwrap();
    let truth = prior.sample(&RngStream::new(1).with_run(lane::TRUTH));
    let deg = Degradation::denoise(0.1).unwrap();
    let y = deg.degrade(&truth, &RngStream::new(1).with_run(lane::OBSERVATION)).unwrap();
    let fid = deg.observe(y.clone()).unwrap();
    Problem { fid, den: DenoiserModel::new(prior), x0: y }
}

fn ensemble(p: &Problem, schedule: StepSchedule, n: usize, seeds: u64) -> Vec<RunTrace> {
    (0..seeds)
        .map(|s| {
            let cfg = SolverConfig::new(Method::SnoreProx, schedule, 1.0, 0.1, n).with_seed(s);
            run(&cfg, &p.fid, &p.den, &p.x0).unwrap()
        })
        .collect()
}

fn bounds(p: &Problem, delta0: f64) -> TheoryBounds {
    TheoryBounds::for_problem(&p.fid, &p.den, 1.0, 0.1, delta0).unwrap()
}

#[test]
fn residual_and_constant_step_bounds_certify() {
    let p = certified_problem();
    let dmax = snorelab_core::theory::max_step(1.0, 0.1, p.den.lipschitz(0.1), 0.0);
    let tb = bounds(&p, dmax / 2.0);
    let sched = StepSchedule::constant(dmax / 2.0).unwrap();
    let traces = ensemble(&p, sched, 300, 16);
    let res = check_residual_bound(&traces, &tb, &sched).unwrap();
    assert_eq!(res.verdict, Verdict::Certified, "{res:?}");
    let cst = check_constant_step_bound(&traces, &tb, dmax / 2.0, 300).unwrap();
    assert_eq!(cst.verdict, Verdict::Certified, "{cst:?}");
    // rhs approaches B₂δ as N grows
    let long = check_constant_step_bound(&traces, &tb, dmax / 2.0, 300).unwrap().rhs;
    let short = check_constant_step_bound(&traces, &tb, dmax / 2.0, 30).unwrap().rhs;
    assert!(long < short && long > tb.b2 * dmax / 2.0);
}

#[test]
fn stationary_start_has_zero_residual() {
    // Deterministic RED Prox started at its fixed point: with D(x) = x/2,
    // σ = σ_y = λ = 1 and y = 1 the fixed point is x = 1/1.5.
    let fid = Degradation::denoise(1.0).unwrap().observe(vector(&[1.0])).unwrap();
    let den = DenoiserModel::new(GmmPrior::gaussian(vec![0.0], 1.0).unwrap());
    let sched = StepSchedule::constant(0.2).unwrap();
    let cfg = SolverConfig::new(Method::RedProx, sched, 1.0, 1.0, 50);
    let trace = run(&cfg, &fid, &den, &vector(&[1.0 / 1.5])).unwrap();
    assert!(trace.residuals().all(|r| r < 1e-15));
    let tb = TheoryBounds::for_problem(&fid, &den, 1.0, 1.0, 0.2).unwrap();
    let rep = check_residual_bound(&[trace.clone(), trace], &tb, &sched).unwrap();
    assert!(rep.lhs < 1e-28);
    assert_eq!(rep.verdict, Verdict::Certified);
}

#[test]
fn tampered_traces_are_detected() {
    let p = certified_problem();
    let dmax = snorelab_core::theory::max_step(1.0, 0.1, p.den.lipschitz(0.1), 0.0);
    let sched = StepSchedule::constant(dmax / 2.0).unwrap();
    let tb = bounds(&p, dmax / 2.0);
    let mut traces = ensemble(&p, sched, 100, 8);
    let rhs = check_residual_bound(&traces, &tb, &sched).unwrap().rhs;
    for t in &mut traces {
        let scale = (10.0 * rhs).sqrt();
        t.records[1].residual = scale;
    }
    assert_eq!(check_residual_bound(&traces, &tb, &sched).unwrap().verdict, Verdict::Violated);
}

#[test]
fn preconditions_are_enforced() {
    let p = certified_problem();
    let dmax = snorelab_core::theory::max_step(1.0, 0.1, p.den.lipschitz(0.1), 0.0);
    assert!(matches!(
        TheoryBounds::for_problem(&p.fid, &p.den, 1.0, 0.1, 1.5 * dmax),
        Err(Error::StepExceedsBound { .. })
    ));
    let constant = StepSchedule::constant(dmax / 2.0).unwrap();
    let traces = ensemble(&p, constant, 20, 2);
    let tb = bounds(&p, dmax / 2.0);
    assert!(matches!(check_decreasing_bound(&traces, &tb, &constant, 20), Err(Error::Schedule(_))));
    assert!(matches!(rate_slope(&traces, 0.75), Err(Error::Schedule(_))));
    let decay = StepSchedule::power_decay(dmax / 2.0, 0.75).unwrap();
    let decaying = ensemble(&p, decay, 20, 2);
    assert!(matches!(check_constant_step_bound(&decaying, &tb, dmax / 2.0, 20), Err(Error::Schedule(_))));
    let mut mixed = traces.clone();
    mixed.push(decaying[0].clone());
    assert!(matches!(check_residual_bound(&mixed, &tb, &constant), Err(Error::MixedConfigs(_))));
    let short = ensemble(&p, decay, 5, 2);
    assert!(matches!(rate_slope(&short, 0.75), Err(Error::TooFewPoints { .. })));
    let noiseless = Degradation::inpaint(vec![true; 4], 0.0).unwrap().observe(Vector::zeros(4)).unwrap();
    assert!(matches!(
        TheoryBounds::for_problem(&noiseless, &p.den, 1.0, 0.1, 1e-4),
        Err(Error::Uncertifiable(_))
    ));
}

#[test]
fn decreasing_bound_running_min_and_decay() {
    let p = certified_problem();
    let dmax = snorelab_core::theory::max_step(1.0, 0.1, p.den.lipschitz(0.1), 0.0);
    let sched = StepSchedule::power_decay(dmax, 0.75).unwrap();
    let tb = bounds(&p, dmax);
    let traces = ensemble(&p, sched, 2000, 8);
    let rep = check_decreasing_bound(&traces, &tb, &sched, 2000).unwrap();
    assert_eq!(rep.report.verdict, Verdict::Certified, "{:?}", rep.report);
    assert!(rep.running_min.windows(2).all(|w| w[1] <= w[0]));
    assert_eq!(rep.partial_sums.len(), 8);
    let (first, last) = residual_decay(&traces).unwrap();
    assert!(last < first);
}

#[test]
fn analytic_minimum_bounds_long_runs() {
    let p = certified_problem();
    let (fstar, xstar) = analytic_f_star(&p.fid, &p.den, 1.0, 0.1).unwrap();
    // ∇F(x*) = 0
    let gf = p.fid.grad(xstar.as_slice()).unwrap();
    let gg = snorelab_core::regularizer::exact_grad_g(&p.den, 0.1, &xstar).unwrap();
    assert!(gf.iter().zip(gg.iter()).all(|(a, b)| (a + b).abs() < 1e-10));
    let dmax = snorelab_core::theory::max_step(1.0, 0.1, p.den.lipschitz(0.1), 0.0);
    for t in ensemble(&p, StepSchedule::constant(dmax).unwrap(), 1000, 4) {
        assert!(t.records.iter().all(|r| r.f_est >= fstar - 1e-9));
    }
    // the multistart estimate agrees with the analytic value
    let starts = [p.x0.clone(), Vector::zeros(4), Vector::constant(4, 1.0).unwrap()];
    let est = estimate_f_star(&p.fid, &p.den, 1.0, 0.1, &starts, 5000).unwrap();
    assert!((est - fstar).abs() < 1e-8, "{est} vs {fstar}");
}

#[test]
fn mixture_f_star_estimate_is_not_above_any_run() {
    let prior = skewed_pair();
    let den = DenoiserModel::new(prior);
    let fid = Degradation::denoise(0.5).unwrap().observe(vector(&[0.4])).unwrap();
    let starts: Vec<Vector> = (-8..=8).map(|i| vector(&[i as f64 * 0.4])).collect();
    let est = estimate_f_star(&fid, &den, 1.0, 0.5, &starts, 3000).unwrap();
    let cfg = SolverConfig::new(Method::RedProx, StepSchedule::constant(0.01).unwrap(), 1.0, 0.5, 500);
    let trace = run(&cfg, &fid, &den, &vector(&[2.0])).unwrap();
    assert!(trace.records.iter().all(|r| r.f_est >= est - 1e-9));
}

#[test]
fn counterexample_matches_closed_form_steady_state() {
    let p = Counterexample::new(1.0, 1.0, 0.1, 1.0, 4000, 64);
    let r = counterexample(&p).unwrap();
    assert!(r.steady_state_matches(), "{r:?}");
    assert!((r.steady_state - 0.1).abs() < 1e-12);
    assert_eq!(r.lower_bound, 0.25);
    // high-curvature regime: the floor holds
    let q = Counterexample::new(100.0, 1.0, 0.1, 1.0, 2000, 64);
    let rq = counterexample(&q).unwrap();
    assert!(rq.floor_respected, "{rq:?}");
}

proptest! {
    #[test]
    fn constants_are_monotone(
        lambda in 0.1f64..3.0, sigma in 0.05f64..1.0, l in 0.0f64..1.5,
        rho in 0.0f64..1.0, m in 0.0f64..10.0, frac in 0.05f64..0.9, bump in 1.01f64..2.0,
    ) {
        let d0 = frac * snorelab_core::theory::max_step(lambda * bump, sigma, l * bump + 0.01, rho * bump + 0.01);
        let base = constants(lambda, sigma, l, rho, m, d0).unwrap();
        for (lb, ll, lr, lm) in [
            (lambda * bump, l, rho, m),
            (lambda, l * bump + 0.01, rho, m),
            (lambda, l, rho * bump + 0.01, m),
            (lambda, l, rho, m * bump + 0.01),
        ] {
            let up = constants(lb, sigma, ll, lr, lm, d0).unwrap();
            prop_assert!(up.a1 >= base.a1 - 1e-12);
            prop_assert!(up.b1 >= base.b1 - 1e-12);
        }
        prop_assert!(1.0 - d0 * rho > 0.0);
        prop_assert_eq!(base.a2, 2.0 * base.a1);
        prop_assert_eq!(base.a3, base.a2);
        prop_assert_eq!(base.b2, base.b3);
    }

    #[test]
    fn step_ceiling_shrinks_with_weak_convexity(lambda in 0.1f64..3.0, sigma in 0.05f64..1.0, l in 0.0f64..1.5, rho in 0.0f64..5.0) {
        let a = snorelab_core::theory::max_step(lambda, sigma, l, rho);
        let b = snorelab_core::theory::max_step(lambda, sigma, l, rho + 1.0);
        prop_assert!(b < a);
    }
}

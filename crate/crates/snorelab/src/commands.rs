//! Subcommand implementations. Each returns the process exit code; errors are
//! reserved for unusable input (exit 2 from the binary).

use std::io::Write;
use std::path::{Path, PathBuf};

use snorelab_core::fidelity::Degradation;
use snorelab_core::oracles::{grid_prox, GridSpec, OracleConfig};
use snorelab_core::rng::lane;
use snorelab_core::theory::{
    check_constant_step_bound, check_decreasing_bound, check_residual_bound, counterexample,
    rate_slope, Counterexample,
};
use snorelab_core::{
    BoundReport, Fidelity, FidelityKind, Method, RngStream, RunTrace, StepSchedule, TheoryBounds,
    Vector, Verdict,
};

use crate::config::{ExperimentConfig, MeansSpec};
use crate::ensemble::run_ensemble;
use crate::error::{io, Error, Result};
use crate::io::{read_trace, write_mask, write_pgm, write_text, write_trace, Provenance};
use crate::problem::{build_problem, Problem};

/// Slack on the fitted rate exponent: the rate is an upper bound, so only a
/// slope above `α − 1 + RATE_SLACK` counts against it.
pub const RATE_SLACK: f64 = 0.15;

/// Prox oracle acceptance threshold.
pub const PROX_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone)]
pub struct Options {
    pub out: PathBuf,
    pub threads: usize,
}

fn resolve(out: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        out.join(p)
    }
}

/// `trace.csv` → `trace-seed7.csv` when several seeds share one output name.
fn per_seed(path: &Path, seed: u64, many: bool) -> PathBuf {
    if !many {
        return path.to_path_buf();
    }
    let stem = path.file_stem().map(|s| s.to_string_lossy()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}-seed{seed}.{}", ext.to_string_lossy()),
        None => format!("{stem}-seed{seed}"),
    };
    path.with_file_name(name)
}

fn schedule_name(s: &StepSchedule) -> &'static str {
    if s.is_constant() {
        "constant"
    } else {
        "power-decay"
    }
}

fn write_config(out: &Path, cfg: &ExperimentConfig) -> Result<()> {
    std::fs::create_dir_all(out).map_err(io(out))?;
    let path = out.join("config.json");
    std::fs::write(&path, cfg.to_json() + "\n").map_err(io(path))
}

/// Observation, ground truth and (for inpainting) the mask.
fn write_problem(out: &Path, problem: &Problem, prov: &Provenance) -> Result<()> {
    let (h, w) = (problem.height, problem.width);
    write_pgm(
        &out.join("observation.pgm"),
        problem.fid.observation().as_slice(),
        h,
        w,
        prov,
    )?;
    write_pgm(&out.join("truth.pgm"), problem.truth.as_slice(), h, w, prov)?;
    if let Some(mask) = problem.mask() {
        write_mask(&out.join("mask.txt"), mask, w, prov)?;
    }
    Ok(())
}

pub fn cmd_run(cfg: &ExperimentConfig, opts: &Options, log: &mut dyn Write) -> Result<i32> {
    cfg.validate()?;
    let hash = cfg.hash();
    let base = cfg.ensemble.base_seed;
    let problem = build_problem(&cfg.problem, base)?;
    let seeds = cfg.seeds(cfg.ensemble.n_seeds);
    let solver = cfg.solver_config(base)?;
    let traces = run_ensemble(&problem, &solver, &seeds, opts.threads)?;

    write_config(&opts.out, cfg)?;
    write_problem(&opts.out, &problem, &Provenance::new(&hash, base))?;
    let many = seeds.len() > 1;
    let trace_path = resolve(&opts.out, &cfg.outputs.trace);
    let image_path = resolve(&opts.out, &cfg.outputs.image);
    let mut aborted = 0;
    for t in &traces {
        let seed = t.metadata.seed;
        let prov = Provenance::new(&hash, seed);
        write_trace(
            &per_seed(&trace_path, seed, many),
            t,
            schedule_name(&solver.schedule),
            &prov,
        )?;
        write_pgm(
            &per_seed(&image_path, seed, many),
            t.final_state.as_slice(),
            problem.height,
            problem.width,
            &prov,
        )?;
        let last = t.records.last().expect("k = 0 is always recorded");
        let psnr = last.psnr.map_or("-".into(), |p| format!("{p:.3} dB"));
        match &t.abort {
            None => writeln!(
                log,
                "seed {seed}: k={} F={:.6e} |∇F|²={:.6e} psnr={psnr}",
                last.k, last.f_est, last.grad_sq_est
            ),
            Some(a) => {
                aborted += 1;
                writeln!(log, "seed {seed}: aborted at k={}: {}", a.k, a.reason)
            }
        }
        .map_err(io("<log>"))?;
        if t.metadata.practical_mode && seed == base {
            writeln!(
                log,
                "note: δ_0 exceeds the step ceiling of the convergence theory (practical mode)"
            )
            .map_err(io("<log>"))?;
        }
    }
    writeln!(log, "config_hash={hash} outputs in {}", opts.out.display()).map_err(io("<log>"))?;
    Ok(if aborted > 0 { 1 } else { 0 })
}

/// One certification line.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyLine {
    pub schedule: &'static str,
    pub report: BoundReport,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOutcome {
    pub bounds: TheoryBounds,
    pub lines: Vec<VerifyLine>,
}

impl VerifyOutcome {
    pub fn any_violated(&self) -> bool {
        self.lines
            .iter()
            .any(|l| l.report.verdict == Verdict::Violated)
    }
}

fn refuse(msg: impl Into<String>) -> Error {
    Error::Refused(msg.into())
}

/// Constants of the certified problem; refuses anything outside the class the
/// bounds are proved for.
pub fn certified_bounds(cfg: &ExperimentConfig, problem: &Problem) -> Result<TheoryBounds> {
    if !matches!(cfg.method, Method::SnoreProx | Method::RedProx) {
        return Err(refuse(format!(
            "the bounds cover snore-prox and red-prox, not {}",
            cfg.method
        )));
    }
    if cfg.solver.anneal.is_some() {
        return Err(refuse("annealed runs change (λ, σ) and are not covered"));
    }
    if !matches!(&cfg.problem.prior.means, MeansSpec::List(l) if l.len() == 1) {
        return Err(refuse(
            "certification needs a single-Gaussian prior (K = 1) with an exact F*",
        ));
    }
    if cfg.solver.telemetry.record_every != 1 {
        return Err(refuse("certification needs telemetry.record_every = 1"));
    }
    let s = &cfg.solver;
    TheoryBounds::for_problem(&problem.fid, &problem.den, s.lambda, s.sigma, s.schedule.c).map_err(
        |e| match e {
            snorelab_core::Error::StepExceedsBound { .. } | snorelab_core::Error::Uncertifiable(_) => {
                refuse(e.to_string())
            }
            other => other.into(),
        },
    )
}

fn schedules(cfg: &ExperimentConfig) -> Result<(StepSchedule, StepSchedule)> {
    let c = cfg.solver.schedule.c;
    Ok((
        StepSchedule::constant(c)?,
        StepSchedule::power_decay(c, cfg.verify.alpha)?,
    ))
}

fn failed(name: &'static str, schedule: &'static str, n: usize, reason: String) -> VerifyLine {
    VerifyLine {
        schedule,
        report: BoundReport {
            name,
            lhs: f64::NAN,
            rhs: f64::NAN,
            margin: f64::NAN,
            mc_stderr: f64::NAN,
            verdict: Verdict::Violated,
            n_traces: n,
        },
        note: Some(reason),
    }
}

/// Runs every check. With `strict` unset (traces read back from disk), a trace
/// that does not even satisfy the checkers' preconditions is reported as
/// `violated` rather than aborting the command.
pub fn certify(
    cfg: &ExperimentConfig,
    tb: &TheoryBounds,
    constant: &[RunTrace],
    decreasing: &[RunTrace],
    strict: bool,
) -> Result<Vec<VerifyLine>> {
    let (cs, ds) = schedules(cfg)?;
    let n = cfg.solver.iters;
    let mut lines = Vec::new();
    let mut push = |name: &'static str,
                    schedule: &'static str,
                    count: usize,
                    r: snorelab_core::Result<BoundReport>|
     -> Result<()> {
        match r {
            Ok(report) => lines.push(VerifyLine {
                schedule,
                report,
                note: None,
            }),
            Err(e) if !strict => lines.push(failed(name, schedule, count, e.to_string())),
            Err(e) => return Err(e.into()),
        }
        Ok(())
    };
    push(
        "residual",
        "constant",
        constant.len(),
        check_residual_bound(constant, tb, &cs),
    )?;
    push(
        "constant-step",
        "constant",
        constant.len(),
        check_constant_step_bound(constant, tb, cs.initial(), n),
    )?;
    push(
        "residual",
        "power-decay",
        decreasing.len(),
        check_residual_bound(decreasing, tb, &ds),
    )?;
    push(
        "decreasing-step",
        "power-decay",
        decreasing.len(),
        check_decreasing_bound(decreasing, tb, &ds, n).map(|d| d.report),
    )?;
    let rate = match rate_slope(decreasing, cfg.verify.alpha) {
        Ok(r) => {
            let ceiling = r.expected + RATE_SLACK;
            let verdict = if r.slope <= ceiling {
                Verdict::Certified
            } else {
                Verdict::Violated
            };
            Ok(BoundReport {
                name: "rate-slope",
                lhs: r.slope,
                rhs: ceiling,
                margin: ceiling - r.slope,
                mc_stderr: 0.0,
                verdict,
                n_traces: decreasing.len(),
            })
        }
        Err(snorelab_core::Error::TooFewPoints { found, needed }) => Ok(BoundReport {
            name: "rate-slope",
            lhs: f64::NAN,
            rhs: f64::NAN,
            margin: f64::NAN,
            mc_stderr: f64::NAN,
            verdict: Verdict::Inconclusive,
            n_traces: found.min(needed),
        }),
        Err(e) => Err(e),
    };
    push("rate-slope", "power-decay", decreasing.len(), rate)?;
    Ok(lines)
}

/// Traces of one ensemble read back from disk, with the seeds whose rows no
/// longer match their recorded digest.
struct Loaded {
    traces: Vec<RunTrace>,
    corrupted: Vec<u64>,
}

fn load_traces(dir: &Path, hash: &str) -> Result<Loaded> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(io(dir))?
        .map(|e| e.map(|e| e.path()).map_err(io(dir)))
        .collect::<Result<_>>()?;
    paths.retain(|p| p.extension().is_some_and(|e| e == "csv"));
    paths.sort();
    let mut traces = Vec::with_capacity(paths.len());
    let mut corrupted = Vec::new();
    for p in paths {
        let (t, header) = read_trace(&p)?;
        if !header.digest_ok {
            corrupted.push(t.metadata.seed);
        }
        if header.provenance.config_hash != hash {
            return Err(refuse(format!(
                "{} was produced by config {}, not {hash}",
                p.display(),
                header.provenance.config_hash
            )));
        }
        traces.push(t);
    }
    if traces.is_empty() {
        return Err(refuse(format!("no trace files in {}", dir.display())));
    }
    traces.sort_by_key(|t| t.metadata.seed);
    corrupted.sort_unstable();
    Ok(Loaded { traces, corrupted })
}

fn trace_dir(out: &Path, schedule: &str) -> PathBuf {
    out.join("traces").join(schedule)
}

/// Runs (or reloads) both ensembles and certifies them.
pub fn verify(
    cfg: &ExperimentConfig,
    opts: &Options,
    from_traces: Option<&Path>,
) -> Result<VerifyOutcome> {
    cfg.validate()?;
    let hash = cfg.hash();
    let base = cfg.ensemble.base_seed;
    let problem = build_problem(&cfg.problem, base)?;
    let tb = certified_bounds(cfg, &problem)?;
    let (cs, ds) = schedules(cfg)?;

    let mut corrupted = Vec::new();
    let (constant, decreasing, strict) = match from_traces {
        Some(dir) => {
            let c = load_traces(&trace_dir(dir, "constant"), &hash)?;
            let d = load_traces(&trace_dir(dir, "power-decay"), &hash)?;
            corrupted = vec![("constant", c.corrupted), ("power-decay", d.corrupted)];
            (c.traces, d.traces, false)
        }
        None => {
            let seeds = cfg.seeds(cfg.verify.seeds);
            let mut solver = cfg.solver_config(base)?;
            solver.schedule = cs;
            let constant = run_ensemble(&problem, &solver, &seeds, opts.threads)?;
            solver.schedule = ds;
            let decreasing = run_ensemble(&problem, &solver, &seeds, opts.threads)?;
            write_config(&opts.out, cfg)?;
            for (traces, s) in [(&constant, &cs), (&decreasing, &ds)] {
                let dir = trace_dir(&opts.out, schedule_name(s));
                for t in traces {
                    let seed = t.metadata.seed;
                    let path = dir.join(format!("trace-seed{seed}.csv"));
                    write_trace(&path, t, schedule_name(s), &Provenance::new(&hash, seed))?;
                }
            }
            (constant, decreasing, true)
        }
    };

    let mut lines = certify(cfg, &tb, &constant, &decreasing, strict)?;
    for (name, seeds) in corrupted {
        if !seeds.is_empty() {
            let n = if name == "constant" { constant.len() } else { decreasing.len() };
            lines.push(failed(
                "integrity",
                name,
                n,
                format!("rows of seeds {seeds:?} differ from their recorded digest"),
            ));
        }
    }
    if !strict {
        // traces must come from exactly this solver configuration
        for (traces, s, name) in [(&constant, cs, "constant"), (&decreasing, ds, "power-decay")] {
            let mut solver = cfg.solver_config(base)?;
            solver.schedule = s;
            let expected = solver.fingerprint();
            if let Some(t) = traces.iter().find(|t| t.metadata.fingerprint != expected) {
                lines.push(failed(
                    "provenance",
                    name,
                    traces.len(),
                    format!("seed {} has a foreign solver fingerprint", t.metadata.seed),
                ));
            }
        }
    }
    Ok(VerifyOutcome { bounds: tb, lines })
}

fn constants_text(tb: &TheoryBounds) -> String {
    let f_star = tb.f_star.map_or("none".into(), |v| format!("{v:.16e}"));
    let pairs: [(&str, String); 17] = [
        ("lambda", format!("{:.16e}", tb.lambda)),
        ("sigma", format!("{:.16e}", tb.sigma)),
        ("L", format!("{:.16e}", tb.l)),
        ("rho", format!("{:.16e}", tb.rho)),
        ("M", format!("{:.16e}", tb.m)),
        ("M_bar", format!("{:.16e}", tb.m_bar)),
        ("L_F", format!("{:.16e}", tb.l_f)),
        ("delta0", format!("{:.16e}", tb.delta0)),
        ("delta_max", format!("{:.16e}", tb.delta_max)),
        ("A1", format!("{:.16e}", tb.a1)),
        ("B1", format!("{:.16e}", tb.b1)),
        ("A2", format!("{:.16e}", tb.a2)),
        ("B2", format!("{:.16e}", tb.b2)),
        ("A3", format!("{:.16e}", tb.a3)),
        ("B3", format!("{:.16e}", tb.b3)),
        ("F_star", f_star),
        ("F_star_exact", tb.f_star_exact.to_string()),
    ];
    pairs
        .iter()
        .map(|(k, v)| format!("# {k}={v}\n"))
        .collect()
}

pub fn report_csv(outcome: &VerifyOutcome) -> String {
    let mut s = constants_text(&outcome.bounds);
    s.push_str("bound,schedule,lhs,rhs,margin,mc_stderr,verdict,n_traces,note\n");
    for l in &outcome.lines {
        let r = &l.report;
        s.push_str(&format!(
            "{},{},{:.16e},{:.16e},{:.16e},{:.16e},{},{},{}\n",
            r.name,
            l.schedule,
            r.lhs,
            r.rhs,
            r.margin,
            r.mc_stderr,
            r.verdict,
            r.n_traces,
            l.note.as_deref().unwrap_or("").replace(',', ";")
        ));
    }
    s
}

pub fn cmd_verify(
    cfg: &ExperimentConfig,
    opts: &Options,
    from_traces: Option<&Path>,
    log: &mut dyn Write,
) -> Result<i32> {
    let outcome = verify(cfg, opts, from_traces)?;
    let hash = cfg.hash();
    let report = report_csv(&outcome);
    write_text(
        &resolve(&opts.out, &cfg.outputs.report),
        &report,
        &Provenance::new(&hash, cfg.ensemble.base_seed),
    )?;
    let w = |log: &mut dyn Write, s: String| writeln!(log, "{s}").map_err(io("<log>"));
    w(log, format!("config_hash={hash}"))?;
    for l in &outcome.lines {
        let r = &l.report;
        w(
            log,
            format!(
                "{:<16} {:<12} lhs={:.6e} rhs={:.6e} se={:.2e} → {}{}",
                r.name,
                l.schedule,
                r.lhs,
                r.rhs,
                r.mc_stderr,
                r.verdict,
                l.note.as_deref().map(|n| format!(" ({n})")).unwrap_or_default()
            ),
        )?;
    }
    Ok(if outcome.any_violated() { 1 } else { 0 })
}

pub fn cmd_counterexample(p: &Counterexample, log: &mut dyn Write) -> Result<i32> {
    let r = counterexample(p)?;
    let text = format!(
        "snorelab version={}\n\
         inputs: a={} lambda_g={} delta={} sigma_noise={} iters={} seeds={} x0={} base_seed={}\n\
         min_mean_grad_sq={:.6e} (at k={})\n\
         floor sigma_noise^2/4={:.6e}\n\
         steady_state closed_form={:.6e} empirical={:.6e} ± {:.2e} (matches within 3 se: {})\n\
         floor_respected={}{}\n",
        crate::config::ARTIFACT_VERSION,
        p.a,
        p.lambda_g,
        p.delta,
        p.sigma_noise,
        p.iters,
        p.seeds,
        p.x0,
        p.base_seed,
        r.min_mean_grad_sq,
        r.argmin,
        r.lower_bound,
        r.steady_state,
        r.steady_state_empirical,
        r.steady_state_stderr,
        r.steady_state_matches(),
        r.floor_respected,
        if r.deterministic {
            "\nflag: deterministic regime (sigma_noise = 0, no noise floor)"
        } else {
            ""
        },
    );
    log.write_all(text.as_bytes()).map_err(io("<log>"))?;
    Ok(if r.floor_respected { 0 } else { 1 })
}

/// Prox implementation under test: `(fidelity, δ, x) ↦ Prox_{δf}(x)`.
pub type ProxFn<'a> = dyn Fn(&Fidelity, f64, &[f64]) -> snorelab_core::Result<Vec<f64>> + Sync + 'a;

#[derive(Debug, Clone, PartialEq)]
pub struct KindReport {
    pub kind: FidelityKind,
    pub cases: usize,
    pub max_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProxOracleReport {
    pub kinds: Vec<KindReport>,
    /// Noisy inpainting with `x = 2, y = 0, σ_y = 1, δ = 1`; the exact prox is 1.
    pub reference_value: f64,
    pub reference_error: f64,
}

impl ProxOracleReport {
    pub fn max_error(&self) -> f64 {
        self.kinds
            .iter()
            .map(|k| k.max_error)
            .fold(self.reference_error, f64::max)
    }

    pub fn passed(&self) -> bool {
        let e = self.max_error();
        e.is_finite() && e < PROX_TOLERANCE
    }
}

const PROX_KINDS: [FidelityKind; 4] = [
    FidelityKind::DenoiseQuadratic,
    FidelityKind::InpaintNoisy,
    FidelityKind::InpaintNoiseless,
    FidelityKind::DeblurCirculant,
];

fn scalar(v: f64) -> Vector {
    Vector::new(vec![v]).expect("finite")
}

/// Random case `i` of `kind`: the fidelity, the step and the point.
fn prox_case(kind: FidelityKind, grid: &GridSpec, seed: u64, i: usize) -> Result<(Fidelity, f64, Vec<f64>)> {
    let u = RngStream::new(seed)
        .with_run(lane::PROBES)
        .at(kind as u64, i as u64)
        .uniform(8);
    let sigma_y = 0.2 + 1.8 * u[0];
    let delta = 0.05 + 2.95 * u[1];
    let x = -3.0 + 6.0 * u[2];
    let y = -2.0 + 4.0 * u[3];
    let observed = u[4] < 0.8;
    Ok(match kind {
        FidelityKind::DenoiseQuadratic => (
            Degradation::denoise(sigma_y)?.observe(scalar(y))?,
            delta,
            vec![x],
        ),
        FidelityKind::InpaintNoisy => (
            Degradation::inpaint(vec![observed], sigma_y)?.observe(scalar(y))?,
            delta,
            vec![x],
        ),
        FidelityKind::InpaintNoiseless => {
            // the constraint value must be representable on the grid
            let lo = ((-2.0 - grid.lo) / grid.spacing()).ceil() as usize;
            let span = (4.0 / grid.spacing()) as usize;
            let y = grid.point(lo + (u[3] * span as f64) as usize);
            (
                Degradation::inpaint(vec![observed], 0.0)?.observe(scalar(y))?,
                delta,
                vec![x],
            )
        }
        FidelityKind::DeblurCirculant => {
            let k0 = 0.05 + 0.9 * u[5];
            let y = Vector::new(vec![y, -2.0 + 4.0 * u[6]])?;
            let xs = vec![x, -3.0 + 6.0 * u[7]];
            (Degradation::deblur(vec![k0, 1.0 - k0], sigma_y)?.observe(y)?, delta, xs)
        }
    })
}

/// Two-pixel circulant problems diagonalize in the basis `(1, ±1)/√2`, where
/// the prox splits into two scalar problems; each is solved on the grid using
/// only `f`'s values.
fn hadamard_grid_prox(fid: &Fidelity, delta: f64, x: &[f64], grid: &GridSpec) -> Result<Vec<f64>> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let rotate = |v: &[f64]| [h * (v[0] + v[1]), h * (v[0] - v[1])];
    let u0 = rotate(x);
    let mut u = u0;
    for i in 0..2 {
        u[i] = grid_prox(
            |t| {
                let mut w = u0;
                w[i] = t;
                fid.eval(&rotate(&w)).unwrap_or(f64::INFINITY)
            },
            delta,
            u0[i],
            grid,
        )?;
    }
    Ok(rotate(&u).to_vec())
}

/// Compares `prox` with a brute-force grid minimization on `cases` random
/// problems per fidelity kind: scalar problems, and two-pixel signals split
/// into scalar problems for the circulant kind.
pub fn prox_oracle_sweep(cases: usize, seed: u64, prox: &ProxFn<'_>) -> Result<ProxOracleReport> {
    let grid = OracleConfig::default().grid;
    let mut kinds = Vec::with_capacity(PROX_KINDS.len());
    for kind in PROX_KINDS {
        let mut max_error: f64 = 0.0;
        for i in 0..cases {
            let (fid, delta, x) = prox_case(kind, &grid, seed, i)?;
            let closed = prox(&fid, delta, &x)?;
            let oracle = if x.len() == 1 {
                vec![grid_prox(
                    |z| fid.eval(&[z]).unwrap_or(f64::INFINITY),
                    delta,
                    x[0],
                    &grid,
                )?]
            } else {
                hadamard_grid_prox(&fid, delta, &x, &grid)?
            };
            let err = closed
                .iter()
                .zip(&oracle)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            max_error = if err.is_nan() { f64::NAN } else { max_error.max(err) };
        }
        kinds.push(KindReport {
            kind,
            cases,
            max_error,
        });
    }
    let fid = Degradation::inpaint(vec![true], 1.0)?.observe(scalar(0.0))?;
    let reference_value = prox(&fid, 1.0, &[2.0])?[0];
    Ok(ProxOracleReport {
        kinds,
        reference_value,
        reference_error: (reference_value - 1.0).abs(),
    })
}

/// The shipped closed forms.
pub fn shipped_prox(fid: &Fidelity, delta: f64, x: &[f64]) -> snorelab_core::Result<Vec<f64>> {
    fid.prox(delta, x)
}

pub fn cmd_prox_oracle(cases: usize, seed: u64, log: &mut dyn Write) -> Result<i32> {
    let report = prox_oracle_sweep(cases, seed, &shipped_prox)?;
    let mut text = format!("snorelab version={} seed={seed}\n", crate::config::ARTIFACT_VERSION);
    for k in &report.kinds {
        text.push_str(&format!(
            "{:<18} cases={} max_error={:.3e}\n",
            k.kind.to_string(),
            k.cases,
            k.max_error
        ));
    }
    text.push_str(&format!(
        "reference case x=2 y=0 sigma_y=1 delta=1 → {} (error {:.3e})\n{} (tolerance {:e})\n",
        report.reference_value,
        report.reference_error,
        if report.passed() { "pass" } else { "FAIL" },
        PROX_TOLERANCE
    ));
    log.write_all(text.as_bytes()).map_err(io("<log>"))?;
    Ok(if report.passed() { 0 } else { 1 })
}

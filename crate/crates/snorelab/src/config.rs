//! Experiment configuration.
//!
//! Configs are JSON documents. Every field has a default, so
//! `{"method": "snore-prox", "problem": "denoise-quadratic"}` is a complete
//! config. Reals may be written as numbers or as `"p/q"` strings (`"8/255"`).
//! Unknown keys are rejected.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::de::{self, MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};
use snorelab_core::solvers::{Anneal, Telemetry};
use snorelab_core::{FidelityKind, Method, SolverConfig, StepSchedule};

use crate::error::{field, io, Error, Result};

/// Version stamped into every artifact.
pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    #[serde(with = "named")]
    pub method: Method,
    pub problem: ProblemConfig,
    pub solver: SolverSection,
    pub ensemble: EnsembleConfig,
    pub verify: VerifyConfig,
    pub outputs: OutputConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            method: Method::SnoreProx,
            problem: ProblemConfig::for_kind(FidelityKind::DenoiseQuadratic),
            solver: SolverSection::default(),
            ensemble: EnsembleConfig::default(),
            verify: VerifyConfig::default(),
            outputs: OutputConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProblemConfig {
    #[serde(with = "named")]
    pub kind: FidelityKind,
    pub height: usize,
    pub width: usize,
    pub sigma_y: f64,
    /// Fraction of missing pixels for randomly drawn inpainting masks.
    pub missing: f64,
    /// Mask file (one 0/1 per pixel); overrides `missing`.
    pub mask: Option<PathBuf>,
    /// Blur taps (centered, summing to one).
    pub kernel: Vec<f64>,
    pub prior: PriorConfig,
    pub truth: TruthSource,
    pub lipschitz_safety: f64,
    pub x0: InitKind,
}

impl ProblemConfig {
    /// Defaults for `kind`: a 1×4 vector for the quadratic denoising problem,
    /// a 32×32 image with the pattern prior for inpainting, a 1×64 signal for
    /// deblurring.
    pub fn for_kind(kind: FidelityKind) -> Self {
        let image_prior = PriorConfig {
            weights: Vec::new(),
            means: MeansSpec::Patterns,
            variances: vec![0.0025],
        };
        let (height, width, sigma_y, prior) = match kind {
            FidelityKind::DenoiseQuadratic => (1, 4, 0.1, PriorConfig::default()),
            FidelityKind::InpaintNoisy => (32, 32, 5.0 / 255.0, image_prior),
            FidelityKind::InpaintNoiseless => (32, 32, 0.0, image_prior),
            FidelityKind::DeblurCirculant => (1, 64, 0.05, PriorConfig::default()),
        };
        Self {
            kind,
            height,
            width,
            sigma_y,
            missing: 0.5,
            mask: None,
            kernel: vec![0.25, 0.5, 0.25],
            prior,
            truth: TruthSource::Prior,
            lipschitz_safety: snorelab_core::prior::DEFAULT_LIPSCHITZ_SAFETY,
            x0: InitKind::Observation,
        }
    }

    pub fn dim(&self) -> usize {
        self.height * self.width
    }
}

impl Default for ProblemConfig {
    fn default() -> Self {
        Self::for_kind(FidelityKind::DenoiseQuadratic)
    }
}

/// Object form of `problem`; absent fields fall back to the kind's defaults.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    #[serde(default, with = "named_opt")]
    kind: Option<FidelityKind>,
    height: Option<usize>,
    width: Option<usize>,
    sigma_y: Option<Real>,
    missing: Option<Real>,
    mask: Option<PathBuf>,
    kernel: Option<Vec<Real>>,
    prior: Option<PriorConfig>,
    truth: Option<TruthSource>,
    lipschitz_safety: Option<Real>,
    x0: Option<InitKind>,
}

impl From<RawProblem> for ProblemConfig {
    fn from(raw: RawProblem) -> Self {
        let mut p = Self::for_kind(raw.kind.unwrap_or(FidelityKind::DenoiseQuadratic));
        p.height = raw.height.unwrap_or(p.height);
        p.width = raw.width.unwrap_or(p.width);
        p.sigma_y = raw.sigma_y.map_or(p.sigma_y, |r| r.0);
        p.missing = raw.missing.map_or(p.missing, |r| r.0);
        p.mask = raw.mask;
        if let Some(k) = raw.kernel {
            p.kernel = k.into_iter().map(|r| r.0).collect();
        }
        p.prior = raw.prior.unwrap_or(p.prior);
        p.truth = raw.truth.unwrap_or(p.truth);
        p.lipschitz_safety = raw.lipschitz_safety.map_or(p.lipschitz_safety, |r| r.0);
        p.x0 = raw.x0.unwrap_or(p.x0);
        p
    }
}

impl<'de> Deserialize<'de> for ProblemConfig {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct ProblemVisitor;

        impl<'de> Visitor<'de> for ProblemVisitor {
            type Value = ProblemConfig;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a problem kind or a problem object")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Self::Value, E> {
                let kind = FidelityKind::from_str(v).map_err(E::custom)?;
                Ok(ProblemConfig::for_kind(kind))
            }

            fn visit_map<A: MapAccess<'de>>(self, map: A) -> std::result::Result<Self::Value, A::Error> {
                let raw = RawProblem::deserialize(de::value::MapAccessDeserializer::new(map))?;
                Ok(raw.into())
            }
        }

        d.deserialize_any(ProblemVisitor)
    }
}

/// Mixture prior: `weights` (uniform when empty), one mean per component and
/// one variance per component (or a single variance shared by all).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorConfig {
    #[serde(default, deserialize_with = "reals")]
    pub weights: Vec<f64>,
    pub means: MeansSpec,
    #[serde(deserialize_with = "reals")]
    pub variances: Vec<f64>,
}

impl Default for PriorConfig {
    fn default() -> Self {
        Self {
            weights: Vec::new(),
            means: MeansSpec::List(vec![MeanSpec::Constant(0.5)]),
            variances: vec![0.0625],
        }
    }
}

/// Component means: `"patterns"` selects the four built-in image patterns.
#[derive(Debug, Clone, PartialEq)]
pub enum MeansSpec {
    Patterns,
    List(Vec<MeanSpec>),
}

/// One mean: a scalar is broadcast to every pixel.
#[derive(Debug, Clone, PartialEq)]
pub enum MeanSpec {
    Constant(f64),
    Vector(Vec<f64>),
}

impl Serialize for MeansSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Self::Patterns => s.serialize_str("patterns"),
            Self::List(list) => list.serialize(s),
        }
    }
}

impl Serialize for MeanSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Self::Constant(v) => s.serialize_f64(*v),
            Self::Vector(v) => v.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for MeansSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Name(String),
            List(Vec<MeanSpec>),
        }
        match Repr::deserialize(d)? {
            Repr::Name(n) if n == "patterns" => Ok(Self::Patterns),
            Repr::Name(n) => Err(de::Error::custom(format!(
                "unknown means preset `{n}` (expected \"patterns\" or a list)"
            ))),
            Repr::List(l) => Ok(Self::List(l)),
        }
    }
}

impl<'de> Deserialize<'de> for MeanSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            One(Real),
            Many(Vec<Real>),
        }
        Ok(match Repr::deserialize(d)? {
            Repr::One(r) => Self::Constant(r.0),
            Repr::Many(v) => Self::Vector(v.into_iter().map(|r| r.0).collect()),
        })
    }
}

/// Where the ground truth comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum TruthSource {
    /// Sampled from the prior with the ensemble's base seed.
    Prior,
    /// 8-bit PGM scaled to [0, 1].
    Pgm(PathBuf),
    /// Raw-double sidecar file.
    Sidecar(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitKind {
    /// The observation, with unobserved pixels set to the observed mean.
    Observation,
    Zeros,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub schedule: ScheduleConfig,
    #[serde(deserialize_with = "real")]
    pub lambda: f64,
    #[serde(deserialize_with = "real")]
    pub sigma: f64,
    pub iters: usize,
    pub anneal: Option<AnnealConfig>,
    pub telemetry: TelemetryConfig,
    /// Recorded with the config and otherwise unused.
    pub n_init: Option<serde_json::Value>,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            schedule: ScheduleConfig::default(),
            lambda: 1.0,
            sigma: 0.1,
            iters: 500,
            anneal: None,
            telemetry: TelemetryConfig::default(),
            n_init: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleKind {
    Constant,
    PowerDecay,
}

/// `δ_k = c` or `δ_k = c/(k+1)^α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleConfig {
    pub kind: ScheduleKind,
    #[serde(deserialize_with = "real")]
    pub c: f64,
    #[serde(deserialize_with = "real")]
    pub alpha: f64,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            kind: ScheduleKind::Constant,
            c: 0.0025,
            alpha: 0.75,
        }
    }
}

impl ScheduleConfig {
    pub fn schedule(&self) -> Result<StepSchedule> {
        let s = match self.kind {
            ScheduleKind::Constant => StepSchedule::constant(self.c),
            ScheduleKind::PowerDecay => StepSchedule::power_decay(self.c, self.alpha),
        };
        s.map_err(|e| match e {
            snorelab_core::Error::InvalidParameter { name, reason } => {
                let name = name.strip_prefix("schedule.").unwrap_or(name);
                field(format!("solver.schedule.{name}"), reason)
            }
            other => other.into(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnnealConfig {
    pub stages: usize,
    #[serde(deserialize_with = "real")]
    pub lambda_start: f64,
    #[serde(deserialize_with = "real")]
    pub lambda_end: f64,
    #[serde(deserialize_with = "real")]
    pub sigma_start: f64,
    #[serde(deserialize_with = "real")]
    pub sigma_end: f64,
}

impl Default for AnnealConfig {
    fn default() -> Self {
        Self {
            stages: 10,
            lambda_start: 0.15,
            lambda_end: 0.5,
            sigma_start: 50.0 / 255.0,
            sigma_end: 5.0 / 255.0,
        }
    }
}

impl From<AnnealConfig> for Anneal {
    fn from(a: AnnealConfig) -> Self {
        Anneal {
            stages: a.stages,
            lambda_start: a.lambda_start,
            lambda_end: a.lambda_end,
            sigma_start: a.sigma_start,
            sigma_end: a.sigma_end,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TelemetryConfig {
    pub grad_samples: usize,
    pub record_every: usize,
}

impl Default for TelemetryConfig {
    fn default() -> Self {
        let t = Telemetry::default();
        Self {
            grad_samples: t.grad_samples,
            record_every: t.record_every,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleConfig {
    pub n_seeds: usize,
    pub base_seed: u64,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            n_seeds: 1,
            base_seed: 0,
        }
    }
}

/// Settings of the certification suite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    pub seeds: usize,
    /// Exponent of the decreasing ensemble. Certification runs `solver.schedule.c`
    /// both as a constant step and as `c/(k+1)^alpha`, whatever the schedule kind.
    #[serde(deserialize_with = "real")]
    pub alpha: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            seeds: 64,
            alpha: 0.75,
        }
    }
}

/// Artifact paths, relative to the output directory unless absolute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub trace: PathBuf,
    pub image: PathBuf,
    pub report: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            trace: "trace.csv".into(),
            image: "final.pgm".into(),
            report: "report.csv".into(),
        }
    }
}

impl ExperimentConfig {
    /// A default config for `method` on `kind`.
    pub fn minimal(method: Method, kind: FidelityKind) -> Self {
        Self {
            method,
            problem: ProblemConfig::for_kind(kind),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.problem;
        if p.height == 0 || p.width == 0 {
            return Err(field("problem.height", "image sides must be positive"));
        }
        let noiseless = p.kind == FidelityKind::InpaintNoiseless;
        if noiseless && p.sigma_y != 0.0 {
            return Err(field("problem.sigma_y", "must be 0 for inpaint-noiseless"));
        }
        if !noiseless && !(p.sigma_y > 0.0 && p.sigma_y.is_finite()) {
            return Err(field("problem.sigma_y", "must be positive"));
        }
        if !(0.0..1.0).contains(&p.missing) {
            return Err(field("problem.missing", "must lie in [0, 1)"));
        }
        if p.kind == FidelityKind::DeblurCirculant {
            if p.kernel.is_empty() || p.kernel.len() > p.dim() {
                return Err(field("problem.kernel", "need 1 ≤ taps ≤ d"));
            }
            if (p.kernel.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                return Err(field("problem.kernel", "taps must sum to 1"));
            }
        }
        if !(p.lipschitz_safety >= 1.0 && p.lipschitz_safety.is_finite()) {
            return Err(field("problem.lipschitz_safety", "must be ≥ 1"));
        }
        self.validate_prior()?;

        let s = &self.solver;
        s.schedule.schedule()?;
        if !(s.lambda >= 0.0 && s.lambda.is_finite()) {
            return Err(field("solver.lambda", "must be finite and non-negative"));
        }
        if !(s.sigma > 0.0 && s.sigma.is_finite()) {
            return Err(field("solver.sigma", "must be positive"));
        }
        if s.telemetry.grad_samples < 2 {
            return Err(field("solver.telemetry.grad_samples", "must be at least 2"));
        }
        if s.telemetry.record_every == 0 {
            return Err(field("solver.telemetry.record_every", "must be at least 1"));
        }
        if let Some(a) = &s.anneal {
            if a.stages == 0 || a.stages > s.iters.max(1) {
                return Err(field("solver.anneal.stages", "need 1 ≤ stages ≤ iters"));
            }
            if !(a.sigma_end > 0.0 && a.sigma_start >= a.sigma_end && a.sigma_start.is_finite()) {
                return Err(field(
                    "solver.anneal.sigma_start",
                    "need sigma_start ≥ sigma_end > 0",
                ));
            }
            if !(a.lambda_start > 0.0
                && a.lambda_end >= a.lambda_start
                && a.lambda_end.is_finite())
            {
                return Err(field(
                    "solver.anneal.lambda_start",
                    "need 0 < lambda_start ≤ lambda_end",
                ));
            }
        }
        if self.ensemble.n_seeds == 0 {
            return Err(field("ensemble.n_seeds", "must be at least 1"));
        }
        if self.verify.seeds < 2 {
            return Err(field("verify.seeds", "need at least two seeds"));
        }
        if !(self.verify.alpha > 0.5 && self.verify.alpha < 1.0) {
            return Err(field("verify.alpha", "must lie in (1/2, 1)"));
        }
        Ok(())
    }

    fn validate_prior(&self) -> Result<()> {
        let p = &self.problem;
        let prior = &p.prior;
        let k = match &prior.means {
            MeansSpec::Patterns => crate::problem::PATTERN_COUNT,
            MeansSpec::List(l) => l.len(),
        };
        if k == 0 {
            return Err(field("problem.prior.means", "need at least one component"));
        }
        if let MeansSpec::List(list) = &prior.means {
            for m in list {
                if let MeanSpec::Vector(v) = m {
                    if v.len() != p.dim() {
                        return Err(field(
                            "problem.prior.means",
                            format!("mean has {} entries, image has {}", v.len(), p.dim()),
                        ));
                    }
                }
                if m.values().any(|x| !x.is_finite()) {
                    return Err(field("problem.prior.means", "entries must be finite"));
                }
            }
        }
        if !prior.weights.is_empty() && prior.weights.len() != k {
            return Err(field(
                "problem.prior.weights",
                format!("{} weights for {k} components", prior.weights.len()),
            ));
        }
        if prior.weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(field("problem.prior.weights", "must be positive"));
        }
        if prior.variances.len() != 1 && prior.variances.len() != k {
            return Err(field(
                "problem.prior.variances",
                format!("need 1 or {k} variances, got {}", prior.variances.len()),
            ));
        }
        if prior.variances.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(field("problem.prior.variances", "must be positive"));
        }
        Ok(())
    }

    /// Core solver configuration for one member of the ensemble.
    pub fn solver_config(&self, seed: u64) -> Result<SolverConfig> {
        let s = &self.solver;
        let mut cfg = SolverConfig::new(self.method, s.schedule.schedule()?, s.lambda, s.sigma, s.iters)
            .with_seed(seed)
            .with_telemetry(Telemetry {
                grad_samples: s.telemetry.grad_samples,
                record_every: s.telemetry.record_every,
            });
        if let Some(a) = s.anneal {
            cfg = cfg.with_anneal(a.into());
        }
        Ok(cfg)
    }

    /// Seeds of the ensemble: `base_seed, base_seed + 1, …`.
    pub fn seeds(&self, n: usize) -> Vec<u64> {
        (0..n as u64)
            .map(|i| self.ensemble.base_seed.wrapping_add(i))
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 of the compact canonical JSON, hex encoded.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(canonical.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

impl MeanSpec {
    fn values(&self) -> impl Iterator<Item = &f64> {
        match self {
            Self::Constant(v) => std::slice::from_ref(v).iter(),
            Self::Vector(v) => v.iter(),
        }
    }
}

pub fn parse_config_str(text: &str) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(io(path))?;
    parse_config_str(&text)
}

/// A real written as a JSON number or a `"p/q"` / decimal string.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Real(f64);

impl FromStr for Real {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        let value = match s.split_once('/') {
            Some((p, q)) => {
                let p: f64 = p.trim().parse().map_err(|_| format!("bad numerator in `{s}`"))?;
                let q: f64 = q.trim().parse().map_err(|_| format!("bad denominator in `{s}`"))?;
                if q == 0.0 {
                    return Err(format!("zero denominator in `{s}`"));
                }
                p / q
            }
            None => s.parse().map_err(|_| format!("`{s}` is not a number"))?,
        };
        if !value.is_finite() {
            return Err(format!("`{s}` is not finite"));
        }
        Ok(Real(value))
    }
}

impl<'de> Deserialize<'de> for Real {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct RealVisitor;

        impl Visitor<'_> for RealVisitor {
            type Value = Real;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or a \"p/q\" string")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Real, E> {
                Ok(Real(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Real, E> {
                Ok(Real(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Real, E> {
                Ok(Real(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Real, E> {
                v.parse().map_err(E::custom)
            }
        }

        d.deserialize_any(RealVisitor)
    }
}

fn real<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Real::deserialize(d).map(|r| r.0)
}

fn reals<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
    Vec::<Real>::deserialize(d).map(|v| v.into_iter().map(|r| r.0).collect())
}

/// Serde through `Display`/`FromStr` (methods and fidelity kinds).
mod named {
    use std::fmt::Display;
    use std::str::FromStr;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<T: Display, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(v)
    }

    pub fn deserialize<'de, T, D>(d: D) -> Result<T, D::Error>
    where
        T: FromStr,
        T::Err: Display,
        D: Deserializer<'de>,
    {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

mod named_opt {
    use std::fmt::Display;
    use std::str::FromStr;

    use serde::{Deserialize, Deserializer};

    pub fn deserialize<'de, T, D>(d: D) -> Result<Option<T>, D::Error>
    where
        T: FromStr,
        T::Err: Display,
        D: Deserializer<'de>,
    {
        Option::<String>::deserialize(d)?
            .map(|s| s.parse().map_err(serde::de::Error::custom))
            .transpose()
    }
}

//! Experiment orchestration: configuration, per-run pipeline, ground-truth
//! projection and report assembly.

mod metrics;
mod report;
pub mod svg;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dynamics::{generate_trajectory, DynError, SolverConfig, TrajectoryGrid};
use crate::expr::{Binding, Expr, ExprError, JetSpace, ParseContext};
use crate::invariants::{builtin_set, verify_set, InvariantError, InvariantSet, VerifyOptions};
use crate::jetgrid::{evaluate_features, finite_differences, FeatureMatrix, JetError, JetGrid, Stride};
use crate::liealg::{prolong, JetSampler, LieError, ProlongedVectorField, SampleOptions, VectorField};
use crate::regress::{
    build_library, stlsq, stlsq_regularized, LibraryMode, LibrarySpec, RegressError, SparseModel,
    SymmetryRows,
};
use crate::seed::derive_seed;
use crate::system::SystemId;

pub use metrics::{
    aggregate, error_norm, integration_config, long_term_mse, rmse, success, Aggregates,
    LongTermSeries,
};
pub use report::{read_runs_csv, render_report, DiscoveryReport, RunRecord};

/// Environment variable holding the worker-pool size.
pub const WORKERS_ENV: &str = "DISINDY_WORKERS";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error("ground truth is not expressible in the feature library: {0}")]
    Truth(String),
    #[error("invariant set failed verification:\n{0}")]
    Verification(String),
    #[error("{path}: {msg}")]
    Io { path: String, msg: String },
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Lie(#[from] LieError),
    #[error(transparent)]
    Invariant(#[from] InvariantError),
    #[error(transparent)]
    Dyn(#[from] DynError),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Regress(#[from] RegressError),
}

pub(crate) fn io_err(path: &std::path::Path, e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Io {
        path: path.display().to_string(),
        msg: e.to_string(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Sindy,
    EquivR,
    DiSindy,
}

impl Method {
    pub fn label(self, lambda: Option<f64>) -> String {
        match self {
            Method::Sindy => "SINDy".into(),
            Method::EquivR => format!("EquivSINDy-r (lambda={})", lambda.unwrap_or(0.0)),
            Method::DiSindy => "DI-SINDy".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LibraryConfig {
    pub mode: LibraryMode,
    pub inputs: Vec<String>,
    #[serde(default)]
    pub include_constant: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvariantConfig {
    pub etas: Vec<String>,
    pub lhs: Option<usize>,
    /// Accept numerically-zero invariance with a warning.
    #[serde(default)]
    pub allow_numeric: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorConfig {
    #[serde(default)]
    pub label: String,
    #[serde(default)]
    pub xi: BTreeMap<String, String>,
    #[serde(default)]
    pub phi: BTreeMap<String, String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrideConfig {
    pub t: usize,
    pub x: usize,
}

/// Everything a batch of runs depends on. Keys mirror the TOML file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemId,
    pub method: Method,
    /// Regularization weight, required for `equiv-r`.
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default)]
    pub threshold: Option<f64>,
    #[serde(default = "default_iters")]
    pub max_iters: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_ics")]
    pub train_ics: usize,
    #[serde(default = "default_ics")]
    pub test_ics: usize,
    /// Steps of long-term prediction; 0 skips it.
    #[serde(default)]
    pub long_term_steps: usize,
    #[serde(default)]
    pub solver: Option<SolverConfig>,
    #[serde(default)]
    pub library: Option<LibraryConfig>,
    #[serde(default)]
    pub stride: Option<StrideConfig>,
    #[serde(default)]
    pub invariants: Option<InvariantConfig>,
    #[serde(default)]
    pub generators: Option<Vec<GeneratorConfig>>,
    #[serde(default)]
    pub output_dir: Option<String>,
}

fn default_runs() -> usize {
    10
}
fn default_iters() -> usize {
    crate::regress::DEFAULT_MAX_ITERS
}
fn default_ics() -> usize {
    4
}

impl ExperimentConfig {
    pub fn new(system: SystemId, method: Method) -> Self {
        ExperimentConfig {
            system,
            method,
            lambda: None,
            runs: default_runs(),
            noise_sigma: 0.0,
            threshold: None,
            max_iters: default_iters(),
            seed: 0,
            train_ics: default_ics(),
            test_ics: default_ics(),
            long_term_steps: 0,
            solver: None,
            library: None,
            stride: None,
            invariants: None,
            generators: None,
            output_dir: None,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn load(path: &std::path::Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        Self::from_toml(&text)
    }

    /// SHA-256 of the canonical TOML rendering.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::Config(m.to_string()));
        if self.runs == 0 {
            return bad("runs must be at least 1");
        }
        if self.train_ics == 0 {
            return bad("train_ics must be at least 1");
        }
        if self.system == SystemId::So2Demo {
            return bad("so2-demo has no dynamics to discover");
        }
        match (self.method, self.lambda) {
            (Method::EquivR, None) => return bad("method equiv-r needs lambda"),
            (Method::EquivR, Some(l)) if !(l >= 0.0) => return bad("lambda must be non-negative"),
            _ => {}
        }
        if let Some(t) = self.threshold {
            if !(t > 0.0) {
                return bad("threshold must be positive");
            }
        }
        self.solver_config().validate(self.system)?;
        Ok(())
    }

    pub fn solver_config(&self) -> SolverConfig {
        self.solver.clone().unwrap_or_else(|| SolverConfig::default_for(self.system))
    }

    pub fn threshold(&self) -> f64 {
        self.threshold.unwrap_or_else(|| self.system.default_threshold())
    }

    pub fn stride(&self) -> Stride {
        self.stride.map_or(Stride::default(), |s| Stride { t: s.t, x: s.x })
    }

    pub fn constants(&self) -> Binding {
        crate::invariants::constants_binding(&self.solver_config().params)
    }

    pub fn run_seed(&self, run: usize) -> u64 {
        derive_seed(self.seed, run as u64)
    }

    /// Seeds of the training initial conditions and their noise for `run`.
    pub fn train_seeds(&self, run: usize) -> (Vec<u64>, Vec<u64>) {
        let s = self.run_seed(run);
        (
            (0..self.train_ics).map(|k| derive_seed(s, k as u64)).collect(),
            (0..self.train_ics).map(|k| derive_seed(s, 1000 + k as u64)).collect(),
        )
    }

    /// Test initial conditions are shared by all runs.
    pub fn test_seeds(&self) -> Vec<u64> {
        let s = derive_seed(self.seed, u64::MAX);
        (0..self.test_ics).map(|k| derive_seed(s, k as u64)).collect()
    }

    pub fn generators(&self) -> Result<Vec<VectorField>, HarnessError> {
        let Some(gs) = &self.generators else {
            return Ok(self.system.generators());
        };
        let ctx = ParseContext::from(&self.system.jet_space());
        gs.iter()
            .enumerate()
            .map(|(i, g)| {
                let one_char = |k: &String| {
                    let mut c = k.chars();
                    match (c.next(), c.next()) {
                        (Some(ch), None) => Ok(ch),
                        _ => Err(HarnessError::Config(format!("xi key `{k}` must be one variable"))),
                    }
                };
                let xi = g
                    .xi
                    .iter()
                    .map(|(k, v)| Ok((one_char(k)?, ctx.parse(v)?)))
                    .collect::<Result<Vec<_>, HarnessError>>()?;
                let phi = g
                    .phi
                    .iter()
                    .map(|(k, v)| Ok((k.as_str(), ctx.parse(v)?)))
                    .collect::<Result<Vec<_>, HarnessError>>()?;
                let label = if g.label.is_empty() { format!("v{}", i + 1) } else { g.label.clone() };
                Ok(VectorField::new(xi, phi).named(&label))
            })
            .collect()
    }

    /// Invariant set for DI-SINDy: the catalog entry, or a user set that
    /// passes the same verification.
    pub fn invariant_set(&self) -> Result<InvariantSet, HarnessError> {
        let Some(ic) = &self.invariants else {
            if self.generators.is_some() {
                return Err(HarnessError::Config(
                    "custom generators need a custom invariant set".into(),
                ));
            }
            return Ok(builtin_set(self.system)?.clone());
        };
        let space = self.system.jet_space();
        let ctx = ParseContext::from(&space);
        let etas = ic.etas.iter().map(|s| ctx.parse(s)).collect::<Result<Vec<_>, _>>()?;
        let set = InvariantSet::new(&self.system.to_string(), space, self.generators()?, etas, ic.lhs)?;
        let mut opts = VerifyOptions {
            strict: !ic.allow_numeric,
            ..VerifyOptions::default()
        };
        opts.sampling.constants = self.constants();
        let report = verify_set(&set, 200, self.seed, &opts);
        if !report.pass {
            return Err(HarnessError::Verification(report.summary()));
        }
        Ok(set)
    }
}

/// Resolved per-batch state shared by all runs.
pub struct Plan {
    pub config: ExperimentConfig,
    pub solver: SolverConfig,
    pub target: Expr,
    pub features: Vec<Expr>,
    pub truth: SparseModel,
    pub prolonged: Vec<ProlongedVectorField>,
    pub constants: Binding,
    /// Ground-truth skeleton on raw derivatives restricted to its support,
    /// refit per run as the finite-difference reference model.
    pub reference: (Expr, Vec<Expr>),
    pub include_constant: bool,
}

fn baseline_library(system: SystemId, include_constant: bool) -> Result<Vec<Expr>, RegressError> {
    build_library(&LibrarySpec {
        mode: LibraryMode::Poly2,
        inputs: system.baseline_inputs(),
        include_constant,
    })
}

impl Plan {
    pub fn new(config: &ExperimentConfig) -> Result<Self, HarnessError> {
        config.validate()?;
        let system = config.system;
        let constants = config.constants();
        let ctx = ParseContext::from(&system.jet_space());
        let (target, features, include_constant) = match config.method {
            Method::DiSindy => {
                let set = config.invariant_set()?;
                let target = set.lhs_expr().expect("evolution space").clone();
                let (mode, inputs, konst) = match &config.library {
                    Some(l) => (
                        l.mode,
                        l.inputs.iter().map(|s| ctx.parse(s)).collect::<Result<Vec<_>, _>>()?,
                        l.include_constant,
                    ),
                    None => (LibraryMode::Linear, set.features(), false),
                };
                let feats = build_library(&LibrarySpec { mode, inputs, include_constant: konst })?;
                for f in &feats {
                    if !set.etas.iter().any(|e| e == f) && f.as_const().is_none() {
                        verify_feature(f, &set, &constants)?;
                    }
                }
                (target, feats, konst)
            }
            Method::Sindy | Method::EquivR => {
                let target = system.baseline_target().simplify();
                let (feats, konst) = match &config.library {
                    Some(l) => (
                        build_library(&LibrarySpec {
                            mode: l.mode,
                            inputs: l.inputs.iter().map(|s| ctx.parse(s)).collect::<Result<Vec<_>, _>>()?,
                            include_constant: l.include_constant,
                        })?,
                        l.include_constant,
                    ),
                    None => (baseline_library(system, false)?, false),
                };
                (target, feats, konst)
            }
        };
        let f_truth = system.equation().expect("checked by validate");
        let w = project_truth(&f_truth, &target, &features, &constants, config.seed)?;
        let mut truth = SparseModel::empty(target.clone(), features.clone(), config.threshold());
        truth.mask = w.iter().map(|c| *c != 0.0).collect();
        truth.coefficients = w;

        let space = system.jet_space();
        let prolonged = config
            .generators()?
            .iter()
            .map(|g| prolong(g, &space))
            .collect::<Result<Vec<_>, _>>()?;

        let base_target = system.baseline_target().simplify();
        let base_feats = baseline_library(system, false)?;
        let wb = project_truth(&f_truth, &base_target, &base_feats, &constants, config.seed)?;
        let support: Vec<Expr> = base_feats
            .iter()
            .zip(&wb)
            .filter(|(_, c)| **c != 0.0)
            .map(|(f, _)| f.clone())
            .collect();

        Ok(Plan {
            config: config.clone(),
            solver: config.solver_config(),
            target,
            features,
            truth,
            prolonged,
            constants,
            reference: (base_target, support),
            include_constant,
        })
    }

    pub fn training_data(&self, run: usize) -> Result<Vec<TrajectoryGrid>, HarnessError> {
        let (ics, noises) = self.config.train_seeds(run);
        ics.iter()
            .zip(&noises)
            .map(|(&ic, &ns)| {
                generate_trajectory(self.config.system, &self.solver, ic, self.config.noise_sigma, ns)
                    .map_err(HarnessError::from)
            })
            .collect()
    }

    pub fn test_data(&self) -> Result<Vec<TrajectoryGrid>, HarnessError> {
        self.config
            .test_seeds()
            .iter()
            .map(|&s| generate_trajectory(self.config.system, &self.solver, s, 0.0, 0).map_err(HarnessError::from))
            .collect()
    }

    fn features_on(&self, jets: &[JetGrid], target: &Expr, feats: &[Expr]) -> Result<FeatureMatrix, HarnessError> {
        let stride = self.config.stride();
        let parts = jets
            .iter()
            .enumerate()
            .map(|(k, j)| evaluate_features(j, feats, target, &self.constants, stride, k))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(FeatureMatrix::stack(parts)?)
    }

    /// Regress on already prolonged data.
    pub fn discover(&self, jets: &[JetGrid]) -> Result<SparseModel, HarnessError> {
        let fm = self.features_on(jets, &self.target, &self.features)?;
        let thr = self.config.threshold();
        let iters = self.config.max_iters;
        let model = match self.config.method {
            Method::Sindy | Method::DiSindy => stlsq(&fm, thr, iters)?,
            Method::EquivR => {
                let reg = SymmetryRows::build(
                    &self.prolonged,
                    &self.target,
                    &self.features,
                    jets,
                    &self.constants,
                    self.config.stride(),
                )?;
                stlsq_regularized(&fm, &reg, self.config.lambda.unwrap_or(0.0), thr, iters)?
            }
        };
        Ok(model)
    }

    /// Least-squares fit of the true equation's terms on the same data.
    pub fn reference_model(&self, jets: &[JetGrid]) -> Result<SparseModel, HarnessError> {
        let (target, support) = &self.reference;
        let fm = self.features_on(jets, target, support)?;
        Ok(stlsq(&fm, f64::MIN_POSITIVE, 1)?)
    }

    fn run_once(&self, run: usize, tests: &[TrajectoryGrid]) -> RunRecord {
        let (ic_seeds, noise_seeds) = self.config.train_seeds(run);
        let mut rec = RunRecord {
            index: run,
            seed: self.config.run_seed(run),
            ic_seeds,
            noise_seeds,
            model: None,
            success: false,
            error_norm: None,
            failure: None,
            long_term: None,
            reference_long_term: None,
        };
        let outcome = (|| -> Result<(), HarnessError> {
            let data = self.training_data(run)?;
            let jets = data
                .iter()
                .map(|d| finite_differences(d, 4))
                .collect::<Result<Vec<_>, _>>()?;
            let model = self.discover(&jets)?;
            rec.success = success(&model, &self.truth);
            rec.error_norm = Some(error_norm(&model, &self.truth));
            let steps = self.config.long_term_steps;
            if steps > 0 {
                rec.long_term = Some(long_term_mse(&model, tests, steps, &self.constants));
                let reference = self.reference_model(&jets)?;
                rec.reference_long_term = Some(long_term_mse(&reference, tests, steps, &self.constants));
            }
            rec.model = Some(model);
            Ok(())
        })();
        if let Err(e) = outcome {
            rec.failure = Some(e.to_string());
        }
        rec
    }
}

fn verify_feature(f: &Expr, set: &InvariantSet, constants: &Binding) -> Result<(), HarnessError> {
    let mut opts = SampleOptions::default();
    opts.constants = constants.clone();
    for g in &set.generators {
        let pv = prolong(g, &set.space)?;
        let r = crate::liealg::check_invariant(&pv, f, 50, 0, &opts)?;
        if !r.symbolic_zero {
            return Err(HarnessError::Config(format!(
                "DI-SINDy feature `{f}` is not invariant under {}",
                g.label
            )));
        }
    }
    Ok(())
}

/// Coefficients `W*` with `target − F_truth = Σ W*_j features_j`, found by
/// least squares at random jet points and checked to fit exactly.
pub fn project_truth(
    f_truth: &Expr,
    target: &Expr,
    features: &[Expr],
    constants: &Binding,
    seed: u64,
) -> Result<Vec<f64>, HarnessError> {
    let rhs = (target.clone() - f_truth.clone()).simplify();
    let mut exprs: Vec<&Expr> = features.iter().collect();
    exprs.push(&rhs);
    let opts = SampleOptions {
        constants: constants.clone(),
        ..SampleOptions::default()
    };
    let sampler = JetSampler::new(&exprs, opts, derive_seed(seed, 0x7257));
    let m = features.len();
    let n = 3 * m + 10;
    let mut a = nalgebra::DMatrix::<f64>::zeros(n, m);
    let mut y = nalgebra::DVector::<f64>::zeros(n);
    for r in 0..n {
        let (b, _) = sampler
            .admissible(r, &exprs)
            .map_err(|p| HarnessError::Truth(format!("no admissible sample near {p}")))?;
        for (j, f) in features.iter().enumerate() {
            a[(r, j)] = f.evaluate(&b)?;
        }
        y[r] = rhs.evaluate(&b)?;
    }
    let w = a
        .clone()
        .svd(true, true)
        .solve(&y, 1e-12)
        .map_err(|e| HarnessError::Truth(e.to_string()))?;
    let resid = (&a * &w - &y).amax();
    let scale = 1.0 + y.amax();
    if resid > 1e-8 * scale {
        return Err(HarnessError::Truth(format!(
            "`{rhs}` leaves residual {resid:.3e} on the library"
        )));
    }
    // Snap least-squares round-off onto a 1e-9 grid.
    Ok(w.iter().map(|c| (c * 1e9).round() / 1e9).map(|c| if c == 0.0 { 0.0 } else { c }).collect())
}

/// Rayon pool sized by [`WORKERS_ENV`], or the default pool size.
pub fn worker_pool() -> rayon::ThreadPool {
    let n = std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .unwrap_or(0);
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .expect("thread pool")
}

/// Run every configured run and assemble the report.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<DiscoveryReport, HarnessError> {
    run_experiment_on(cfg, &worker_pool())
}

/// [`run_experiment`] on a caller-supplied pool. Results do not depend on
/// the pool size.
pub fn run_experiment_on(cfg: &ExperimentConfig, pool: &rayon::ThreadPool) -> Result<DiscoveryReport, HarnessError> {
    let plan = Plan::new(cfg)?;
    let tests = if cfg.long_term_steps > 0 { plan.test_data()? } else { Vec::new() };
    let runs: Vec<RunRecord> = pool.install(|| {
        (0..cfg.runs)
            .into_par_iter()
            .map(|r| plan.run_once(r, &tests))
            .collect()
    });
    Ok(DiscoveryReport::new(&plan, runs))
}

/// Discover from a stored dataset instead of generated data.
pub fn discover_from_dataset(
    cfg: &ExperimentConfig,
    data: &crate::dynamics::Dataset,
) -> Result<DiscoveryReport, HarnessError> {
    if data.manifest.system != cfg.system {
        return Err(HarnessError::Config(format!(
            "dataset holds {} but the config names {}",
            data.manifest.system, cfg.system
        )));
    }
    let mut cfg = cfg.clone();
    cfg.solver = Some(data.manifest.solver.clone());
    cfg.runs = 1;
    cfg.long_term_steps = 0;
    let plan = Plan::new(&cfg)?;
    let mut rec = RunRecord {
        index: 0,
        seed: cfg.run_seed(0),
        ic_seeds: data.manifest.ic_seeds.clone(),
        noise_seeds: data.manifest.noise_seeds.clone(),
        model: None,
        success: false,
        error_norm: None,
        failure: None,
        long_term: None,
        reference_long_term: None,
    };
    let jets = data
        .trajectories
        .iter()
        .map(|d| finite_differences(d, 4))
        .collect::<Result<Vec<_>, _>>()?;
    match plan.discover(&jets) {
        Ok(m) => {
            rec.success = success(&m, &plan.truth);
            rec.error_norm = Some(error_norm(&m, &plan.truth));
            rec.model = Some(m);
        }
        Err(e) => rec.failure = Some(e.to_string()),
    }
    Ok(DiscoveryReport::new(&plan, vec![rec]))
}

/// Jet space coordinates used by the built-in systems.
pub fn default_space() -> JetSpace {
    JetSpace::evolution_1d(4)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truth_projection() {
        let b = Binding::new().with_named("nu", 0.1).with_named("t0", 1.0);
        let kdv = SystemId::Kdv;
        let set = builtin_set(kdv).unwrap();
        let w = project_truth(&kdv.equation().unwrap(), set.lhs_expr().unwrap(), &set.features(), &b, 1).unwrap();
        assert_eq!(w, vec![0.0, 0.0, -1.0, 0.0]);
        let feats = baseline_library(SystemId::Burgers, false).unwrap();
        let w = project_truth(&SystemId::Burgers.equation().unwrap(), &Expr::parse("u_t").unwrap(), &feats, &b, 1)
            .unwrap();
        let active: Vec<(String, f64)> = feats
            .iter()
            .zip(&w)
            .filter(|(_, c)| **c != 0.0)
            .map(|(f, c)| (f.to_string(), *c))
            .collect();
        assert_eq!(active.len(), 2);
        assert!(active.iter().any(|(f, c)| f == "u_xx" && (c - 0.1).abs() < 1e-12));
        assert!(active.iter().any(|(f, c)| f == "u*u_x" && (c + 1.0).abs() < 1e-12));
        let err = project_truth(&SystemId::Kdv.equation().unwrap(), &Expr::parse("u_t").unwrap(), &feats[..3], &b, 1);
        assert!(matches!(err, Err(HarnessError::Truth(_))));
    }

    #[test]
    fn config_round_trip_and_validation() {
        let mut cfg = ExperimentConfig::new(SystemId::Burgers, Method::EquivR);
        cfg.lambda = Some(0.01);
        cfg.stride = Some(StrideConfig { t: 2, x: 1 });
        let text = cfg.to_toml();
        assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), cfg);
        cfg.lambda = None;
        assert!(cfg.validate().is_err());
        assert!(ExperimentConfig::from_toml("system = \"kdv\"\nmethod = \"di-sindy\"\nbogus = 1\n").is_err());
    }

    #[test]
    fn seeds_are_distinct_per_run() {
        let cfg = ExperimentConfig::new(SystemId::Kdv, Method::DiSindy);
        let (a, _) = cfg.train_seeds(0);
        let (b, _) = cfg.train_seeds(1);
        assert_ne!(a, b);
        assert!(cfg.test_seeds().iter().all(|s| !a.contains(s)));
    }
}

//! Differential-invariant sets: the built-in catalog, translation
//! elimination and verification of invariance and functional independence.

use std::sync::OnceLock;

use nalgebra::DMatrix;
use rayon::prelude::*;
use thiserror::Error;

use crate::expr::{Binding, Expr, JetSpace, JetVariable, Symbol};
use crate::liealg::{
    check_invariant, prolong, InvarianceReport, JetSampler, LieError, SampleOptions, VectorField,
};
use crate::system::SystemId;

/// Numeric `|pr v[η]|` accepted as zero.
pub const NUMERIC_TOL: f64 = 1e-9;
/// Smallest singular value of the Jacobian counted as full rank.
pub const SINGULAR_FLOOR: f64 = 1e-8;
/// Fraction of sample points that must have full-rank Jacobians.
pub const RANK_FRACTION: f64 = 0.99;

#[derive(Debug, Error)]
pub enum InvariantError {
    #[error("no invariant contains `u_t`; the evolution invariant is required")]
    NoEvolutionInvariant,
    #[error("invariants {0:?} all contain `u_t`; the evolution invariant must be unique")]
    AmbiguousEvolution(Vec<usize>),
    #[error("lhs marker {given} does not point at the evolution invariant (index {found})")]
    LhsMismatch { given: usize, found: usize },
    #[error("invariant set is empty")]
    Empty,
    #[error("built-in set for {system} failed verification:\n{summary}")]
    Catalog { system: SystemId, summary: String },
    #[error(transparent)]
    Lie(#[from] LieError),
}

#[derive(Clone, Debug)]
pub struct InvariantSet {
    pub system: String,
    pub space: JetSpace,
    pub generators: Vec<VectorField>,
    pub etas: Vec<Expr>,
    /// Index of the evolution invariant; `None` outside evolution spaces.
    pub lhs: Option<usize>,
}

impl InvariantSet {
    /// Assemble a set, designating the unique `u_t`-bearing invariant as the
    /// regression target. An explicit `lhs` must agree with that rule.
    pub fn new(
        system: &str,
        space: JetSpace,
        generators: Vec<VectorField>,
        etas: Vec<Expr>,
        lhs: Option<usize>,
    ) -> Result<Self, InvariantError> {
        if etas.is_empty() {
            return Err(InvariantError::Empty);
        }
        let etas: Vec<Expr> = etas.into_iter().map(|e| e.simplify()).collect();
        let lhs = match space.evolution {
            None => lhs,
            Some(t) => {
                let ut = JetVariable::dependent(&space.dependents[0], crate::expr::MultiIndex::new(vec![t]));
                let with_ut: Vec<usize> = etas
                    .iter()
                    .enumerate()
                    .filter(|(_, e)| e.contains(&ut))
                    .map(|(i, _)| i)
                    .collect();
                let found = match with_ut.as_slice() {
                    [] => return Err(InvariantError::NoEvolutionInvariant),
                    [i] => *i,
                    _ => return Err(InvariantError::AmbiguousEvolution(with_ut)),
                };
                if let Some(given) = lhs {
                    if given != found {
                        return Err(InvariantError::LhsMismatch { given, found });
                    }
                }
                Some(found)
            }
        };
        Ok(InvariantSet {
            system: system.to_string(),
            space,
            generators,
            etas,
            lhs,
        })
    }

    pub fn lhs_expr(&self) -> Option<&Expr> {
        self.lhs.map(|i| &self.etas[i])
    }

    /// The invariants other than the evolution invariant, in order.
    pub fn features(&self) -> Vec<Expr> {
        self.etas
            .iter()
            .enumerate()
            .filter(|(i, _)| Some(*i) != self.lhs)
            .map(|(_, e)| e.clone())
            .collect()
    }
}

/// Catalog entry for `id` without verification.
pub fn catalog_set(id: SystemId) -> Result<InvariantSet, InvariantError> {
    InvariantSet::new(
        &id.to_string(),
        id.jet_space(),
        id.generators(),
        id.invariants(),
        None,
    )
}

/// Catalog entry for `id`, verified the first time it is requested.
pub fn builtin_set(id: SystemId) -> Result<&'static InvariantSet, InvariantError> {
    static SETS: [OnceLock<Result<InvariantSet, String>>; 5] =
        [const { OnceLock::new() }; 5];
    let slot = match id {
        SystemId::Kdv => &SETS[0],
        SystemId::Ks => &SETS[1],
        SystemId::Burgers => &SETS[2],
        SystemId::Nkdv => &SETS[3],
        SystemId::So2Demo => &SETS[4],
    };
    let r = slot.get_or_init(|| {
        let set = catalog_set(id).map_err(|e| e.to_string())?;
        let report = verify_set(&set, 200, 0x5eed, &VerifyOptions::default());
        if report.pass {
            Ok(set)
        } else {
            Err(report.summary())
        }
    });
    r.as_ref().map_err(|summary| InvariantError::Catalog {
        system: id,
        summary: summary.clone(),
    })
}

/// Remove every independent coordinate whose generator prolongs to a pure
/// translation. Returns the reduced coordinates and the generators left
/// over.
pub fn eliminate_translations(
    generators: &[VectorField],
    space: &JetSpace,
) -> Result<(Vec<JetVariable>, Vec<VectorField>), LieError> {
    let mut coords = space.coordinates();
    let mut rest = Vec::new();
    for g in generators {
        match prolong(g, space)?.as_translation() {
            Some(c) => coords.retain(|v| *v != JetVariable::Independent(c)),
            None => rest.push(g.clone()),
        }
    }
    Ok((coords, rest))
}

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    pub sampling: SampleOptions,
    /// Require `pr v[η]` to simplify to literal zero. Without it a numeric
    /// zero passes with a warning.
    pub strict: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            sampling: SampleOptions::default(),
            strict: true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct VerificationReport {
    pub system: String,
    pub invariance: Vec<InvarianceReport>,
    /// Smallest Jacobian singular value over all samples.
    pub min_singular_value: f64,
    /// Fraction of samples whose Jacobian has full row rank.
    pub full_rank_fraction: f64,
    pub rank_samples: usize,
    pub failures: Vec<String>,
    pub warnings: Vec<String>,
    pub pass: bool,
}

impl VerificationReport {
    pub fn summary(&self) -> String {
        let mut s = format!(
            "{}: {} ({} invariance checks, min singular value {:.3e}, full rank at {:.1}% of {} points)",
            self.system,
            if self.pass { "PASS" } else { "FAIL" },
            self.invariance.len(),
            self.min_singular_value,
            100.0 * self.full_rank_fraction,
            self.rank_samples,
        );
        for w in &self.warnings {
            s.push_str(&format!("\n  warning: {w}"));
        }
        for f in &self.failures {
            s.push_str(&format!("\n  failure: {f}"));
        }
        s
    }
}

/// Check every (generator, invariant) pair and the functional independence
/// of the set. All failures are collected.
pub fn verify_set(
    set: &InvariantSet,
    samples: usize,
    seed: u64,
    opts: &VerifyOptions,
) -> VerificationReport {
    let k = set.etas.len();
    assert!(samples >= k, "need at least as many samples as invariants");
    let mut failures = Vec::new();
    let mut warnings = Vec::new();
    let mut invariance = Vec::new();

    for (gi, g) in set.generators.iter().enumerate() {
        let pv = match prolong(g, &set.space) {
            Ok(pv) => pv,
            Err(e) => {
                failures.push(format!("generator {}: {e}", label(g, gi)));
                continue;
            }
        };
        for (ei, eta) in set.etas.iter().enumerate() {
            let pair_seed = crate::seed::derive_seed(seed, (gi * 1000 + ei) as u64);
            match check_invariant(&pv, eta, samples, pair_seed, &opts.sampling) {
                Ok(r) => {
                    let what = format!("pr {}[{}] = {}", label(g, gi), eta, r.residual);
                    if !r.numeric_zero(NUMERIC_TOL) {
                        failures.push(format!("{what} (max |value| {:.3e})", r.max_abs));
                    } else if !r.symbolic_zero {
                        if opts.strict {
                            failures.push(format!("{what} is only numerically zero"));
                        } else {
                            warnings.push(format!("{what} is only numerically zero"));
                        }
                    }
                    invariance.push(r);
                }
                Err(e) => failures.push(format!("pr {}[{}]: {e}", label(g, gi), eta)),
            }
        }
    }

    let (min_sv, frac) = independence(set, samples, seed, &opts.sampling);
    if frac < RANK_FRACTION {
        failures.push(format!(
            "Jacobian of the {k} invariants has full rank at only {:.1}% of points (min singular value {min_sv:.3e})",
            100.0 * frac
        ));
    }

    VerificationReport {
        system: set.system.clone(),
        pass: failures.is_empty(),
        invariance,
        min_singular_value: min_sv,
        full_rank_fraction: frac,
        rank_samples: samples,
        failures,
        warnings,
    }
}

fn label(g: &VectorField, i: usize) -> String {
    if g.label.is_empty() {
        format!("v{}", i + 1)
    } else {
        g.label.clone()
    }
}

/// Smallest singular value seen and fraction of points with full row rank
/// for `∂η^j/∂(jet coordinates)`.
fn independence(set: &InvariantSet, samples: usize, seed: u64, opts: &SampleOptions) -> (f64, f64) {
    let coords = set.space.coordinates();
    let grads: Vec<Vec<Expr>> = set
        .etas
        .iter()
        .map(|e| coords.iter().map(|v| e.partial_derivative(v)).collect())
        .collect();
    let refs: Vec<&Expr> = set.etas.iter().collect();
    let mut sampler = JetSampler::new(&refs, opts.clone(), crate::seed::derive_seed(seed, u64::MAX));
    sampler.coordinates = coords.clone();
    let k = set.etas.len();
    let svs: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let Ok((b, _)) = sampler.admissible(i, &refs) else {
                return 0.0;
            };
            jacobian_min_sv(&grads, &b, k, coords.len())
        })
        .collect();
    let min = svs.iter().copied().fold(f64::INFINITY, f64::min);
    let full = svs.iter().filter(|s| **s > SINGULAR_FLOOR).count();
    (min, full as f64 / samples as f64)
}

fn jacobian_min_sv(grads: &[Vec<Expr>], b: &Binding, k: usize, n: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let mut j = DMatrix::<f64>::zeros(k, n);
    for (r, row) in grads.iter().enumerate() {
        for (c, g) in row.iter().enumerate() {
            match g.evaluate(b) {
                Ok(v) => j[(r, c)] = v,
                Err(_) => return 0.0,
            }
        }
    }
    j.singular_values().iter().copied().fold(f64::INFINITY, f64::min)
}

/// Binding of a system's default constants.
pub fn constants_binding<'a>(consts: impl IntoIterator<Item = (&'a String, &'a f64)>) -> Binding {
    let mut b = Binding::new();
    for (k, v) in consts {
        b.set(Symbol::named(k), *v);
    }
    b
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Expr {
        Expr::parse(s).unwrap()
    }

    fn coords(list: &[JetVariable]) -> Vec<String> {
        list.iter().map(|v| v.to_string()).collect()
    }

    #[test]
    fn translation_elimination_rows() {
        let space = JetSpace::evolution_1d(4);
        let dx = VectorField::translation('x');
        let dt = VectorField::translation('t');
        let (c, rest) = eliminate_translations(&[], &space).unwrap();
        assert_eq!(coords(&c), ["t", "x", "u", "u_t", "u_x", "u_xx", "u_xxx", "u_xxxx"]);
        assert!(rest.is_empty());
        let (c, _) = eliminate_translations(&[dx.clone()], &space).unwrap();
        assert_eq!(coords(&c), ["t", "u", "u_t", "u_x", "u_xx", "u_xxx", "u_xxxx"]);
        let boost = SystemId::Kdv.generators()[2].clone();
        let (c, rest) = eliminate_translations(&[dx, dt, boost], &space).unwrap();
        assert_eq!(coords(&c), ["u", "u_t", "u_x", "u_xx", "u_xxx", "u_xxxx"]);
        assert_eq!(rest.len(), 1);
    }

    #[test]
    fn catalog_sets_verify() {
        for id in [SystemId::Kdv, SystemId::Nkdv, SystemId::So2Demo] {
            let s = builtin_set(id).unwrap();
            assert_eq!(s.etas.len(), if id == SystemId::So2Demo { 2 } else { 5 });
        }
        assert_eq!(builtin_set(SystemId::Kdv).unwrap().lhs, Some(0));
        assert_eq!(builtin_set(SystemId::So2Demo).unwrap().lhs, None);
    }

    #[test]
    fn replaced_evolution_invariant_fails() {
        let mut etas = SystemId::Kdv.invariants();
        etas[0] = p("u_t");
        let set = InvariantSet::new("kdv", JetSpace::evolution_1d(4), SystemId::Kdv.generators(), etas, None)
            .unwrap();
        let r = verify_set(&set, 50, 1, &VerifyOptions::default());
        assert!(!r.pass);
        assert!(r.failures.iter().any(|f| f.contains("u_t") && f.contains("-u_x")), "{:?}", r.failures);
    }

    #[test]
    fn dependent_invariants_fail_independence() {
        let set = InvariantSet::new(
            "dup",
            JetSpace::plane(1),
            vec![VectorField::translation('x')],
            vec![p("u_x"), p("2*u_x")],
            None,
        )
        .unwrap();
        let r = verify_set(&set, 20, 1, &VerifyOptions::default());
        assert!(!r.pass);
        assert!(r.full_rank_fraction < RANK_FRACTION);
        assert!(r.failures.iter().all(|f| f.contains("Jacobian")));
    }

    #[test]
    fn evolution_invariant_must_be_unique() {
        let space = JetSpace::evolution_1d(4);
        assert!(matches!(
            InvariantSet::new("x", space.clone(), vec![], vec![p("u_x")], None),
            Err(InvariantError::NoEvolutionInvariant)
        ));
        assert!(matches!(
            InvariantSet::new("x", space.clone(), vec![], vec![p("u_t"), p("u_t + u")], None),
            Err(InvariantError::AmbiguousEvolution(_))
        ));
        assert!(matches!(
            InvariantSet::new("x", space, vec![], vec![p("u_x"), p("u_t")], Some(0)),
            Err(InvariantError::LhsMismatch { .. })
        ));
    }
}

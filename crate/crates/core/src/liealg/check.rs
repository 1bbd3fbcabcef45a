//! Symbolic and sampled checks of invariance and of the infinitesimal
//! symmetry criterion.

use std::collections::BTreeSet;

use rand::Rng;
use rayon::prelude::*;

use super::{LieError, ProlongedVectorField};
use crate::expr::{Binding, Expr, JetVariable, Symbol};
use crate::jetgrid::JetGrid;
use crate::seed;

#[derive(Clone, Debug)]
pub struct SampleOptions {
    /// Coordinates are drawn uniformly from `[-half_width, half_width]`.
    pub half_width: f64,
    /// Points where any denominator is smaller than this are redrawn.
    pub denominator_guard: f64,
    pub max_retries: usize,
    /// Values for named constants; unlisted constants are drawn from
    /// `[0.5, 2]` per point.
    pub constants: Binding,
}

impl Default for SampleOptions {
    fn default() -> Self {
        SampleOptions {
            half_width: 2.0,
            denominator_guard: 1e-3,
            max_retries: 64,
            constants: Binding::new(),
        }
    }
}

/// Deterministic random points of jet space. Point `i` depends only on
/// `(seed, i)`, never on thread scheduling.
#[derive(Clone, Debug)]
pub struct JetSampler {
    pub coordinates: Vec<JetVariable>,
    pub named: Vec<String>,
    pub options: SampleOptions,
    pub seed: u64,
}

impl JetSampler {
    pub fn new(exprs: &[&Expr], options: SampleOptions, seed: u64) -> Self {
        let mut coords = BTreeSet::new();
        let mut named = BTreeSet::new();
        for e in exprs {
            coords.extend(e.jet_variables());
            named.extend(e.named_constants());
        }
        JetSampler {
            coordinates: coords.into_iter().collect(),
            named: named.into_iter().collect(),
            options,
            seed,
        }
    }

    /// Draw `attempt` of point `index`.
    pub fn point(&self, index: usize, attempt: usize) -> Binding {
        let mut rng = seed::rng(self.seed, ((index as u64) << 16) | attempt as u64);
        let w = self.options.half_width;
        let mut b = Binding::new();
        for v in &self.coordinates {
            b.set(v.clone(), rng.random_range(-w..=w));
        }
        for n in &self.named {
            let s = Symbol::named(n);
            let v = match self.options.constants.get(&s) {
                Some(v) => v,
                None => rng.random_range(0.5..=2.0),
            };
            b.set(s, v);
        }
        b
    }

    /// First draw of point `index` at which every expression in `guarded`
    /// evaluates with all denominators above the guard. `Err` carries the
    /// rendering of the last rejected point.
    pub fn admissible(&self, index: usize, guarded: &[&Expr]) -> Result<(Binding, usize), String> {
        let mut last = Binding::new();
        for attempt in 0..=self.options.max_retries {
            let b = self.point(index, attempt);
            let ok = guarded.iter().all(|e| match e.evaluate_guarded(&b) {
                Ok((_, den)) => den >= self.options.denominator_guard,
                Err(_) => false,
            });
            if ok {
                return Ok((b, attempt));
            }
            last = b;
        }
        Err(self.render(&last))
    }

    fn render(&self, b: &Binding) -> String {
        let parts: Vec<String> = self
            .coordinates
            .iter()
            .map(|v| format!("{v}={:.4}", b.get(&Symbol::Jet(v.clone())).unwrap_or(f64::NAN)))
            .collect();
        format!("{{{}}}", parts.join(", "))
    }
}

#[derive(Clone, Debug)]
pub struct InvarianceReport {
    pub generator: String,
    pub eta: Expr,
    /// `pr v[η]` after simplification.
    pub residual: Expr,
    pub symbolic_zero: bool,
    pub max_abs: f64,
    pub samples: usize,
    /// Number of redraws caused by the denominator guard.
    pub resampled: usize,
}

impl InvarianceReport {
    /// Numeric agreement with invariance at tolerance `tol`.
    pub fn numeric_zero(&self, tol: f64) -> bool {
        self.max_abs < tol
    }
}

/// Evaluate `pr v[η]` symbolically and at `samples` random jet points.
pub fn check_invariant(
    pv: &ProlongedVectorField,
    eta: &Expr,
    samples: usize,
    seed: u64,
    options: &SampleOptions,
) -> Result<InvarianceReport, LieError> {
    assert!(samples >= 1, "at least one sample is required");
    let residual = pv.apply(eta)?;
    let symbolic_zero = residual.is_zero();
    let sampler = JetSampler::new(&[eta, &residual], options.clone(), seed);
    let results: Vec<Result<(f64, usize), String>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let (b, attempts) = sampler.admissible(i, &[eta, &residual])?;
            let v = residual.evaluate(&b).map_err(|e| e.to_string())?;
            Ok((v.abs(), attempts))
        })
        .collect();
    let mut max_abs = 0.0f64;
    let mut resampled = 0;
    let mut singular = Vec::new();
    for r in results {
        match r {
            Ok((v, a)) => {
                max_abs = max_abs.max(v);
                resampled += a;
            }
            Err(p) => singular.push(p),
        }
    }
    if !singular.is_empty() {
        return Err(LieError::Singular { points: singular });
    }
    Ok(InvarianceReport {
        generator: pv.base.label.clone(),
        eta: eta.clone(),
        residual,
        symbolic_zero,
        max_abs,
        samples,
        resampled,
    })
}

#[derive(Clone, Debug)]
pub struct CriterionReport {
    pub generator: String,
    /// `pr v[F]` after simplification.
    pub residual: Expr,
    pub symbolic_zero: bool,
    /// Largest `|pr v[F]|` over the supplied solution data.
    pub on_manifold_max: Option<f64>,
    pub points: usize,
}

/// `pr v[F] = 0` checked identically, and on solution data when a
/// [`JetGrid`] is given.
pub fn check_symmetry_criterion(
    pv: &ProlongedVectorField,
    f: &Expr,
    jet: Option<&JetGrid>,
    constants: &Binding,
) -> Result<CriterionReport, LieError> {
    let residual = pv.apply(f)?;
    let symbolic_zero = residual.is_zero();
    let (on_manifold_max, points) = match jet {
        None => (None, 0),
        Some(g) => {
            let vals = g.evaluate(&residual, constants)?;
            let m = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            (Some(m), vals.len())
        }
    };
    Ok(CriterionReport {
        generator: pv.base.label.clone(),
        residual,
        symbolic_zero,
        on_manifold_max,
        points,
    })
}

//! Infinitesimal generators of Lie point symmetries and their prolongation
//! to jet space.

mod check;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use thiserror::Error;

use crate::expr::{Expr, ExprError, JetSpace, JetVariable, MultiIndex, ParseContext};

pub use check::{
    check_invariant, check_symmetry_criterion, CriterionReport, InvarianceReport, JetSampler,
    SampleOptions,
};

#[derive(Debug, Error)]
pub enum LieError {
    #[error("generator coefficient `{coeff}` depends on `{variable}`; point symmetries may only use base coordinates")]
    NotPoint { coeff: String, variable: JetVariable },
    #[error("prolongation order must be at least 1")]
    ZeroOrder,
    #[error("coefficient {coeff} keeps order-{order} terms after simplification: {expr}")]
    ResidualOrder {
        coeff: JetVariable,
        order: usize,
        expr: Expr,
    },
    #[error("`{0}` is outside the prolonged jet space")]
    OrderMismatch(JetVariable),
    #[error("denominator within guard at {} sample point(s), e.g. {}", .points.len(), .points.first().map(String::as_str).unwrap_or("-"))]
    Singular { points: Vec<String> },
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Data(#[from] crate::jetgrid::JetError),
}

/// `v = Σ ξ^i(x,u) ∂/∂x^i + Σ φ_α(x,u) ∂/∂u^α`. Absent entries are zero.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    pub label: String,
    pub xi: BTreeMap<char, Expr>,
    pub phi: BTreeMap<String, Expr>,
}

impl VectorField {
    pub fn new<'a>(
        xi: impl IntoIterator<Item = (char, Expr)>,
        phi: impl IntoIterator<Item = (&'a str, Expr)>,
    ) -> Self {
        VectorField {
            label: String::new(),
            xi: xi
                .into_iter()
                .map(|(c, e)| (c, e.simplify()))
                .filter(|(_, e)| !e.is_zero())
                .collect(),
            phi: phi
                .into_iter()
                .map(|(n, e)| (n.to_string(), e.simplify()))
                .filter(|(_, e)| !e.is_zero())
                .collect(),
        }
    }

    /// `∂/∂x^i`.
    pub fn translation(var: char) -> Self {
        Self::new([(var, Expr::one())], [])
    }

    pub fn named(mut self, label: &str) -> Self {
        self.label = label.to_string();
        self
    }

    /// Build from infix coefficient strings.
    pub fn parse(
        xi: &[(char, &str)],
        phi: &[(&str, &str)],
        ctx: &ParseContext,
    ) -> Result<Self, ExprError> {
        let xi = xi
            .iter()
            .map(|(c, s)| Ok((*c, ctx.parse(s)?)))
            .collect::<Result<Vec<_>, ExprError>>()?;
        let phi = phi
            .iter()
            .map(|(n, s)| Ok((*n, ctx.parse(s)?)))
            .collect::<Result<Vec<_>, ExprError>>()?;
        Ok(Self::new(xi, phi))
    }

    pub fn xi_of(&self, var: char) -> Expr {
        self.xi.get(&var).cloned().unwrap_or_else(Expr::zero)
    }

    pub fn phi_of(&self, dep: &str) -> Expr {
        self.phi.get(dep).cloned().unwrap_or_else(Expr::zero)
    }

    /// Point symmetries only involve `x` and `u`.
    pub fn validate(&self) -> Result<(), LieError> {
        let all = self
            .xi
            .values()
            .chain(self.phi.values());
        for e in all {
            if let Some(v) = e.jet_variables().into_iter().find(|v| !v.is_base()) {
                return Err(LieError::NotPoint {
                    coeff: e.to_string(),
                    variable: v,
                });
            }
        }
        Ok(())
    }
}

impl fmt::Display for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = Vec::new();
        let term = |coef: &Expr, name: String| match coef.as_const() {
            Some(c) if c == 1.0 => format!("d/d{name}"),
            _ => format!("({coef})*d/d{name}"),
        };
        for (c, e) in &self.xi {
            parts.push(term(e, c.to_string()));
        }
        for (n, e) in &self.phi {
            parts.push(term(e, n.clone()));
        }
        if parts.is_empty() {
            f.write_str("0")
        } else {
            f.write_str(&parts.join(" + "))
        }
    }
}

/// `pr^(n) v = v + Σ_α Σ_J φ_α^J ∂/∂u_J^α`.
#[derive(Clone, Debug)]
pub struct ProlongedVectorField {
    pub base: VectorField,
    pub space: JetSpace,
    /// `φ_α^J` keyed by the derivative coordinate `u_J^α`.
    pub coeffs: BTreeMap<JetVariable, Expr>,
}

impl ProlongedVectorField {
    pub fn order(&self) -> usize {
        self.space.order
    }

    pub fn coefficient(&self, v: &JetVariable) -> Option<&Expr> {
        self.coeffs.get(v)
    }

    /// Coefficient multiplying `∂/∂v` for any coordinate of the space.
    pub fn component(&self, v: &JetVariable) -> Result<Expr, LieError> {
        match v {
            JetVariable::Independent(c) => Ok(self.base.xi_of(*c)),
            JetVariable::Dependent { name, index } if index.order() == 0 => {
                Ok(self.base.phi_of(name))
            }
            _ => self
                .coeffs
                .get(v)
                .cloned()
                .ok_or_else(|| LieError::OrderMismatch(v.clone())),
        }
    }

    /// Drop coefficients above `order`.
    pub fn truncate(&self, order: usize) -> ProlongedVectorField {
        let space = self.space.with_order(order);
        ProlongedVectorField {
            base: self.base.clone(),
            coeffs: self
                .coeffs
                .iter()
                .filter(|(v, _)| space.contains(v))
                .map(|(v, e)| (v.clone(), e.clone()))
                .collect(),
            space,
        }
    }

    /// `pr v` is just `∂/∂x^i` when this returns `Some(i)`.
    pub fn as_translation(&self) -> Option<char> {
        if !self.base.phi.is_empty() || self.coeffs.values().any(|e| !e.is_zero()) {
            return None;
        }
        let mut it = self.base.xi.iter();
        match (it.next(), it.next()) {
            (Some((c, e)), None) if e.as_const() == Some(1.0) => Some(*c),
            _ => None,
        }
    }

    /// `pr v[η] = Σ ξ^i ∂η/∂x^i + Σ φ_α ∂η/∂u^α + Σ φ_α^J ∂η/∂u_J^α`.
    pub fn apply(&self, e: &Expr) -> Result<Expr, LieError> {
        let mut terms = Vec::new();
        for v in e.jet_variables() {
            let comp = self.component(&v)?;
            if comp.is_zero() {
                continue;
            }
            terms.push(comp * e.partial_derivative(&v));
        }
        Ok(Expr::sum(terms).simplify())
    }
}

impl fmt::Display for ProlongedVectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.base)?;
        for (v, e) in &self.coeffs {
            if !e.is_zero() {
                write!(f, " + ({e})*d/d{v}")?;
            }
        }
        Ok(())
    }
}

/// `n`-th prolongation over `space`:
/// `φ_α^J = D_J(φ_α − Σ_i ξ^i u_i^α) + Σ_i ξ^i u_{J,i}^α`.
pub fn prolong(v: &VectorField, space: &JetSpace) -> Result<ProlongedVectorField, LieError> {
    v.validate()?;
    let n = space.order;
    if n == 0 {
        return Err(LieError::ZeroOrder);
    }
    let cap = n + 1;
    let indices = space.multi_indices();
    let mut coeffs = BTreeMap::new();
    for dep in &space.dependents {
        let u = |j: MultiIndex| JetVariable::dependent(dep, j);
        // characteristic Q = φ − Σ ξ^i u_i
        let mut q = vec![v.phi_of(dep)];
        for (c, xi) in &v.xi {
            q.push(Expr::product(vec![
                Expr::constant(-1.0),
                xi.clone(),
                Expr::var(u(MultiIndex::new(vec![*c]))),
            ]));
        }
        let q = Expr::sum(q).simplify();
        let mut d_q: HashMap<MultiIndex, Expr> = HashMap::new();
        d_q.insert(MultiIndex::empty(), q);
        for j in &indices {
            let dj = total_derivative_memo(&mut d_q, j, cap)?;
            let mut terms = vec![dj];
            for (c, xi) in &v.xi {
                terms.push(xi.clone() * Expr::var(u(j.extend(*c))));
            }
            let coeff = Expr::sum(terms).simplify();
            if coeff.max_order() > n {
                return Err(LieError::ResidualOrder {
                    coeff: u(j.clone()),
                    order: coeff.max_order(),
                    expr: coeff,
                });
            }
            coeffs.insert(u(j.clone()), coeff);
        }
    }
    Ok(ProlongedVectorField {
        base: v.clone(),
        space: space.clone(),
        coeffs,
    })
}

fn total_derivative_memo(
    memo: &mut HashMap<MultiIndex, Expr>,
    j: &MultiIndex,
    cap: usize,
) -> Result<Expr, LieError> {
    if let Some(e) = memo.get(j) {
        return Ok(e.clone());
    }
    let last = *j.entries().last().expect("non-empty multi-index");
    let parent = j.without(last).expect("entry present");
    let pe = total_derivative_memo(memo, &parent, cap)?;
    let e = pe.total_derivative_capped(last, cap)?;
    memo.insert(j.clone(), e.clone());
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Expr {
        Expr::parse(s).unwrap()
    }

    fn jv(s: &str) -> JetVariable {
        JetVariable::deriv("u", s)
    }

    #[test]
    fn so2_first_prolongation() {
        let v = VectorField::new([('x', p("-u"))], [("u", p("x"))]);
        let pv = prolong(&v, &JetSpace::plane(1)).unwrap();
        assert_eq!(pv.coefficient(&jv("x")).unwrap(), &p("1 + u_x^2").simplify());
    }

    #[test]
    fn galilean_boost_prolongation() {
        let v = VectorField::new([('x', p("t"))], [("u", Expr::one())]);
        let pv = prolong(&v, &JetSpace::evolution_1d(4)).unwrap();
        assert_eq!(pv.coefficient(&jv("t")).unwrap(), &p("-u_x"));
        for j in ["x", "xx", "xxx", "xxxx"] {
            assert!(pv.coefficient(&jv(j)).unwrap().is_zero(), "{j}");
        }
    }

    #[test]
    fn translations_prolong_trivially() {
        let pv = prolong(&VectorField::translation('x'), &JetSpace::evolution_1d(4)).unwrap();
        assert_eq!(pv.as_translation(), Some('x'));
        assert_eq!(pv.coeffs.len(), 5);
    }

    #[test]
    fn rejects_non_point_generators() {
        let v = VectorField::new([('x', p("u_x"))], []);
        assert!(matches!(
            prolong(&v, &JetSpace::plane(1)),
            Err(LieError::NotPoint { .. })
        ));
    }

    #[test]
    fn apply_rejects_uncovered_variables() {
        let pv = prolong(&VectorField::translation('x'), &JetSpace::evolution_1d(2)).unwrap();
        assert!(matches!(
            pv.apply(&p("u_xxx")),
            Err(LieError::OrderMismatch(_))
        ));
        assert!(pv.apply(&p("u")).unwrap().is_zero());
    }

    #[test]
    fn rotation_invariant_square() {
        let v = VectorField::new([('x', p("-u"))], [("u", p("x"))]);
        let pv = prolong(&v, &JetSpace::plane(1)).unwrap();
        assert!(pv.apply(&p("x^2 + u^2")).unwrap().is_zero());
        assert!(pv.apply(&p("(x*u_x - u)/(u*u_x + x)")).unwrap().is_zero());
    }

    #[test]
    fn truncation_matches_lower_prolongation() {
        let v = VectorField::new([('x', p("-u*x"))], [("u", p("x^2 + u"))]);
        let full = JetSpace::plane(3);
        let high = prolong(&v, &full).unwrap().truncate(1);
        let low = prolong(&v, &full.with_order(1)).unwrap();
        assert_eq!(high.coeffs, low.coeffs);
    }
}

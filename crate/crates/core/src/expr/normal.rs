//! Canonical form.
//!
//! Every expression is brought to `N / D` with `N`, `D` expanded Laurent
//! polynomials over atoms (jet variables and named constants). Each monomial
//! carries at most one `exp` factor whose argument is itself canonical.
//! Monomial denominators are divided out; a genuine polynomial denominator is
//! scaled so its leading coefficient is 1. No polynomial GCD is attempted.

use std::collections::BTreeMap;
use std::sync::Arc;

use super::{Expr, JetVariable, Node};

/// Coefficients whose merge cancels below this relative size are dropped.
const CANCEL_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Atom {
    Var(JetVariable),
    Named(Arc<str>),
}

impl Atom {
    fn to_expr(&self) -> Expr {
        match self {
            Atom::Var(v) => Expr::var(v.clone()),
            Atom::Named(n) => Expr(Arc::new(Node::Named(n.clone()))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Default)]
struct Monomial {
    factors: BTreeMap<Atom, i32>,
    /// Canonical, non-constant argument of the merged exponential factor.
    exp: Option<Expr>,
}

impl Monomial {
    fn is_one(&self) -> bool {
        self.factors.is_empty() && self.exp.is_none()
    }

    /// Product with the scalar picked up when `exp` arguments fold to a
    /// constant.
    fn mul(&self, other: &Monomial) -> (Monomial, f64) {
        let mut factors = self.factors.clone();
        for (a, k) in &other.factors {
            let e = factors.entry(a.clone()).or_insert(0);
            *e += k;
            if *e == 0 {
                factors.remove(a);
            }
        }
        let (exp, scale) = match (&self.exp, &other.exp) {
            (None, None) => (None, 1.0),
            (Some(a), None) | (None, Some(a)) => (Some(a.clone()), 1.0),
            (Some(a), Some(b)) => exp_factor(Expr::sum(vec![a.clone(), b.clone()])),
        };
        (Monomial { factors, exp }, scale)
    }

    fn inverse(&self) -> (Monomial, f64) {
        let factors = self.factors.iter().map(|(a, k)| (a.clone(), -k)).collect();
        let (exp, scale) = match &self.exp {
            None => (None, 1.0),
            Some(a) => exp_factor(Expr::product(vec![Expr::constant(-1.0), a.clone()])),
        };
        (Monomial { factors, exp }, scale)
    }

    fn to_expr(&self, coeff: f64) -> Expr {
        let mut parts = Vec::with_capacity(self.factors.len() + 2);
        if coeff != 1.0 || self.is_one() {
            parts.push(Expr::constant(coeff));
        }
        for (a, k) in &self.factors {
            let e = a.to_expr();
            parts.push(if *k == 1 { e } else { e.pow(*k) });
        }
        if let Some(arg) = &self.exp {
            parts.push(arg.clone().exp());
        }
        Expr::product(parts)
    }
}

/// Canonicalize an `exp` argument; constant arguments fold into a scalar.
fn exp_factor(arg: Expr) -> (Option<Expr>, f64) {
    let arg = arg.simplify();
    match arg.as_const() {
        Some(c) => (None, c.exp()),
        None => (Some(arg), 1.0),
    }
}

type Poly = BTreeMap<Monomial, f64>;

fn add_term(p: &mut Poly, m: Monomial, c: f64) {
    if c == 0.0 {
        return;
    }
    match p.get_mut(&m) {
        Some(old) => {
            let s = *old + c;
            if s == 0.0 || s.abs() <= CANCEL_TOL * old.abs().max(c.abs()) {
                p.remove(&m);
            } else {
                *old = s;
            }
        }
        None => {
            p.insert(m, c);
        }
    }
}

fn poly_const(c: f64) -> Poly {
    let mut p = Poly::new();
    add_term(&mut p, Monomial::default(), c);
    p
}

fn poly_add(a: &Poly, b: &Poly) -> Poly {
    let mut out = a.clone();
    for (m, c) in b {
        add_term(&mut out, m.clone(), *c);
    }
    out
}

fn poly_mul(a: &Poly, b: &Poly) -> Poly {
    let mut out = Poly::new();
    for (ma, ca) in a {
        for (mb, cb) in b {
            let (m, s) = ma.mul(mb);
            add_term(&mut out, m, ca * cb * s);
        }
    }
    out
}

fn poly_scale(a: &Poly, s: f64) -> Poly {
    let mut out = Poly::new();
    for (m, c) in a {
        add_term(&mut out, m.clone(), c * s);
    }
    out
}

fn is_one(p: &Poly) -> bool {
    p.len() == 1 && p.get(&Monomial::default()) == Some(&1.0)
}

fn poly_to_expr(p: &Poly) -> Expr {
    Expr::sum(p.iter().map(|(m, c)| m.to_expr(*c)).collect())
}

/// `num / den`; `den` empty encodes a literal division by zero.
#[derive(Clone, Debug)]
struct Rational {
    num: Poly,
    den: Poly,
}

impl Rational {
    fn poly(p: Poly) -> Self {
        Rational {
            num: p,
            den: poly_const(1.0),
        }
    }

    fn constant(c: f64) -> Self {
        Self::poly(poly_const(c))
    }

    fn atom(a: Atom) -> Self {
        let mut p = Poly::new();
        let mut m = Monomial::default();
        m.factors.insert(a, 1);
        p.insert(m, 1.0);
        Self::poly(p)
    }

    fn normalize(mut self) -> Self {
        if self.den.is_empty() {
            return self;
        }
        if self.num.is_empty() {
            return Self::constant(0.0);
        }
        if self.den.len() == 1 {
            let (m, c) = self.den.iter().next().map(|(m, c)| (m.clone(), *c)).unwrap();
            let (inv, s) = m.inverse();
            let mut num = Poly::new();
            for (mn, cn) in &self.num {
                let (mm, s2) = mn.mul(&inv);
                add_term(&mut num, mm, cn * s * s2 / c);
            }
            return Self::poly(num);
        }
        let lead = *self.den.values().next().unwrap();
        if lead != 1.0 {
            self.num = poly_scale(&self.num, 1.0 / lead);
            self.den = poly_scale(&self.den, 1.0 / lead);
        }
        if let Some(r) = proportional(&self.num, &self.den) {
            return Self::constant(r);
        }
        self
    }

    fn add(&self, o: &Rational) -> Rational {
        if self.den == o.den {
            return Rational {
                num: poly_add(&self.num, &o.num),
                den: self.den.clone(),
            }
            .normalize();
        }
        Rational {
            num: poly_add(&poly_mul(&self.num, &o.den), &poly_mul(&o.num, &self.den)),
            den: poly_mul(&self.den, &o.den),
        }
        .normalize()
    }

    fn mul(&self, o: &Rational) -> Rational {
        let den = if is_one(&self.den) {
            o.den.clone()
        } else if is_one(&o.den) {
            self.den.clone()
        } else {
            poly_mul(&self.den, &o.den)
        };
        Rational {
            num: poly_mul(&self.num, &o.num),
            den,
        }
        .normalize()
    }

    fn inverse(&self) -> Rational {
        Rational {
            num: self.den.clone(),
            den: self.num.clone(),
        }
        .normalize()
    }

    fn powi(&self, k: i32) -> Rational {
        if k == 0 {
            return Self::constant(1.0);
        }
        let base = if k < 0 { self.inverse() } else { self.clone() };
        let mut acc = base.clone();
        for _ in 1..k.unsigned_abs() {
            acc = acc.mul(&base);
        }
        acc
    }

    fn to_expr(&self) -> Expr {
        if self.den.is_empty() {
            return Expr::quotient(poly_to_expr(&self.num), Expr::zero());
        }
        if is_one(&self.den) {
            return poly_to_expr(&self.num);
        }
        Expr::quotient(poly_to_expr(&self.num), poly_to_expr(&self.den))
    }
}

fn proportional(a: &Poly, b: &Poly) -> Option<f64> {
    if a.len() != b.len() || !a.keys().eq(b.keys()) {
        return None;
    }
    let (m0, c0) = b.iter().next()?;
    let r = a[m0] / c0;
    a.iter()
        .all(|(m, c)| (c - r * b[m]).abs() <= CANCEL_TOL * c.abs().max((r * b[m]).abs()))
        .then_some(r)
}

fn to_rational(e: &Expr) -> Rational {
    match e.node() {
        Node::Const(c) => Rational::constant(*c),
        Node::Var(v) => Rational::atom(Atom::Var(v.clone())),
        Node::Named(n) => Rational::atom(Atom::Named(n.clone())),
        Node::Sum(ts) => ts
            .iter()
            .fold(Rational::constant(0.0), |acc, t| acc.add(&to_rational(t))),
        Node::Product(fs) => fs
            .iter()
            .fold(Rational::constant(1.0), |acc, f| acc.mul(&to_rational(f))),
        Node::Pow(b, k) => to_rational(b).powi(*k),
        Node::Exp(a) => {
            let (exp, scale) = exp_factor(a.clone());
            match exp {
                None => Rational::constant(scale),
                Some(arg) => {
                    let mut p = Poly::new();
                    p.insert(
                        Monomial {
                            factors: BTreeMap::new(),
                            exp: Some(arg),
                        },
                        1.0,
                    );
                    Rational::poly(p)
                }
            }
        }
        Node::Quotient(n, d) => {
            let den = to_rational(d);
            if den.num.is_empty() {
                let num = to_rational(n);
                // literal division by zero is kept visible rather than folded
                return Rational {
                    num: num.num,
                    den: Poly::new(),
                };
            }
            to_rational(n).mul(&den.inverse())
        }
    }
}

impl Expr {
    /// Canonical form: constants folded, like terms merged, identities
    /// applied, products expanded with sorted factors. Idempotent.
    pub fn simplify(&self) -> Expr {
        to_rational(self).to_expr()
    }

    /// Whether the canonical form is the literal 0.
    pub fn simplifies_to_zero(&self) -> bool {
        self.simplify().is_zero()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Expr {
        Expr::parse(s).unwrap()
    }

    #[test]
    fn like_terms_cancel() {
        assert_eq!(p("u_x + u_x - 2*u_x").simplify(), Expr::zero());
    }

    #[test]
    fn unit_and_zero_identities() {
        assert_eq!(p("1*u_xxx + 0*u").simplify(), Expr::deriv("u", "xxx"));
    }

    #[test]
    fn negated_term_cancels() {
        let e = (-Expr::deriv("u", "x")) * Expr::one() + Expr::deriv("u", "x");
        assert_eq!(e.simplify(), Expr::zero());
    }

    #[test]
    fn exponentials_merge() {
        let a = p("exp(t/t0)*exp(-t/t0)*u_x");
        assert_eq!(a.simplify(), Expr::deriv("u", "x"));
        let b = p("exp(-t/t0)*exp(-t/t0) - exp(-2*t/t0)");
        assert_eq!(b.simplify(), Expr::zero());
    }

    #[test]
    fn named_constants_cancel() {
        assert_eq!(p("t0*(1/t0)*u").simplify(), Expr::deriv("u", ""));
    }

    #[test]
    fn polynomial_quotient_over_monomial_is_laurent() {
        let e = p("(x*u + x)/x").simplify();
        assert_eq!(e, p("u + 1").simplify());
    }

    #[test]
    fn proportional_quotient_folds() {
        assert_eq!(p("(2*u + 2*x)/(u + x)").simplify(), Expr::constant(2.0));
    }

    #[test]
    fn quotient_sum_combines_to_zero() {
        let e = p("(x*u_x - u)/(u*u_x + x) - (x*u_x - u)/(u*u_x + x)");
        assert!(e.simplifies_to_zero());
    }

    #[test]
    fn expansion_of_powers() {
        assert_eq!(
            p("(u + x)^2").simplify(),
            p("u^2 + 2*u*x + x^2").simplify()
        );
    }

    #[test]
    fn idempotent_on_samples() {
        for s in [
            "u_t + u*u_x + u_xxx",
            "(x*u_x - u)/(u*u_x + x)",
            "exp(-t/t0)*u_t + u*u_x",
            "3*(u+1)^3/(x^2+u)",
            "t0*(exp(t/t0) - 1)",
        ] {
            let once = p(s).simplify();
            assert_eq!(once.simplify(), once, "{s}");
        }
    }

    #[test]
    fn exp_of_zero_is_one() {
        assert_eq!(p("exp(t - t)*u").simplify(), Expr::deriv("u", ""));
    }
}

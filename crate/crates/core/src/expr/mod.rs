//! Symbolic expressions over jet-space coordinates.
//!
//! An [`Expr`] is an immutable, cheaply clonable tree. Construction never
//! rewrites; [`Expr::simplify`] maps any tree to its canonical form (a
//! polynomial, or a single quotient of polynomials, over variables, named
//! constants and one merged `exp` factor per term).

mod diff;
mod display;
mod eval;
mod jet;
mod normal;
mod parse;

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::hash::{Hash, Hasher};
use std::ops;
use std::sync::Arc;

use thiserror::Error;

pub use eval::{Binding, CompiledExpr};
pub use jet::{JetSpace, JetVariable, MultiIndex, Symbol};
pub use parse::ParseContext;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("unbound symbol `{0}`")]
    Unbound(Symbol),
    #[error("non-finite value {value} while evaluating `{expr}`")]
    NonFinite { value: f64, expr: String },
    #[error("total derivative of `{variable}` along `{along}` exceeds order cap {cap}")]
    CapExceeded {
        variable: JetVariable,
        along: char,
        cap: usize,
    },
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
}

/// Node of an expression tree.
#[derive(Debug, Clone)]
pub enum Node {
    Const(f64),
    Var(JetVariable),
    Named(Arc<str>),
    Sum(Vec<Expr>),
    Product(Vec<Expr>),
    Pow(Expr, i32),
    Exp(Expr),
    Quotient(Expr, Expr),
}

#[derive(Debug, Clone)]
pub struct Expr(Arc<Node>);

impl Expr {
    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn constant(c: f64) -> Self {
        // -0.0 and 0.0 must compare equal structurally
        let c = if c == 0.0 { 0.0 } else { c };
        Expr(Arc::new(Node::Const(c)))
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn one() -> Self {
        Self::constant(1.0)
    }

    pub fn var(v: JetVariable) -> Self {
        Expr(Arc::new(Node::Var(v)))
    }

    /// Independent variable by name.
    pub fn indep(c: char) -> Self {
        Self::var(JetVariable::Independent(c))
    }

    /// `name_J`, e.g. `Expr::deriv("u", "xx")`; an empty index gives `u`.
    pub fn deriv(name: &str, index: &str) -> Self {
        Self::var(JetVariable::deriv(name, index))
    }

    pub fn named(name: &str) -> Self {
        Expr(Arc::new(Node::Named(Arc::from(name))))
    }

    pub fn sum(terms: Vec<Expr>) -> Self {
        match terms.len() {
            0 => Self::zero(),
            1 => terms.into_iter().next().unwrap(),
            _ => Expr(Arc::new(Node::Sum(terms))),
        }
    }

    pub fn product(factors: Vec<Expr>) -> Self {
        match factors.len() {
            0 => Self::one(),
            1 => factors.into_iter().next().unwrap(),
            _ => Expr(Arc::new(Node::Product(factors))),
        }
    }

    pub fn pow(self, k: i32) -> Self {
        Expr(Arc::new(Node::Pow(self, k)))
    }

    pub fn exp(self) -> Self {
        Expr(Arc::new(Node::Exp(self)))
    }

    pub fn quotient(num: Expr, den: Expr) -> Self {
        Expr(Arc::new(Node::Quotient(num, den)))
    }

    pub fn as_const(&self) -> Option<f64> {
        match self.node() {
            Node::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    /// Parse with the default context (independents `t, x`; dependent `u`).
    pub fn parse(s: &str) -> Result<Expr, ExprError> {
        ParseContext::default().parse(s)
    }

    /// Visit every node, children before parents.
    fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        match self.node() {
            Node::Const(_) | Node::Var(_) | Node::Named(_) => {}
            Node::Sum(v) | Node::Product(v) => v.iter().for_each(|e| e.walk(f)),
            Node::Pow(b, _) => b.walk(f),
            Node::Exp(a) => a.walk(f),
            Node::Quotient(n, d) => {
                n.walk(f);
                d.walk(f);
            }
        }
        f(self);
    }

    pub fn symbols(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        self.walk(&mut |e| match e.node() {
            Node::Var(v) => {
                out.insert(Symbol::Jet(v.clone()));
            }
            Node::Named(n) => {
                out.insert(Symbol::Named(n.clone()));
            }
            _ => {}
        });
        out
    }

    pub fn jet_variables(&self) -> BTreeSet<JetVariable> {
        self.symbols()
            .into_iter()
            .filter_map(|s| match s {
                Symbol::Jet(v) => Some(v),
                Symbol::Named(_) => None,
            })
            .collect()
    }

    pub fn named_constants(&self) -> BTreeSet<String> {
        self.symbols()
            .into_iter()
            .filter_map(|s| match s {
                Symbol::Named(n) => Some(n.to_string()),
                Symbol::Jet(_) => None,
            })
            .collect()
    }

    pub fn contains(&self, v: &JetVariable) -> bool {
        let mut found = false;
        self.walk(&mut |e| {
            if let Node::Var(w) = e.node() {
                found |= w == v;
            }
        });
        found
    }

    /// Highest derivative order referenced, 0 when only base variables occur.
    pub fn max_order(&self) -> usize {
        self.jet_variables()
            .iter()
            .map(JetVariable::order)
            .max()
            .unwrap_or(0)
    }

    /// Replace a jet variable by an expression (no simplification).
    pub fn substitute(&self, v: &JetVariable, with: &Expr) -> Expr {
        match self.node() {
            Node::Var(w) if w == v => with.clone(),
            Node::Const(_) | Node::Var(_) | Node::Named(_) => self.clone(),
            Node::Sum(ts) => Expr::sum(ts.iter().map(|t| t.substitute(v, with)).collect()),
            Node::Product(fs) => {
                Expr::product(fs.iter().map(|t| t.substitute(v, with)).collect())
            }
            Node::Pow(b, k) => b.substitute(v, with).pow(*k),
            Node::Exp(a) => a.substitute(v, with).exp(),
            Node::Quotient(n, d) => Expr::quotient(n.substitute(v, with), d.substitute(v, with)),
        }
    }

    fn rank(&self) -> u8 {
        match self.node() {
            Node::Const(_) => 0,
            Node::Var(_) => 1,
            Node::Named(_) => 2,
            Node::Pow(..) => 3,
            Node::Exp(_) => 4,
            Node::Product(_) => 5,
            Node::Sum(_) => 6,
            Node::Quotient(..) => 7,
        }
    }
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Expr {}

impl PartialOrd for Expr {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Expr {
    fn cmp(&self, other: &Self) -> Ordering {
        if Arc::ptr_eq(&self.0, &other.0) {
            return Ordering::Equal;
        }
        match (self.node(), other.node()) {
            (Node::Const(a), Node::Const(b)) => a.total_cmp(b),
            (Node::Var(a), Node::Var(b)) => a.cmp(b),
            (Node::Named(a), Node::Named(b)) => a.cmp(b),
            (Node::Sum(a), Node::Sum(b)) | (Node::Product(a), Node::Product(b)) => a.cmp(b),
            (Node::Pow(a, i), Node::Pow(b, j)) => a.cmp(b).then(i.cmp(j)),
            (Node::Exp(a), Node::Exp(b)) => a.cmp(b),
            (Node::Quotient(a, c), Node::Quotient(b, d)) => a.cmp(b).then_with(|| c.cmp(d)),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl Hash for Expr {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.rank().hash(state);
        match self.node() {
            Node::Const(c) => c.to_bits().hash(state),
            Node::Var(v) => v.hash(state),
            Node::Named(n) => n.hash(state),
            Node::Sum(v) | Node::Product(v) => v.hash(state),
            Node::Pow(b, k) => {
                b.hash(state);
                k.hash(state);
            }
            Node::Exp(a) => a.hash(state),
            Node::Quotient(n, d) => {
                n.hash(state);
                d.hash(state);
            }
        }
    }
}

impl From<f64> for Expr {
    fn from(c: f64) -> Self {
        Expr::constant(c)
    }
}

impl From<JetVariable> for Expr {
    fn from(v: JetVariable) -> Self {
        Expr::var(v)
    }
}

macro_rules! binop {
    ($tr:ident, $method:ident, $body:expr) => {
        impl ops::$tr<Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self, rhs)
            }
        }
        impl ops::$tr<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self.clone(), rhs.clone())
            }
        }
        impl ops::$tr<f64> for Expr {
            type Output = Expr;
            fn $method(self, rhs: f64) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self, Expr::constant(rhs))
            }
        }
        impl ops::$tr<Expr> for f64 {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(Expr::constant(self), rhs)
            }
        }
    };
}

binop!(Add, add, |a, b| Expr::sum(vec![a, b]));
binop!(Sub, sub, |a, b| Expr::sum(vec![
    a,
    Expr::product(vec![Expr::constant(-1.0), b])
]));
binop!(Mul, mul, |a, b| Expr::product(vec![a, b]));
binop!(Div, div, |a, b| Expr::quotient(a, b));

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::product(vec![Expr::constant(-1.0), self])
    }
}

impl ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        -self.clone()
    }
}

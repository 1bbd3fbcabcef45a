//! Partial and total derivatives.

use super::{Expr, ExprError, JetVariable, Node};

/// Raw derivative; `None` stands for an identically zero result so that
/// products and sums can be pruned early.
fn d(e: &Expr, v: &JetVariable) -> Option<Expr> {
    match e.node() {
        Node::Const(_) | Node::Named(_) => None,
        Node::Var(w) => (w == v).then(Expr::one),
        Node::Sum(ts) => {
            let parts: Vec<Expr> = ts.iter().filter_map(|t| d(t, v)).collect();
            (!parts.is_empty()).then(|| Expr::sum(parts))
        }
        Node::Product(fs) => {
            let mut terms = Vec::new();
            for (i, f) in fs.iter().enumerate() {
                if let Some(df) = d(f, v) {
                    let mut factors = fs.clone();
                    factors[i] = df;
                    terms.push(Expr::product(factors));
                }
            }
            (!terms.is_empty()).then(|| Expr::sum(terms))
        }
        Node::Pow(b, k) => {
            let db = d(b, v)?;
            Some(Expr::product(vec![
                Expr::constant(*k as f64),
                b.clone().pow(k - 1),
                db,
            ]))
        }
        Node::Exp(a) => {
            let da = d(a, v)?;
            Some(e.clone() * da)
        }
        Node::Quotient(n, den) => {
            let dn = d(n, v);
            let dd = d(den, v);
            if dn.is_none() && dd.is_none() {
                return None;
            }
            let mut top = Vec::new();
            if let Some(dn) = dn {
                top.push(dn * den.clone());
            }
            if let Some(dd) = dd {
                top.push(Expr::product(vec![Expr::constant(-1.0), n.clone(), dd]));
            }
            Some(Expr::quotient(Expr::sum(top), den.clone().pow(2)))
        }
    }
}

impl Expr {
    /// `∂e/∂v`, every other jet coordinate held fixed. Canonical result.
    pub fn partial_derivative(&self, v: &JetVariable) -> Expr {
        match d(self, v) {
            Some(r) => r.simplify(),
            None => Expr::zero(),
        }
    }

    /// Total derivative `D_i` along independent variable `along` with no
    /// order cap.
    pub fn total_derivative(&self, along: char) -> Expr {
        self.total_derivative_capped(along, usize::MAX)
            .expect("uncapped total derivative cannot fail")
    }

    /// `D_i e = ∂e/∂x^i + Σ_J u_{J,i} ∂e/∂u_J`, failing if any surviving
    /// term would reference a derivative of order above `cap`.
    pub fn total_derivative_capped(&self, along: char, cap: usize) -> Result<Expr, ExprError> {
        let mut terms = vec![self.partial_derivative(&JetVariable::Independent(along))];
        for v in self.jet_variables() {
            let Some(next) = v.extend(along) else {
                continue;
            };
            let p = self.partial_derivative(&v);
            if p.is_zero() {
                continue;
            }
            if next.order() > cap {
                return Err(ExprError::CapExceeded {
                    variable: v,
                    along,
                    cap,
                });
            }
            terms.push(Expr::var(next) * p);
        }
        Ok(Expr::sum(terms).simplify())
    }

    /// `D_J e`, applying `D_{j_1}` first.
    pub fn total_derivative_multi(&self, along: &[char], cap: usize) -> Result<Expr, ExprError> {
        along
            .iter()
            .try_fold(self.clone(), |acc, c| acc.total_derivative_capped(*c, cap))
    }
}

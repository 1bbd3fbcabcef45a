use std::fmt;

use super::{Expr, Node};

fn fmt_num(c: f64) -> String {
    let a = c.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{c}")
    } else {
        format!("{c:e}")
    }
}

fn is_atomic(e: &Expr) -> bool {
    match e.node() {
        Node::Var(_) | Node::Named(_) | Node::Exp(_) => true,
        Node::Const(c) => *c >= 0.0,
        _ => false,
    }
}

fn wrap(e: &Expr) -> String {
    if is_atomic(e) {
        e.to_string()
    } else {
        format!("({e})")
    }
}

/// Rendering of a sum term without its sign, plus whether it is negative.
fn term(e: &Expr) -> (bool, String) {
    match e.node() {
        Node::Const(c) => (*c < 0.0, fmt_num(c.abs())),
        Node::Product(fs) => {
            let mut coeff = 1.0;
            let mut num = Vec::new();
            let mut den = Vec::new();
            for f in fs {
                match f.node() {
                    Node::Const(c) => coeff *= c,
                    Node::Pow(b, k) if *k < 0 => den.push(if *k == -1 {
                        wrap(b)
                    } else {
                        format!("{}^{}", wrap(b), -k)
                    }),
                    Node::Product(_) | Node::Sum(_) | Node::Quotient(..) => {
                        num.push(format!("({f})"))
                    }
                    _ => num.push(f.to_string()),
                }
            }
            let neg = coeff < 0.0;
            let c = coeff.abs();
            if c != 1.0 || num.is_empty() {
                num.insert(0, fmt_num(c));
            }
            let mut s = num.join("*");
            match den.len() {
                0 => {}
                1 => s = format!("{s}/{}", den[0]),
                _ => s = format!("{s}/({})", den.join("*")),
            }
            (neg, s)
        }
        _ => (false, e.to_string()),
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            Node::Const(c) => f.write_str(&fmt_num(*c)),
            Node::Var(v) => write!(f, "{v}"),
            Node::Named(n) => f.write_str(n),
            Node::Sum(ts) => {
                for (i, t) in ts.iter().enumerate() {
                    let (neg, s) = term(t);
                    let s = if matches!(t.node(), Node::Sum(_)) {
                        format!("({s})")
                    } else {
                        s
                    };
                    match (i, neg) {
                        (0, false) => f.write_str(&s)?,
                        (0, true) => write!(f, "-{s}")?,
                        (_, false) => write!(f, " + {s}")?,
                        (_, true) => write!(f, " - {s}")?,
                    }
                }
                Ok(())
            }
            Node::Product(_) => {
                let (neg, s) = term(self);
                if neg {
                    write!(f, "-{s}")
                } else {
                    f.write_str(&s)
                }
            }
            Node::Pow(b, k) => write!(f, "{}^{k}", wrap(b)),
            Node::Exp(a) => write!(f, "exp({a})"),
            Node::Quotient(n, d) => {
                let ns = match n.node() {
                    Node::Sum(_) | Node::Quotient(..) => format!("({n})"),
                    _ => wrap(n),
                };
                write!(f, "{ns}/{}", wrap(d))
            }
        }
    }
}

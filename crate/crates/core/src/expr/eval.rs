//! Numeric evaluation.

use std::collections::HashMap;

use super::{Expr, ExprError, JetVariable, Node, Symbol};

/// Values for free symbols.
#[derive(Clone, Debug, Default)]
pub struct Binding {
    values: HashMap<Symbol, f64>,
}

impl Binding {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, s: impl Into<Symbol>, v: f64) -> &mut Self {
        self.values.insert(s.into(), v);
        self
    }

    pub fn with(mut self, s: impl Into<Symbol>, v: f64) -> Self {
        self.set(s, v);
        self
    }

    pub fn with_named(mut self, name: &str, v: f64) -> Self {
        self.set(Symbol::named(name), v);
        self
    }

    pub fn get(&self, s: &Symbol) -> Option<f64> {
        self.values.get(s).copied()
    }

    pub fn with_jet(self, v: JetVariable, value: f64) -> Self {
        self.with(Symbol::Jet(v), value)
    }

    pub fn extend_named<'a>(&mut self, consts: impl IntoIterator<Item = (&'a String, &'a f64)>) {
        for (k, v) in consts {
            self.set(Symbol::named(k), *v);
        }
    }
}

fn eval_raw(e: &Expr, b: &Binding, min_den: &mut f64) -> Result<f64, ExprError> {
    Ok(match e.node() {
        Node::Const(c) => *c,
        Node::Var(v) => {
            let s = Symbol::Jet(v.clone());
            b.get(&s).ok_or(ExprError::Unbound(s))?
        }
        Node::Named(n) => {
            let s = Symbol::Named(n.clone());
            b.get(&s).ok_or(ExprError::Unbound(s))?
        }
        Node::Sum(ts) => {
            let mut acc = 0.0;
            for t in ts {
                acc += eval_raw(t, b, min_den)?;
            }
            acc
        }
        Node::Product(fs) => {
            let mut acc = 1.0;
            for f in fs {
                acc *= eval_raw(f, b, min_den)?;
            }
            acc
        }
        Node::Pow(base, k) => {
            let x = eval_raw(base, b, min_den)?;
            if *k < 0 {
                *min_den = min_den.min(x.abs());
            }
            x.powi(*k)
        }
        Node::Exp(a) => eval_raw(a, b, min_den)?.exp(),
        Node::Quotient(n, d) => {
            let num = eval_raw(n, b, min_den)?;
            let den = eval_raw(d, b, min_den)?;
            *min_den = min_den.min(den.abs());
            num / den
        }
    })
}

impl Expr {
    /// Evaluate under `binding`. Non-finite results are reported as
    /// [`ExprError::NonFinite`].
    pub fn evaluate(&self, binding: &Binding) -> Result<f64, ExprError> {
        self.evaluate_guarded(binding).map(|(v, _)| v)
    }

    /// Evaluate and also report the smallest denominator magnitude met
    /// (`+inf` when there are no divisions).
    pub fn evaluate_guarded(&self, binding: &Binding) -> Result<(f64, f64), ExprError> {
        let mut min_den = f64::INFINITY;
        let v = eval_raw(self, binding, &mut min_den)?;
        if !v.is_finite() {
            return Err(ExprError::NonFinite {
                value: v,
                expr: self.to_string(),
            });
        }
        Ok((v, min_den))
    }

    /// Compile against a fixed slot layout for repeated evaluation.
    /// Named constants found in `constants` are folded in.
    pub fn compile(
        &self,
        slots: &[Symbol],
        constants: &Binding,
    ) -> Result<CompiledExpr, ExprError> {
        Ok(CompiledExpr {
            root: compile_node(self, slots, constants)?,
        })
    }
}

#[derive(Debug, Clone)]
enum Op {
    Const(f64),
    Slot(usize),
    Sum(Vec<Op>),
    Product(Vec<Op>),
    Pow(Box<Op>, i32),
    Exp(Box<Op>),
    Quotient(Box<Op>, Box<Op>),
}

fn compile_node(e: &Expr, slots: &[Symbol], consts: &Binding) -> Result<Op, ExprError> {
    let lookup = |s: Symbol| -> Result<Op, ExprError> {
        if let Some(i) = slots.iter().position(|x| *x == s) {
            return Ok(Op::Slot(i));
        }
        consts.get(&s).map(Op::Const).ok_or(ExprError::Unbound(s))
    };
    Ok(match e.node() {
        Node::Const(c) => Op::Const(*c),
        Node::Var(v) => lookup(Symbol::Jet(v.clone()))?,
        Node::Named(n) => lookup(Symbol::Named(n.clone()))?,
        Node::Sum(ts) => Op::Sum(
            ts.iter()
                .map(|t| compile_node(t, slots, consts))
                .collect::<Result<_, _>>()?,
        ),
        Node::Product(fs) => Op::Product(
            fs.iter()
                .map(|t| compile_node(t, slots, consts))
                .collect::<Result<_, _>>()?,
        ),
        Node::Pow(b, k) => Op::Pow(Box::new(compile_node(b, slots, consts)?), *k),
        Node::Exp(a) => Op::Exp(Box::new(compile_node(a, slots, consts)?)),
        Node::Quotient(n, d) => Op::Quotient(
            Box::new(compile_node(n, slots, consts)?),
            Box::new(compile_node(d, slots, consts)?),
        ),
    })
}

fn run(op: &Op, x: &[f64]) -> f64 {
    match op {
        Op::Const(c) => *c,
        Op::Slot(i) => x[*i],
        Op::Sum(v) => v.iter().map(|o| run(o, x)).sum(),
        Op::Product(v) => v.iter().map(|o| run(o, x)).product(),
        Op::Pow(b, k) => run(b, x).powi(*k),
        Op::Exp(a) => run(a, x).exp(),
        Op::Quotient(n, d) => run(n, x) / run(d, x),
    }
}

/// Expression bound to a slot layout; evaluation is allocation free.
#[derive(Debug, Clone)]
pub struct CompiledExpr {
    root: Op,
}

impl CompiledExpr {
    /// Raw IEEE evaluation; callers check finiteness.
    pub fn eval(&self, slots: &[f64]) -> f64 {
        run(&self.root, slots)
    }
}

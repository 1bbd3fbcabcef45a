//! Jet-space coordinates: independent variables, dependent variables and
//! their partial derivatives.

use std::fmt;
use std::sync::Arc;

/// Multi-index `J = (j_1, ..., j_k)` of a partial derivative.
///
/// Entries are independent-variable names kept sorted, so `u_xt` and `u_tx`
/// are the same coordinate.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct MultiIndex(Vec<char>);

impl MultiIndex {
    pub fn empty() -> Self {
        MultiIndex(Vec::new())
    }

    pub fn new(mut entries: Vec<char>) -> Self {
        entries.sort_unstable();
        MultiIndex(entries)
    }

    pub fn order(&self) -> usize {
        self.0.len()
    }

    pub fn entries(&self) -> &[char] {
        &self.0
    }

    /// `J, i`: the multi-index of one more derivative along `var`.
    pub fn extend(&self, var: char) -> Self {
        let mut e = self.0.clone();
        let pos = e.partition_point(|c| *c <= var);
        e.insert(pos, var);
        MultiIndex(e)
    }

    pub fn count(&self, var: char) -> usize {
        self.0.iter().filter(|c| **c == var).count()
    }

    /// Index with one occurrence of `var` removed, if present.
    pub fn without(&self, var: char) -> Option<Self> {
        let pos = self.0.iter().position(|c| *c == var)?;
        let mut e = self.0.clone();
        e.remove(pos);
        Some(MultiIndex(e))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

// Graded order: lower derivatives first, then lexicographic.
impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

/// A coordinate of jet space.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum JetVariable {
    Independent(char),
    Dependent { name: Arc<str>, index: MultiIndex },
}

impl JetVariable {
    pub fn independent(c: char) -> Self {
        JetVariable::Independent(c)
    }

    pub fn dependent(name: &str, index: MultiIndex) -> Self {
        JetVariable::Dependent {
            name: Arc::from(name),
            index,
        }
    }

    /// `u_J` for a dependent variable `name` and index given as a string of
    /// independent-variable names, e.g. `deriv("u", "xxx")`.
    pub fn deriv(name: &str, index: &str) -> Self {
        Self::dependent(name, MultiIndex::new(index.chars().collect()))
    }

    /// Derivative order; independent variables and `u` itself are order 0.
    pub fn order(&self) -> usize {
        match self {
            JetVariable::Independent(_) => 0,
            JetVariable::Dependent { index, .. } => index.order(),
        }
    }

    pub fn is_base(&self) -> bool {
        self.order() == 0
    }

    /// Differentiate a dependent coordinate once more along `var`.
    pub fn extend(&self, var: char) -> Option<Self> {
        match self {
            JetVariable::Independent(_) => None,
            JetVariable::Dependent { name, index } => Some(JetVariable::Dependent {
                name: name.clone(),
                index: index.extend(var),
            }),
        }
    }
}

impl fmt::Display for JetVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            JetVariable::Independent(c) => write!(f, "{c}"),
            JetVariable::Dependent { name, index } => {
                write!(f, "{name}")?;
                if index.order() > 0 {
                    write!(f, "_")?;
                    for c in index.entries() {
                        write!(f, "{c}")?;
                    }
                }
                Ok(())
            }
        }
    }
}

/// Anything an expression can be evaluated against.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Symbol {
    Jet(JetVariable),
    /// Physical parameter resolved at evaluation time, e.g. `t0` or `nu`.
    Named(Arc<str>),
}

impl Symbol {
    pub fn named(name: &str) -> Self {
        Symbol::Named(Arc::from(name))
    }
}

impl From<JetVariable> for Symbol {
    fn from(v: JetVariable) -> Self {
        Symbol::Jet(v)
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol::Jet(v) => v.fmt(f),
            Symbol::Named(n) => f.write_str(n),
        }
    }
}

/// The finite-order jet space `X x U^(n)` a computation lives in.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JetSpace {
    /// Independent variables in listing order.
    pub independents: Vec<char>,
    pub dependents: Vec<String>,
    /// Prolongation order `n`.
    pub order: usize,
    /// When set, the system is first order in this variable: the only
    /// derivative involving it is the single `u_t`, all others are purely in
    /// the remaining variables.
    pub evolution: Option<char>,
}

impl JetSpace {
    /// `(t, x; u)` of order `n`, first order in `t`.
    pub fn evolution_1d(order: usize) -> Self {
        JetSpace {
            independents: vec!['t', 'x'],
            dependents: vec!["u".into()],
            order,
            evolution: Some('t'),
        }
    }

    /// `(x; u)` of order `n` with all derivatives.
    pub fn plane(order: usize) -> Self {
        JetSpace {
            independents: vec!['x'],
            dependents: vec!["u".into()],
            order,
            evolution: None,
        }
    }

    pub fn with_order(&self, order: usize) -> Self {
        JetSpace {
            order,
            ..self.clone()
        }
    }

    /// Multi-indices of order `1..=order` admitted by this space.
    pub fn multi_indices(&self) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        let mut layer = vec![MultiIndex::empty()];
        for _ in 0..self.order {
            let mut next: Vec<MultiIndex> = Vec::new();
            for j in &layer {
                for &c in &self.independents {
                    // keep the index sorted by only appending non-decreasing entries
                    if j.entries().last().is_some_and(|l| *l > c) {
                        continue;
                    }
                    let k = j.extend(c);
                    if self.admits(&k) {
                        next.push(k);
                    }
                }
            }
            out.extend(next.iter().cloned());
            layer = next;
        }
        out.sort();
        out.dedup();
        out
    }

    pub fn admits(&self, index: &MultiIndex) -> bool {
        if index.order() > self.order {
            return false;
        }
        if !index.entries().iter().all(|c| self.independents.contains(c)) {
            return false;
        }
        match self.evolution {
            Some(t) if index.count(t) > 0 => index.order() == 1,
            _ => true,
        }
    }

    /// Whether `v` is a coordinate of this space.
    pub fn contains(&self, v: &JetVariable) -> bool {
        match v {
            JetVariable::Independent(c) => self.independents.contains(c),
            JetVariable::Dependent { name, index } => {
                self.dependents.iter().any(|d| d.as_str() == &**name) && self.admits(index)
            }
        }
    }

    /// All coordinates: independents, then per dependent `u, u_J...` in
    /// graded order.
    pub fn coordinates(&self) -> Vec<JetVariable> {
        let mut out: Vec<JetVariable> = self
            .independents
            .iter()
            .map(|c| JetVariable::Independent(*c))
            .collect();
        let indices = self.multi_indices();
        for d in &self.dependents {
            out.push(JetVariable::dependent(d, MultiIndex::empty()));
            for j in &indices {
                out.push(JetVariable::dependent(d, j.clone()));
            }
        }
        out
    }

    /// Coordinates of order at least one.
    pub fn derivative_coordinates(&self) -> Vec<JetVariable> {
        self.coordinates()
            .into_iter()
            .filter(|v| v.order() > 0)
            .collect()
    }
}

//! The benchmark systems: governing equations, symmetry generators and
//! physical parameters.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::expr::{Expr, JetSpace};
use crate::liealg::VectorField;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SystemId {
    Kdv,
    Ks,
    Burgers,
    Nkdv,
    So2Demo,
}

#[derive(Debug, thiserror::Error)]
#[error("unknown system `{0}` (expected kdv, ks, burgers, nkdv or so2-demo)")]
pub struct UnknownSystem(pub String);

impl FromStr for SystemId {
    type Err = UnknownSystem;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "kdv" => SystemId::Kdv,
            "ks" => SystemId::Ks,
            "burgers" => SystemId::Burgers,
            "nkdv" => SystemId::Nkdv,
            "so2-demo" | "so2" => SystemId::So2Demo,
            _ => return Err(UnknownSystem(s.to_string())),
        })
    }
}

impl fmt::Display for SystemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SystemId::Kdv => "kdv",
            SystemId::Ks => "ks",
            SystemId::Burgers => "burgers",
            SystemId::Nkdv => "nkdv",
            SystemId::So2Demo => "so2-demo",
        })
    }
}

fn p(s: &str) -> Expr {
    Expr::parse(s).expect("catalog expression parses")
}

impl SystemId {
    pub const PDES: [SystemId; 4] = [SystemId::Kdv, SystemId::Ks, SystemId::Burgers, SystemId::Nkdv];

    /// Jet space the system's invariants live in.
    pub fn jet_space(self) -> JetSpace {
        match self {
            SystemId::So2Demo => JetSpace::plane(1),
            _ => JetSpace::evolution_1d(4),
        }
    }

    /// Left side `F` of `F(x, u^(n)) = 0`; `None` for the SO(2) demo, which
    /// has no governing equation.
    pub fn equation(self) -> Option<Expr> {
        Some(match self {
            SystemId::Kdv => p("u_t + u*u_x + u_xxx"),
            SystemId::Ks => p("u_t + u_xx + u_xxxx + u*u_x"),
            SystemId::Burgers => p("u_t + u*u_x - nu*u_xx"),
            SystemId::Nkdv => p("exp(-t/t0)*u_t + u*u_x + u_xxx"),
            SystemId::So2Demo => return None,
        })
    }

    pub fn generators(self) -> Vec<VectorField> {
        let dx = VectorField::translation('x').named("v1");
        match self {
            SystemId::Kdv | SystemId::Ks | SystemId::Burgers => vec![
                dx,
                VectorField::translation('t').named("v2"),
                VectorField::new([('x', p("t"))], [("u", Expr::one())]).named("v3"),
            ],
            SystemId::Nkdv => vec![
                dx,
                VectorField::new([('t', p("exp(-t/t0)"))], []).named("v2"),
                VectorField::new([('x', p("t0*(exp(t/t0) - 1)"))], [("u", Expr::one())])
                    .named("v3"),
            ],
            SystemId::So2Demo => {
                vec![VectorField::new([('x', p("-u"))], [("u", p("x"))]).named("v")]
            }
        }
    }

    /// Differential invariants; the evolution invariant comes first.
    pub fn invariants(self) -> Vec<Expr> {
        let tail = ["u_x", "u_xx", "u_xxx", "u_xxxx"];
        let head = match self {
            SystemId::Kdv | SystemId::Ks | SystemId::Burgers => "u_t + u*u_x",
            SystemId::Nkdv => "exp(-t/t0)*u_t + u*u_x",
            // the catalog stores x^2 + u^2 in place of its square root
            SystemId::So2Demo => return vec![p("x^2 + u^2"), p("(x*u_x - u)/(u*u_x + x)")],
        };
        std::iter::once(head).chain(tail).map(p).collect()
    }

    /// Default physical parameters.
    pub fn default_constants(self) -> BTreeMap<String, f64> {
        let mut m = BTreeMap::new();
        match self {
            SystemId::Burgers => {
                m.insert("nu".to_string(), 0.1);
            }
            SystemId::Nkdv => {
                m.insert("t0".to_string(), 1.0);
            }
            _ => {}
        }
        m
    }

    /// Regression target of the raw-derivative baselines.
    pub fn baseline_target(self) -> Expr {
        match self {
            SystemId::Nkdv => p("exp(-t/t0)*u_t"),
            _ => p("u_t"),
        }
    }

    /// Inputs of the baselines' second-order library.
    pub fn baseline_inputs(self) -> Vec<Expr> {
        ["u", "u_x", "u_xx", "u_xxx", "u_xxxx"].into_iter().map(p).collect()
    }

    /// Default sparsity threshold.
    pub fn default_threshold(self) -> f64 {
        match self {
            SystemId::Burgers => 5e-3,
            _ => 0.5,
        }
    }
}

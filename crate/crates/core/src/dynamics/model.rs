//! Time integration of an explicit evolution equation recovered from a
//! model `F(t, x, u, u_t, u_x, …) = 0`.
//!
//! `F` is split as `a(t) u_t + Σ_m c_m ∂_x^m u + N(t, x, u, u_x, …)` with
//! constant `c_m`. The linear part is absorbed by an integrating factor
//! `exp(Λ S(t))`, `Λ = -Σ c_m (ik)^m`, `S' = 1/a`, and the rest is stepped
//! with Lawson's RK4.

use rustfft::num_complex::Complex64;

use super::spectral::Spectral;
use super::{check_finite, DynError, SolverConfig, TrajectoryGrid, TrajectoryMeta};
use crate::expr::{Binding, CompiledExpr, Expr, JetVariable, MultiIndex, Node, Symbol};
use crate::regress::SparseModel;
use crate::system::SystemId;

const MAX_SPATIAL: usize = 4;
/// RK4 stability margin on the imaginary axis, with headroom.
const STABLE_RHO_H: f64 = 2.0;
const MAX_SUBSTEPS: usize = 20_000;

fn ux(m: usize) -> JetVariable {
    JetVariable::dependent("u", MultiIndex::new(vec!['x'; m]))
}

fn slots() -> Vec<Symbol> {
    let mut s = vec![Symbol::Jet(JetVariable::independent('t')), Symbol::Jet(JetVariable::independent('x'))];
    s.extend((0..=MAX_SPATIAL).map(|m| Symbol::Jet(ux(m))));
    s
}

/// `a(t) u_t + Σ c_m ∂^m u + N = 0`.
#[derive(Clone, Debug)]
pub struct EvolutionForm {
    pub a: Expr,
    pub linear: Vec<f64>,
    pub nonlinear: Expr,
}

impl EvolutionForm {
    pub fn from_equation(f: &Expr, constants: &Binding) -> Result<Self, DynError> {
        let f = f.simplify();
        let ut = JetVariable::deriv("u", "t");
        let a = f.partial_derivative(&ut);
        let t_only = a.jet_variables().iter().all(|v| *v == JetVariable::independent('t'));
        if a.is_zero() || !t_only {
            return Err(DynError::NotEvolution(format!("∂F/∂u_t = {a}")));
        }
        let b = f.substitute(&ut, &Expr::zero()).simplify();
        for v in b.jet_variables() {
            let ok = match &v {
                JetVariable::Independent(_) => true,
                JetVariable::Dependent { index, .. } => {
                    index.count('t') == 0 && index.order() <= MAX_SPATIAL
                }
            };
            if !ok {
                return Err(DynError::NotEvolution(format!("unsupported variable {v}")));
            }
        }
        let terms: Vec<Expr> = match b.node() {
            Node::Sum(ts) => ts.clone(),
            _ => vec![b.clone()],
        };
        let mut linear = vec![0.0; MAX_SPATIAL + 1];
        let mut rest = Vec::new();
        for term in terms {
            let vars = term.jet_variables();
            let single = (vars.len() == 1).then(|| vars.into_iter().next().expect("one variable"));
            let m = single.as_ref().and_then(|v| (0..=MAX_SPATIAL).find(|m| ux(*m) == *v));
            if let (Some(v), Some(m)) = (single, m) {
                let d = term.partial_derivative(&v);
                if d.jet_variables().is_empty() {
                    linear[m] += d.evaluate(constants)?;
                    continue;
                }
            }
            rest.push(term);
        }
        Ok(EvolutionForm {
            a,
            linear,
            nonlinear: Expr::sum(rest).simplify(),
        })
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
const GL5: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];

struct Rhs {
    sp: Spectral,
    inv_a: CompiledExpr,
    n: CompiledExpr,
    /// `∂N/∂(∂^m u)` for the stiffness estimate.
    dn: Vec<Option<CompiledExpr>>,
    orders: usize,
    lam: Vec<Complex64>,
    x: Vec<f64>,
}

impl Rhs {
    fn s(&self, t: f64) -> f64 {
        let mut slot = [0.0; 7];
        slot[0] = t;
        self.inv_a.eval(&slot)
    }

    /// `∫_{t0}^{t1} 1/a`.
    fn big_s(&self, t0: f64, t1: f64) -> f64 {
        let (c, r) = (0.5 * (t0 + t1), 0.5 * (t1 - t0));
        r * GL5.iter().map(|(z, w)| w * self.s(c + r * z)).sum::<f64>()
    }

    fn propagator(&self, t0: f64, t1: f64) -> Vec<Complex64> {
        let ds = self.big_s(t0, t1);
        self.lam.iter().map(|l| (l * ds).exp()).collect()
    }

    fn fields(&mut self, v: &[Complex64]) -> Vec<Vec<f64>> {
        (0..=self.orders).map(|m| self.sp.derivative(v, m as u32)).collect()
    }

    /// `-s(t) · FFT(N)`, dealiased.
    fn eval(&mut self, t: f64, v: &[Complex64]) -> Vec<Complex64> {
        let d = self.fields(v);
        let nx = self.sp.nx;
        let mut slot = [0.0; 7];
        slot[0] = t;
        let mut nl = vec![0.0; nx];
        for i in 0..nx {
            slot[1] = self.x[i];
            for (m, f) in d.iter().enumerate() {
                slot[2 + m] = f[i];
            }
            nl[i] = self.n.eval(&slot);
        }
        let s = self.s(t);
        let mut w = self.sp.forward(&nl);
        for (j, c) in w.iter_mut().enumerate() {
            *c *= -s * self.sp.mask[j];
        }
        w
    }

    /// Substeps needed over `[t, t + dt]` so that `h · ρ ≤ STABLE_RHO_H`.
    fn substeps(&mut self, t: f64, dt: f64, v: &[Complex64], min: usize) -> usize {
        let d = self.fields(v);
        let kmax = self.sp.k.iter().zip(&self.sp.mask).filter(|(_, m)| **m > 0.0).map(|(k, _)| k.abs()).fold(0.0, f64::max);
        let smax = [t, t + 0.5 * dt, t + dt].iter().map(|&tt| self.s(tt).abs()).fold(0.0, f64::max);
        let mut slot = [0.0; 7];
        slot[0] = t;
        let mut rho = 0.0;
        for (m, dn) in self.dn.iter().enumerate() {
            let Some(dn) = dn else { continue };
            let mut mx = 0.0f64;
            for i in 0..self.sp.nx {
                slot[1] = self.x[i];
                for (q, f) in d.iter().enumerate() {
                    slot[2 + q] = f[i];
                }
                mx = mx.max(dn.eval(&slot).abs());
            }
            rho += mx * kmax.powi(m as i32);
        }
        let need = (dt * smax * rho / STABLE_RHO_H).ceil() as usize;
        need.max(min)
    }
}

/// Integrate `F = 0` from `ic` sampled at `t_start`, on the periodic grid of
/// `ic.len()` points over `cfg.length`, storing `cfg.nt + 1` samples.
pub fn integrate_equation(
    f: &Expr,
    ic: &[f64],
    t_start: f64,
    cfg: &SolverConfig,
    constants: &Binding,
    system: SystemId,
) -> Result<TrajectoryGrid, DynError> {
    let form = EvolutionForm::from_equation(f, constants)?;
    let nx = ic.len();
    if nx < 16 || !nx.is_power_of_two() {
        return Err(DynError::Config(format!("model grid of {nx} points must be a power of two >= 16")));
    }
    let sp = Spectral::new(nx, cfg.length, cfg.dealias);
    let lam: Vec<Complex64> = (0..nx)
        .map(|j| {
            form.linear
                .iter()
                .enumerate()
                .map(|(m, c)| -c * sp.symbol(j, m as u32))
                .sum()
        })
        .collect();
    let slots = slots();
    let orders = (0..=MAX_SPATIAL)
        .rev()
        .find(|m| form.nonlinear.contains(&ux(*m)))
        .unwrap_or(0);
    let dn = (0..=MAX_SPATIAL)
        .map(|m| {
            let d = form.nonlinear.partial_derivative(&ux(m));
            if d.is_zero() { Ok(None) } else { d.compile(&slots, constants).map(Some) }
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut rhs = Rhs {
        inv_a: form.a.clone().pow(-1).simplify().compile(&slots, constants)?,
        n: form.nonlinear.compile(&slots, constants)?,
        dn,
        orders,
        lam,
        x: super::stored_grid(cfg.length, nx),
        sp,
    };
    let mut v = rhs.sp.forward(ic);
    let mut u = Vec::with_capacity((cfg.nt + 1) * nx);
    let mut t = Vec::with_capacity(cfg.nt + 1);
    u.extend_from_slice(ic);
    t.push(t_start);
    check_finite(ic, 0, t_start)?;
    let min_sub = 4 * cfg.substeps.max(1);
    for k in 1..=cfg.nt {
        let t0 = t_start + (k - 1) as f64 * cfg.dt;
        let m = rhs.substeps(t0, cfg.dt, &v, min_sub);
        if m > MAX_SUBSTEPS {
            return Err(DynError::BlowUp { step: k, t: t0, reason: format!("stiffness needs {m} substeps") });
        }
        let hh = cfg.dt / m as f64;
        for q in 0..m {
            let ts = t0 + q as f64 * hh;
            lawson_step(&mut rhs, &mut v, ts, hh);
        }
        let tk = t_start + k as f64 * cfg.dt;
        let row = rhs.sp.inverse(&v);
        check_finite(&row, k, tk)?;
        u.extend_from_slice(&row);
        t.push(tk);
    }
    let params = constants_of(f, constants);
    Ok(TrajectoryGrid {
        x: rhs.x.clone(),
        t,
        length: cfg.length,
        u,
        meta: TrajectoryMeta {
            system,
            params,
            ic_seed: None,
            noise_sigma: 0.0,
            noise_seed: None,
        },
    })
}

fn constants_of(f: &Expr, b: &Binding) -> std::collections::BTreeMap<String, f64> {
    f.named_constants()
        .into_iter()
        .filter_map(|n| b.get(&Symbol::named(&n)).map(|v| (n, v)))
        .collect()
}

fn lawson_step(rhs: &mut Rhs, v: &mut [Complex64], t: f64, h: f64) {
    let n = v.len();
    let e_half = rhs.propagator(t, t + 0.5 * h);
    let e_2 = rhs.propagator(t + 0.5 * h, t + h);
    let e_full: Vec<Complex64> = (0..n).map(|j| e_half[j] * e_2[j]).collect();
    let k1 = rhs.eval(t, v);
    let s: Vec<Complex64> = (0..n).map(|j| e_half[j] * (v[j] + 0.5 * h * k1[j])).collect();
    let k2 = rhs.eval(t + 0.5 * h, &s);
    let s: Vec<Complex64> = (0..n).map(|j| e_half[j] * v[j] + 0.5 * h * k2[j]).collect();
    let k3 = rhs.eval(t + 0.5 * h, &s);
    let s: Vec<Complex64> = (0..n).map(|j| e_full[j] * v[j] + h * e_2[j] * k3[j]).collect();
    let k4 = rhs.eval(t + h, &s);
    for j in 0..n {
        v[j] = e_full[j] * v[j]
            + h / 6.0 * (e_full[j] * k1[j] + 2.0 * e_2[j] * (k2[j] + k3[j]) + k4[j]);
    }
}

/// Integrate a discovered model from `ic` at `t_start`.
pub fn integrate_model(
    model: &SparseModel,
    ic: &[f64],
    t_start: f64,
    cfg: &SolverConfig,
    constants: &Binding,
    system: SystemId,
) -> Result<TrajectoryGrid, DynError> {
    integrate_equation(&model.equation(), ic, t_start, cfg, constants, system)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{sinusoid_mixture, solve_pde};

    fn p(s: &str) -> Expr {
        Expr::parse(s).unwrap()
    }

    #[test]
    fn splits_linear_part() {
        let b = Binding::new().with_named("nu", 0.1);
        let f = EvolutionForm::from_equation(&p("u_t + u*u_x - nu*u_xx + 2*u_xxxx"), &b).unwrap();
        assert_eq!(f.linear, vec![0.0, 0.0, -0.1, 0.0, 2.0]);
        assert_eq!(f.nonlinear, p("u*u_x").simplify());
        assert_eq!(f.a, Expr::one());
        let f = EvolutionForm::from_equation(&p("exp(-t/t0)*u_t + u*u_x"), &b).unwrap();
        assert_eq!(f.a, p("exp(-t/t0)").simplify());
        assert!(EvolutionForm::from_equation(&p("u*u_t + u_x"), &b).is_err());
        assert!(EvolutionForm::from_equation(&p("u_x"), &b).is_err());
    }

    #[test]
    fn truth_matches_solver_on_kdv() {
        let cfg = SolverConfig { nt: 50, ..SolverConfig::default_for(SystemId::Kdv) };
        let ic = sinusoid_mixture(&[(1.0, 1, 0.3), (0.7, 2, 1.0)], &cfg.x_grid(), cfg.length);
        let a = solve_pde(SystemId::Kdv, &ic, &cfg).unwrap();
        let f = SystemId::Kdv.equation().unwrap();
        let b = integrate_equation(&f, &ic, 0.0, &cfg, &Binding::new(), SystemId::Kdv).unwrap();
        let last = a.nt() - 1;
        let mse: f64 = a.row(last).iter().zip(b.row(last)).map(|(p, q)| (p - q).powi(2)).sum::<f64>()
            / a.nx() as f64;
        assert!(mse < 1e-10, "{mse}");
    }

    #[test]
    fn inviscid_transport_blows_up_or_finishes() {
        let cfg = SolverConfig { nt: 300, ..SolverConfig::default_for(SystemId::Kdv) };
        let ic = sinusoid_mixture(&[(1.0, 1, 0.0)], &cfg.x_grid(), cfg.length);
        match integrate_equation(&p("u_t + u*u_x"), &ic, 0.0, &cfg, &Binding::new(), SystemId::Kdv) {
            Ok(tr) => assert!(tr.u.iter().all(|v| v.is_finite())),
            Err(DynError::BlowUp { .. }) => {}
            Err(e) => panic!("{e}"),
        }
    }
}

//! Ground-truth trajectories on periodic grids and integration of
//! discovered models.

mod io;
mod model;
mod spectral;

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::ExprError;
use crate::seed;
use crate::system::SystemId;

pub use io::{read_dataset, write_dataset, Dataset, Manifest};
pub use model::{integrate_equation, integrate_model, EvolutionForm};
pub use spectral::Spectral;

/// Solutions whose magnitude exceeds this are treated as blown up.
pub const BLOW_UP: f64 = 1e6;

#[derive(Debug, Error)]
pub enum DynError {
    #[error("solution blew up at step {step} (t = {t}): {reason}")]
    BlowUp { step: usize, t: f64, reason: String },
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error("equation is not affine in u_t with a coefficient depending on t only: {0}")]
    NotEvolution(String),
    #[error("{0} has no governing equation to solve")]
    NoEquation(SystemId),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("{path}: {msg}")]
    Io { path: String, msg: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Etdrk4,
    Rk4Spectral,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IcFamily {
    pub modes: [usize; 2],
    pub amplitude: [f64; 2],
    pub wavenumber: [i64; 2],
}

impl Default for IcFamily {
    fn default() -> Self {
        IcFamily {
            modes: [2, 3],
            amplitude: [0.5, 1.5],
            wavenumber: [1, 3],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub nx: usize,
    pub length: f64,
    /// Sampling interval of the stored trajectory.
    pub dt: f64,
    /// Number of sampling intervals; rows are `t_start + k·dt`, `k = 0..=nt`.
    pub nt: usize,
    /// Integration time discarded before the first stored sample.
    #[serde(default)]
    pub transient: f64,
    pub scheme: Scheme,
    #[serde(default = "yes")]
    pub dealias: bool,
    /// Internal solver steps per sampling interval.
    pub substeps: usize,
    /// Store every `x_stride`-th grid point.
    #[serde(default = "one")]
    pub x_stride: usize,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default)]
    pub ic: IcFamily,
}

fn yes() -> bool {
    true
}

fn one() -> usize {
    1
}

impl SolverConfig {
    pub fn default_for(system: SystemId) -> Self {
        let base = SolverConfig {
            nx: 256,
            length: 20.0,
            dt: 0.01,
            nt: 500,
            transient: 0.0,
            scheme: Scheme::Etdrk4,
            dealias: true,
            substeps: 2,
            x_stride: 1,
            params: system.default_constants(),
            ic: IcFamily::default(),
        };
        match system {
            SystemId::Kdv | SystemId::So2Demo => base,
            SystemId::Nkdv => SolverConfig { nt: 200, ..base },
            SystemId::Ks => SolverConfig {
                length: 32.0 * PI,
                dt: 0.05,
                nt: 500,
                transient: 25.0,
                substeps: 2,
                ..base
            },
            SystemId::Burgers => SolverConfig {
                nx: 512,
                length: 2.0 * PI,
                dt: 0.005,
                nt: 400,
                scheme: Scheme::Rk4Spectral,
                substeps: 16,
                ..base
            },
        }
    }

    pub fn horizon(&self) -> f64 {
        self.dt * self.nt as f64
    }

    pub fn param(&self, name: &str) -> Result<f64, DynError> {
        self.params
            .get(name)
            .copied()
            .ok_or_else(|| DynError::Config(format!("parameter `{name}` is required")))
    }

    pub fn validate(&self, system: SystemId) -> Result<(), DynError> {
        let bad = |m: String| Err(DynError::Config(m));
        if self.nx < 16 || !self.nx.is_power_of_two() {
            return bad(format!("nx = {} must be a power of two >= 16", self.nx));
        }
        if self.x_stride == 0 || self.nx % self.x_stride != 0 || self.nx / self.x_stride < 16 {
            return bad(format!("x_stride = {} must divide nx leaving >= 16 points", self.x_stride));
        }
        if self.nt + 1 < 8 {
            return bad(format!("nt = {} gives fewer than 8 samples", self.nt));
        }
        if !(self.dt > 0.0 && self.length > 0.0 && self.transient >= 0.0) || self.substeps == 0 {
            return bad("dt, length and substeps must be positive".into());
        }
        match system {
            SystemId::Burgers if !(self.param("nu")? > 0.0) => bad("nu must be positive".into()),
            SystemId::Nkdv if !(self.param("t0")? > 0.0) => bad("t0 must be positive".into()),
            SystemId::So2Demo => Err(DynError::NoEquation(system)),
            _ => Ok(()),
        }
    }

    /// Solver grid.
    pub fn x_grid(&self) -> Vec<f64> {
        stored_grid(self.length, self.nx)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub system: SystemId,
    pub params: BTreeMap<String, f64>,
    pub ic_seed: Option<u64>,
    pub noise_sigma: f64,
    pub noise_seed: Option<u64>,
}

/// Samples `u(t_k, x_i)` on a uniform periodic grid, stored row-major by
/// time.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryGrid {
    pub x: Vec<f64>,
    pub t: Vec<f64>,
    pub length: f64,
    pub u: Vec<f64>,
    pub meta: TrajectoryMeta,
}

impl TrajectoryGrid {
    pub fn nx(&self) -> usize {
        self.x.len()
    }

    pub fn nt(&self) -> usize {
        self.t.len()
    }

    pub fn h(&self) -> f64 {
        self.length / self.nx() as f64
    }

    pub fn dt(&self) -> f64 {
        self.t[1] - self.t[0]
    }

    pub fn row(&self, k: usize) -> &[f64] {
        let n = self.nx();
        &self.u[k * n..(k + 1) * n]
    }

    pub fn at(&self, k: usize, i: usize) -> f64 {
        self.u[k * self.nx() + i]
    }

    /// Every `stride`-th time sample.
    pub fn thin_time(&self, stride: usize) -> TrajectoryGrid {
        let keep: Vec<usize> = (0..self.nt()).step_by(stride.max(1)).collect();
        TrajectoryGrid {
            x: self.x.clone(),
            t: keep.iter().map(|&k| self.t[k]).collect(),
            length: self.length,
            u: keep.iter().flat_map(|&k| self.row(k).iter().copied()).collect(),
            meta: self.meta.clone(),
        }
    }

    /// Add `N(0, (σ·std u)²)` to every sample.
    pub fn add_noise(&mut self, sigma: f64, seed: u64) {
        self.meta.noise_sigma = sigma;
        self.meta.noise_seed = Some(seed);
        if sigma == 0.0 {
            return;
        }
        let n = self.u.len() as f64;
        let mean = self.u.iter().sum::<f64>() / n;
        let std = (self.u.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        let normal = Normal::new(0.0, sigma * std).expect("finite noise scale");
        let mut rng = seed::rng(seed, 0);
        for v in &mut self.u {
            *v += normal.sample(&mut rng);
        }
    }
}

/// Zero-mean sinusoid mixture `Σ a_j sin(2π k_j x / L + φ_j)`.
pub fn sample_initial_condition(family: &IcFamily, x: &[f64], length: f64, seed: u64) -> Vec<f64> {
    let mut rng = seed::rng(seed, 0);
    let m = rng.random_range(family.modes[0]..=family.modes[1]);
    let modes: Vec<(f64, i64, f64)> = (0..m)
        .map(|_| {
            (
                rng.random_range(family.amplitude[0]..=family.amplitude[1]),
                rng.random_range(family.wavenumber[0]..=family.wavenumber[1]),
                rng.random_range(0.0..2.0 * PI),
            )
        })
        .collect();
    sinusoid_mixture(&modes, x, length)
}

/// `Σ a sin(2π k x / L + φ)` with the grid mean removed.
pub fn sinusoid_mixture(modes: &[(f64, i64, f64)], x: &[f64], length: f64) -> Vec<f64> {
    let mut u: Vec<f64> = x
        .iter()
        .map(|&xi| {
            modes
                .iter()
                .map(|(a, k, ph)| a * (2.0 * PI * *k as f64 * xi / length + ph).sin())
                .sum()
        })
        .collect();
    let mean = u.iter().sum::<f64>() / u.len() as f64;
    for v in &mut u {
        *v -= mean;
    }
    u
}

/// `i · L / n`, the grid every stored trajectory uses.
pub fn stored_grid(length: f64, n: usize) -> Vec<f64> {
    let h = length / n as f64;
    (0..n).map(|i| i as f64 * h).collect()
}

fn check_finite(u: &[f64], step: usize, t: f64) -> Result<(), DynError> {
    match u.iter().find(|v| !v.is_finite() || v.abs() > BLOW_UP) {
        None => Ok(()),
        Some(v) => Err(DynError::BlowUp {
            step,
            t,
            reason: format!("|u| reached {v}"),
        }),
    }
}

/// Linear symbol `L(k)` and whether the `-½ (u²)_x` flux is present, for
/// `u_t = L u - u u_x`.
fn linear_symbol(system: SystemId, sp: &Spectral, cfg: &SolverConfig) -> Result<Vec<Complex64>, DynError> {
    let n = sp.nx;
    Ok(match system {
        SystemId::Kdv | SystemId::Nkdv => (0..n).map(|j| -sp.symbol(j, 3)).collect(),
        SystemId::Ks => (0..n).map(|j| -sp.symbol(j, 2) - sp.symbol(j, 4)).collect(),
        SystemId::Burgers => {
            let nu = cfg.param("nu")?;
            (0..n).map(|j| nu * sp.symbol(j, 2)).collect()
        }
        SystemId::So2Demo => return Err(DynError::NoEquation(system)),
    })
}

/// Pseudo-spectral solve from `ic` (length `nx`). KdV and KS step with
/// ETDRK4, Burgers with RK4, and nKdV maps to KdV through
/// `τ = t0 (e^{t/t0} - 1)`.
pub fn solve_pde(system: SystemId, ic: &[f64], cfg: &SolverConfig) -> Result<TrajectoryGrid, DynError> {
    cfg.validate(system)?;
    if ic.len() != cfg.nx {
        return Err(DynError::Config(format!("ic has {} points, nx = {}", ic.len(), cfg.nx)));
    }
    let mut sp = Spectral::new(cfg.nx, cfg.length, cfg.dealias);
    let lin = linear_symbol(system, &sp, cfg)?;
    let mut v = sp.forward(ic);
    let h = cfg.dt / cfg.substeps as f64;

    // time map from physical time to the solver's clock
    let clock: Box<dyn Fn(f64) -> f64> = match system {
        SystemId::Nkdv => {
            let t0 = cfg.param("t0")?;
            Box::new(move |t: f64| t0 * (t / t0).exp_m1())
        }
        _ => Box::new(|t: f64| t),
    };
    let t_start = cfg.transient;
    let scheme = if system == SystemId::Burgers { Scheme::Rk4Spectral } else { cfg.scheme };

    let mut etd_cache: Option<(f64, spectral::Etdrk4)> = None;
    let mut advance = |v: &mut Vec<Complex64>, sp: &mut Spectral, span: f64, step: usize, t: f64| -> Result<(), DynError> {
        if span <= 0.0 {
            return Ok(());
        }
        let m = (span / h - 1e-9).ceil().max(1.0) as usize;
        let hh = span / m as f64;
        match scheme {
            Scheme::Etdrk4 => {
                let reuse = matches!(&etd_cache, Some((h0, _)) if *h0 == hh);
                if !reuse {
                    etd_cache = Some((hh, spectral::Etdrk4::new(&lin, hh)));
                }
                let et = &etd_cache.as_ref().expect("set above").1;
                for _ in 0..m {
                    et.step(v, |w| sp.burgers_flux(w));
                }
            }
            Scheme::Rk4Spectral => {
                for _ in 0..m {
                    spectral::rk4_step(v, hh, |w| {
                        let mut f = sp.burgers_flux(w);
                        for j in 0..f.len() {
                            f[j] += lin[j] * w[j];
                        }
                        f
                    });
                }
            }
        }
        if v.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(DynError::BlowUp { step, t, reason: "non-finite spectrum".into() });
        }
        Ok(())
    };

    advance(&mut v, &mut sp, clock(t_start) - clock(0.0), 0, t_start)?;
    let stride = cfg.x_stride;
    let mut u = Vec::with_capacity((cfg.nt + 1) * cfg.nx / stride);
    let mut t = Vec::with_capacity(cfg.nt + 1);
    for k in 0..=cfg.nt {
        let tk = t_start + k as f64 * cfg.dt;
        if k > 0 {
            let prev = t_start + (k - 1) as f64 * cfg.dt;
            advance(&mut v, &mut sp, clock(tk) - clock(prev), k, tk)?;
        }
        let row = sp.inverse(&v);
        check_finite(&row, k, tk)?;
        u.extend(row.iter().step_by(stride));
        t.push(tk);
    }
    Ok(TrajectoryGrid {
        x: stored_grid(cfg.length, cfg.nx / stride),
        t,
        length: cfg.length,
        u,
        meta: TrajectoryMeta {
            system,
            params: cfg.params.clone(),
            ic_seed: None,
            noise_sigma: 0.0,
            noise_seed: None,
        },
    })
}

/// Solve from the seeded initial condition and add noise.
pub fn generate_trajectory(
    system: SystemId,
    cfg: &SolverConfig,
    ic_seed: u64,
    noise_sigma: f64,
    noise_seed: u64,
) -> Result<TrajectoryGrid, DynError> {
    let ic = sample_initial_condition(&cfg.ic, &cfg.x_grid(), cfg.length, ic_seed);
    let mut traj = solve_pde(system, &ic, cfg)?;
    traj.meta.ic_seed = Some(ic_seed);
    traj.add_noise(noise_sigma, noise_seed);
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sine_ic(cfg: &SolverConfig) -> Vec<f64> {
        sinusoid_mixture(&[(1.0, 1, 0.0)], &cfg.x_grid(), cfg.length)
    }

    #[test]
    fn single_mode_ic_is_a_sine() {
        let x: Vec<f64> = (0..32).map(|i| i as f64 * 20.0 / 32.0).collect();
        let u = sinusoid_mixture(&[(1.0, 1, 0.0)], &x, 20.0);
        for (xi, ui) in x.iter().zip(&u) {
            assert!((ui - (2.0 * PI * xi / 20.0).sin()).abs() < 1e-12);
        }
    }

    #[test]
    fn seeded_ics_are_zero_mean_and_distinct() {
        let fam = IcFamily::default();
        let x = SolverConfig::default_for(SystemId::Kdv).x_grid();
        let a = sample_initial_condition(&fam, &x, 20.0, 1);
        let b = sample_initial_condition(&fam, &x, 20.0, 2);
        assert!(a.iter().sum::<f64>().abs() / (a.len() as f64) < 1e-12);
        assert!(a.iter().zip(&b).map(|(p, q)| (p - q).powi(2)).sum::<f64>() > 0.0);
        assert_eq!(a, sample_initial_condition(&fam, &x, 20.0, 1));
    }

    #[test]
    fn kdv_conserves_mass() {
        let cfg = SolverConfig { nt: 50, ..SolverConfig::default_for(SystemId::Kdv) };
        let ic: Vec<f64> = sine_ic(&cfg).iter().map(|v| v + 0.5).collect();
        let tr = solve_pde(SystemId::Kdv, &ic, &cfg).unwrap();
        let m0: f64 = tr.row(0).iter().sum();
        let m1: f64 = tr.row(tr.nt() - 1).iter().sum();
        assert!(((m1 - m0) / m0).abs() < 1e-10);
    }

    #[test]
    fn burgers_energy_decays() {
        let cfg = SolverConfig { nt: 40, ..SolverConfig::default_for(SystemId::Burgers) };
        let tr = solve_pde(SystemId::Burgers, &sine_ic(&cfg), &cfg).unwrap();
        let e: Vec<f64> = (0..tr.nt()).map(|k| tr.row(k).iter().map(|v| v * v).sum()).collect();
        assert!(e.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn rejects_bad_configs() {
        let mut cfg = SolverConfig::default_for(SystemId::Burgers);
        cfg.params.insert("nu".into(), 0.0);
        assert!(cfg.validate(SystemId::Burgers).is_err());
        let cfg = SolverConfig { nx: 100, ..SolverConfig::default_for(SystemId::Kdv) };
        assert!(cfg.validate(SystemId::Kdv).is_err());
    }

    #[test]
    fn noise_is_deterministic() {
        let cfg = SolverConfig { nt: 10, ..SolverConfig::default_for(SystemId::Kdv) };
        let a = generate_trajectory(SystemId::Kdv, &cfg, 3, 1e-3, 4).unwrap();
        let b = generate_trajectory(SystemId::Kdv, &cfg, 3, 1e-3, 4).unwrap();
        let c = generate_trajectory(SystemId::Kdv, &cfg, 3, 0.0, 4).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.u, c.u);
    }
}

//! Finite-difference prolongation of trajectory data and evaluation of
//! symbolic features on it.

use std::collections::BTreeMap;
use std::path::Path;

use thiserror::Error;

use crate::dynamics::TrajectoryGrid;
use crate::expr::{Binding, Expr, ExprError, JetVariable, MultiIndex, Symbol};

#[derive(Debug, Error)]
pub enum JetError {
    #[error("grid too small: {0}")]
    GridTooSmall(String),
    #[error("`{0}` is not available on this jet grid")]
    Unavailable(JetVariable),
    #[error("feature matrices disagree on columns")]
    ColumnMismatch,
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("{path}: {msg}")]
    Io { path: String, msg: String },
}

/// Trajectory data with central-difference estimates of `u_t` and
/// `u_x, …, u_{x^n}`. Arrays cover time rows `t_range.0 ..= t_range.1` of
/// the base trajectory.
#[derive(Clone, Debug)]
pub struct JetGrid {
    pub base: TrajectoryGrid,
    pub derivs: BTreeMap<MultiIndex, Vec<f64>>,
    pub t_range: (usize, usize),
}

fn wrap(i: isize, n: usize) -> usize {
    i.rem_euclid(n as isize) as usize
}

/// Periodic central stencils, all second order.
fn spatial(row: &[f64], m: usize, h: f64) -> Vec<f64> {
    let n = row.len();
    let at = |i: usize, o: isize| row[wrap(i as isize + o, n)];
    (0..n)
        .map(|i| match m {
            1 => (at(i, 1) - at(i, -1)) / (2.0 * h),
            2 => (at(i, 1) - 2.0 * at(i, 0) + at(i, -1)) / (h * h),
            3 => (0.5 * at(i, 2) - at(i, 1) + at(i, -1) - 0.5 * at(i, -2)) / h.powi(3),
            4 => (at(i, 2) - 4.0 * at(i, 1) + 6.0 * at(i, 0) - 4.0 * at(i, -1) + at(i, -2)) / h.powi(4),
            _ => unreachable!("order checked by caller"),
        })
        .collect()
}

pub fn finite_differences(traj: &TrajectoryGrid, n: usize) -> Result<JetGrid, JetError> {
    if n > 4 {
        return Err(JetError::GridTooSmall(format!("spatial order {n} exceeds 4")));
    }
    if traj.nx() < 2 * n + 1 {
        return Err(JetError::GridTooSmall(format!("{} points for order {n}", traj.nx())));
    }
    if traj.nt() < 3 {
        return Err(JetError::GridTooSmall(format!("{} time samples", traj.nt())));
    }
    let (k0, k1) = (1, traj.nt() - 2);
    let h = traj.h();
    let dt = traj.dt();
    let mut derivs = BTreeMap::new();
    let ut: Vec<f64> = (k0..=k1)
        .flat_map(|k| {
            let (a, b) = (traj.row(k + 1), traj.row(k - 1));
            a.iter().zip(b).map(move |(p, q)| (p - q) / (2.0 * dt)).collect::<Vec<_>>()
        })
        .collect();
    derivs.insert(MultiIndex::new(vec!['t']), ut);
    for m in 1..=n {
        let d: Vec<f64> = (k0..=k1).flat_map(|k| spatial(traj.row(k), m, h)).collect();
        derivs.insert(MultiIndex::new(vec!['x'; m]), d);
    }
    Ok(JetGrid {
        base: traj.clone(),
        derivs,
        t_range: (k0, k1),
    })
}

impl JetGrid {
    pub fn rows(&self) -> usize {
        self.t_range.1 + 1 - self.t_range.0
    }

    pub fn points(&self) -> usize {
        self.rows() * self.base.nx()
    }

    /// Coordinates with data: `t, x, u` and every stored derivative.
    pub fn coordinates(&self) -> Vec<JetVariable> {
        let mut v = vec![
            JetVariable::independent('t'),
            JetVariable::independent('x'),
            JetVariable::dependent("u", MultiIndex::empty()),
        ];
        v.extend(self.derivs.keys().map(|j| JetVariable::dependent("u", j.clone())));
        v
    }

    fn slot_value(&self, v: &JetVariable, r: usize, i: usize) -> f64 {
        let nx = self.base.nx();
        let k = self.t_range.0 + r;
        match v {
            JetVariable::Independent('t') => self.base.t[k],
            JetVariable::Independent(_) => self.base.x[i],
            JetVariable::Dependent { index, .. } if index.order() == 0 => self.base.at(k, i),
            JetVariable::Dependent { index, .. } => self.derivs[index][r * nx + i],
        }
    }

    fn check(&self, e: &Expr) -> Result<(), JetError> {
        let have = self.coordinates();
        match e.jet_variables().into_iter().find(|v| !have.contains(v)) {
            Some(v) => Err(JetError::Unavailable(v)),
            None => Ok(()),
        }
    }

    /// Value of `e` at every point, row-major over (valid time row, x).
    pub fn evaluate(&self, e: &Expr, constants: &Binding) -> Result<Vec<f64>, JetError> {
        self.check(e)?;
        let coords = self.coordinates();
        let slots: Vec<Symbol> = coords.iter().cloned().map(Symbol::Jet).collect();
        let c = e.compile(&slots, constants)?;
        let nx = self.base.nx();
        let mut buf = vec![0.0; coords.len()];
        let mut out = Vec::with_capacity(self.points());
        for r in 0..self.rows() {
            for i in 0..nx {
                for (s, v) in coords.iter().enumerate() {
                    buf[s] = self.slot_value(v, r, i);
                }
                out.push(c.eval(&buf));
            }
        }
        Ok(out)
    }
}

/// Features evaluated on data. `values` is row-major, one row per point.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    pub columns: Vec<Expr>,
    pub target_expr: Expr,
    pub values: Vec<f64>,
    pub target: Vec<f64>,
    /// `(trajectory, time index, x index)` per row.
    pub points: Vec<(usize, usize, usize)>,
    pub dropped: usize,
}

impl FeatureMatrix {
    pub fn rows(&self) -> usize {
        self.target.len()
    }

    pub fn cols(&self) -> usize {
        self.columns.len()
    }

    pub fn row(&self, r: usize) -> &[f64] {
        let c = self.cols();
        &self.values[r * c..(r + 1) * c]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows()).map(|r| self.values[r * self.cols() + j]).collect()
    }

    pub fn to_matrix(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_row_slice(self.rows(), self.cols(), &self.values)
    }

    /// Concatenate rows of matrices with identical columns.
    pub fn stack(parts: Vec<FeatureMatrix>) -> Result<FeatureMatrix, JetError> {
        let mut it = parts.into_iter();
        let mut acc = it.next().ok_or(JetError::ColumnMismatch)?;
        for p in it {
            if p.columns != acc.columns || p.target_expr != acc.target_expr {
                return Err(JetError::ColumnMismatch);
            }
            acc.values.extend(p.values);
            acc.target.extend(p.target);
            acc.points.extend(p.points);
            acc.dropped += p.dropped;
        }
        Ok(acc)
    }

    /// Write `features.csv`: point indices, features, then target.
    pub fn write_csv(&self, path: &Path) -> Result<(), JetError> {
        let err = |e: &dyn std::fmt::Display| JetError::Io {
            path: path.display().to_string(),
            msg: e.to_string(),
        };
        let mut w = csv::Writer::from_path(path).map_err(|e| err(&e))?;
        let mut header = vec!["traj".to_string(), "t_index".into(), "x_index".into()];
        header.extend(self.columns.iter().map(|c| c.to_string()));
        header.push(self.target_expr.to_string());
        w.write_record(&header).map_err(|e| err(&e))?;
        for r in 0..self.rows() {
            let (a, b, c) = self.points[r];
            let mut rec = vec![a.to_string(), b.to_string(), c.to_string()];
            rec.extend(self.row(r).iter().map(|v| v.to_string()));
            rec.push(self.target[r].to_string());
            w.write_record(&rec).map_err(|e| err(&e))?;
        }
        w.flush().map_err(|e| err(&e))
    }
}

/// Sub-sampling of grid points used for regression.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Stride {
    pub t: usize,
    pub x: usize,
}

impl Default for Stride {
    fn default() -> Self {
        Stride { t: 1, x: 1 }
    }
}

/// Evaluate `feats` and `target` at every strided valid point of `jet`.
/// Rows with a non-finite entry are dropped and counted.
pub fn evaluate_features(
    jet: &JetGrid,
    feats: &[Expr],
    target: &Expr,
    constants: &Binding,
    stride: Stride,
    traj_index: usize,
) -> Result<FeatureMatrix, JetError> {
    let cols: Vec<Vec<f64>> = feats
        .iter()
        .map(|f| jet.evaluate(f, constants))
        .collect::<Result<_, _>>()?;
    let y = jet.evaluate(target, constants)?;
    let nx = jet.base.nx();
    let mut fm = FeatureMatrix {
        columns: feats.to_vec(),
        target_expr: target.clone(),
        values: Vec::new(),
        target: Vec::new(),
        points: Vec::new(),
        dropped: 0,
    };
    for r in (0..jet.rows()).step_by(stride.t.max(1)) {
        for i in (0..nx).step_by(stride.x.max(1)) {
            let p = r * nx + i;
            let row: Vec<f64> = cols.iter().map(|c| c[p]).collect();
            if !y[p].is_finite() || row.iter().any(|v| !v.is_finite()) {
                fm.dropped += 1;
                continue;
            }
            fm.values.extend(row);
            fm.target.push(y[p]);
            fm.points.push((traj_index, jet.t_range.0 + r, i));
        }
    }
    Ok(fm)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::dynamics::TrajectoryMeta;
    use crate::system::SystemId;

    fn grid(nx: usize, nt: usize, dt: f64, l: f64, f: impl Fn(f64, f64) -> f64) -> TrajectoryGrid {
        let x: Vec<f64> = (0..nx).map(|i| i as f64 * l / nx as f64).collect();
        let t: Vec<f64> = (0..nt).map(|k| k as f64 * dt).collect();
        let u = t.iter().flat_map(|&tk| x.iter().map(|&xi| f(tk, xi)).collect::<Vec<_>>()).collect();
        TrajectoryGrid {
            x,
            t,
            length: l,
            u,
            meta: TrajectoryMeta {
                system: SystemId::Kdv,
                params: Default::default(),
                ic_seed: None,
                noise_sigma: 0.0,
                noise_seed: None,
            },
        }
    }

    #[test]
    fn constant_field_has_zero_derivatives() {
        let g = finite_differences(&grid(16, 5, 0.1, 1.0, |_, _| 3.5), 4).unwrap();
        for d in g.derivs.values() {
            assert!(d.iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn second_derivative_of_sine() {
        let l = 20.0;
        let errs: Vec<f64> = [64, 128]
            .iter()
            .map(|&nx| {
                let g = finite_differences(&grid(nx, 3, 0.1, l, |_, x| (4.0 * PI * x / l).sin()), 2).unwrap();
                let d = &g.derivs[&MultiIndex::new(vec!['x', 'x'])];
                (0..nx)
                    .map(|i| (d[i] + (4.0 * PI / l).powi(2) * (4.0 * PI * g.base.x[i] / l).sin()).abs())
                    .fold(0.0, f64::max)
            })
            .collect();
        assert!((errs[0] / errs[1] - 4.0).abs() < 0.3);
    }

    #[test]
    fn stencil_family_is_consistent() {
        let l = 2.0 * PI;
        let nx = 256;
        let tr = grid(nx, 3, 0.1, l, |_, x| x.sin() + 0.3 * (2.0 * x).cos());
        let h = tr.h();
        let once = spatial(tr.row(0), 1, h);
        let twice = spatial(&once, 1, h);
        // D1·D1 is the 3-point second difference at spacing 2h on the same grid
        let wide_on_fine: Vec<f64> = (0..nx)
            .map(|i| {
                let a = tr.row(0);
                (a[(i + 2) % nx] - 2.0 * a[i] + a[(i + nx - 2) % nx]) / (4.0 * h * h)
            })
            .collect();
        for i in 0..nx {
            assert!((twice[i] - wide_on_fine[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn features_and_missing_constants() {
        let tr = grid(32, 6, 0.01, 20.0, |t, x| (x + t).sin());
        let g = finite_differences(&tr, 4).unwrap();
        let ut = Expr::parse("u_t").unwrap();
        let fm = evaluate_features(&g, &[Expr::parse("u_x").unwrap()], &ut, &Binding::new(), Stride::default(), 0)
            .unwrap();
        assert_eq!(fm.rows(), (6 - 2) * 32);
        assert_eq!(fm.dropped, 0);
        let err = evaluate_features(
            &g,
            &[Expr::parse("u_x").unwrap()],
            &Expr::parse("exp(-t/t0)*u_t").unwrap(),
            &Binding::new(),
            Stride::default(),
            0,
        )
        .unwrap_err();
        assert!(err.to_string().contains("t0"));
    }
}

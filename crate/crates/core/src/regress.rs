//! Sequentially thresholded least squares, plain and with the symmetry
//! regularizer `λ · E[Σ_v (pr v[F])²]`.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{Binding, Expr, ExprError, ParseContext};
use crate::jetgrid::{FeatureMatrix, JetError, JetGrid, Stride};
use crate::liealg::{LieError, ProlongedVectorField};

pub const DEFAULT_MAX_ITERS: usize = 20;
/// Ridge added to the equilibrated normal equations, relative to their
/// mean diagonal.
pub const RIDGE: f64 = 1e-10;
/// Equilibrated singular values below this flag rank deficiency.
pub const RANK_FLOOR: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum RegressError {
    #[error("library inputs are empty")]
    EmptyLibrary,
    #[error("library input `{0}` is repeated")]
    DuplicateInput(Expr),
    #[error("need more rows than features ({rows} rows, {cols} features)")]
    Underdetermined { rows: usize, cols: usize },
    #[error("threshold must be positive, got {0}")]
    Threshold(f64),
    #[error("regularizer rows have {got} columns, expected {want}")]
    RegularizerShape { got: usize, want: usize },
    #[error("model file {path}: {msg}")]
    Io { path: String, msg: String },
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Lie(#[from] LieError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LibraryMode {
    Linear,
    Poly2,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LibrarySpec {
    pub mode: LibraryMode,
    pub inputs: Vec<Expr>,
    pub include_constant: bool,
}

/// Constant (if any), then the inputs, then for `poly2` the products
/// `inputs[i]·inputs[j]`, `i ≤ j`, in lexicographic order.
pub fn build_library(spec: &LibrarySpec) -> Result<Vec<Expr>, RegressError> {
    if spec.inputs.is_empty() {
        return Err(RegressError::EmptyLibrary);
    }
    let inputs: Vec<Expr> = spec.inputs.iter().map(|e| e.simplify()).collect();
    for (i, e) in inputs.iter().enumerate() {
        if inputs[..i].contains(e) {
            return Err(RegressError::DuplicateInput(e.clone()));
        }
    }
    let mut out = Vec::new();
    if spec.include_constant {
        out.push(Expr::one());
    }
    out.extend(inputs.iter().cloned());
    if spec.mode == LibraryMode::Poly2 {
        for i in 0..inputs.len() {
            for j in i..inputs.len() {
                out.push((inputs[i].clone() * inputs[j].clone()).simplify());
            }
        }
    }
    Ok(out)
}

/// `target = Σ_j W_j features_j` with `W = C ⊙ M`.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseModel {
    pub target: Expr,
    pub features: Vec<Expr>,
    pub coefficients: Vec<f64>,
    pub mask: Vec<bool>,
    pub threshold: f64,
    /// Mask after each thresholding round.
    pub history: Vec<Vec<bool>>,
    pub iterations: usize,
    /// Condition number of the equilibrated full design.
    pub condition: f64,
    pub warnings: Vec<String>,
}

impl SparseModel {
    pub fn empty(target: Expr, features: Vec<Expr>, threshold: f64) -> Self {
        let m = features.len();
        SparseModel {
            target,
            features,
            coefficients: vec![0.0; m],
            mask: vec![false; m],
            threshold,
            history: Vec::new(),
            iterations: 0,
            condition: 1.0,
            warnings: Vec::new(),
        }
    }

    /// `W = C ⊙ M`.
    pub fn weights(&self) -> Vec<f64> {
        self.coefficients
            .iter()
            .zip(&self.mask)
            .map(|(c, m)| if *m { *c } else { 0.0 })
            .collect()
    }

    pub fn active(&self) -> usize {
        self.mask.iter().filter(|m| **m).count()
    }

    /// `Σ_{M_j} C_j features_j`, unsimplified so terms keep library order.
    pub fn rhs(&self) -> Expr {
        let terms: Vec<Expr> = self
            .features
            .iter()
            .zip(self.weights())
            .filter(|(_, w)| *w != 0.0)
            .map(|(f, w)| Expr::constant(w) * f.clone())
            .collect();
        Expr::sum(terms)
    }

    /// `target − Σ_{M_j} C_j features_j`, simplified.
    pub fn equation(&self) -> Expr {
        let mut terms = vec![self.target.clone()];
        for ((f, c), m) in self.features.iter().zip(&self.coefficients).zip(&self.mask) {
            if *m {
                terms.push(Expr::constant(-c) * f.clone());
            }
        }
        Expr::sum(terms).simplify()
    }

    pub fn to_toml(&self) -> String {
        let file = ModelFile {
            target: self.target.to_string(),
            features: self.features.iter().map(|f| f.to_string()).collect(),
            coefficients: self.coefficients.clone(),
            mask: self.mask.clone(),
            threshold: self.threshold,
            iterations: self.iterations,
            condition: self.condition,
            equation: self.equation().to_string(),
            warnings: self.warnings.clone(),
            history: self.history.clone(),
        };
        toml::to_string(&file).expect("model serializes")
    }

    pub fn from_toml(text: &str, ctx: &ParseContext) -> Result<Self, RegressError> {
        let f: ModelFile = toml::from_str(text).map_err(|e| RegressError::Io {
            path: "<text>".into(),
            msg: e.to_string(),
        })?;
        Ok(SparseModel {
            target: ctx.parse(&f.target)?.simplify(),
            features: f
                .features
                .iter()
                .map(|s| ctx.parse(s).map(|e| e.simplify()))
                .collect::<Result<_, _>>()?,
            coefficients: f.coefficients,
            mask: f.mask,
            threshold: f.threshold,
            history: f.history,
            iterations: f.iterations,
            condition: f.condition,
            warnings: f.warnings,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), RegressError> {
        std::fs::write(path, self.to_toml()).map_err(|e| RegressError::Io {
            path: path.display().to_string(),
            msg: e.to_string(),
        })
    }

    pub fn load(path: &Path, ctx: &ParseContext) -> Result<Self, RegressError> {
        let text = std::fs::read_to_string(path).map_err(|e| RegressError::Io {
            path: path.display().to_string(),
            msg: e.to_string(),
        })?;
        Self::from_toml(&text, ctx).map_err(|e| match e {
            RegressError::Io { msg, .. } => RegressError::Io {
                path: path.display().to_string(),
                msg,
            },
            e => e,
        })
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    target: String,
    equation: String,
    features: Vec<String>,
    coefficients: Vec<f64>,
    mask: Vec<bool>,
    threshold: f64,
    iterations: usize,
    condition: f64,
    warnings: Vec<String>,
    history: Vec<Vec<bool>>,
}

pub fn model_to_equation(m: &SparseModel) -> Expr {
    m.equation()
}

/// Quadratic `wᵀ G w − 2 bᵀ w + const` assembled from stacked rows, all
/// scaled by `1/N`.
struct Normal {
    g: DMatrix<f64>,
    b: DVector<f64>,
}

impl Normal {
    fn from_rows(x: &DMatrix<f64>, y: &DVector<f64>, weight: f64) -> Self {
        Normal {
            g: x.tr_mul(x) * weight,
            b: x.tr_mul(y) * weight,
        }
    }

    fn add(&mut self, other: Normal) {
        self.g += other.g;
        self.b += other.b;
    }

    /// Ridge-stabilized solve on `active`, returning coefficients and the
    /// smallest equilibrated singular value.
    fn solve(&self, active: &[usize]) -> (Vec<f64>, f64) {
        let k = active.len();
        if k == 0 {
            return (Vec::new(), f64::INFINITY);
        }
        let scale: Vec<f64> = active
            .iter()
            .map(|&j| {
                let d = self.g[(j, j)];
                if d > 0.0 { 1.0 / d.sqrt() } else { 1.0 }
            })
            .collect();
        let mut a = DMatrix::<f64>::from_fn(k, k, |r, c| {
            self.g[(active[r], active[c])] * scale[r] * scale[c]
        });
        let rhs = DVector::<f64>::from_fn(k, |r, _| self.b[active[r]] * scale[r]);
        let min_sv = a.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min).max(0.0).sqrt();
        let ridge = RIDGE * a.trace() / k as f64;
        for d in 0..k {
            a[(d, d)] += ridge;
        }
        let z = match a.clone().cholesky() {
            Some(ch) => ch.solve(&rhs),
            None => a
                .svd(true, true)
                .solve(&rhs, 1e-14)
                .unwrap_or_else(|_| DVector::zeros(k)),
        };
        ((0..k).map(|r| z[r] * scale[r]).collect(), min_sv)
    }

    fn condition(&self) -> f64 {
        let m = self.g.nrows();
        let all: Vec<usize> = (0..m).collect();
        let scale: Vec<f64> = all
            .iter()
            .map(|&j| {
                let d = self.g[(j, j)];
                if d > 0.0 { 1.0 / d.sqrt() } else { 1.0 }
            })
            .collect();
        let a = DMatrix::<f64>::from_fn(m, m, |r, c| self.g[(r, c)] * scale[r] * scale[c]);
        let ev = a.symmetric_eigenvalues();
        let hi = ev.iter().copied().fold(0.0, f64::max);
        let lo = ev.iter().copied().fold(f64::INFINITY, f64::min);
        if lo <= 0.0 { f64::INFINITY } else { (hi / lo).sqrt() }
    }
}

fn design(fm: &FeatureMatrix) -> (DMatrix<f64>, DVector<f64>) {
    (fm.to_matrix(), DVector::from_vec(fm.target.clone()))
}

fn check_pre(fm: &FeatureMatrix, threshold: f64) -> Result<(), RegressError> {
    if !(threshold > 0.0) {
        return Err(RegressError::Threshold(threshold));
    }
    if fm.rows() <= fm.cols() {
        return Err(RegressError::Underdetermined {
            rows: fm.rows(),
            cols: fm.cols(),
        });
    }
    Ok(())
}

fn threshold_loop(
    q: &Normal,
    fm: &FeatureMatrix,
    threshold: f64,
    max_iters: usize,
) -> SparseModel {
    let m = fm.cols();
    let mut model = SparseModel::empty(fm.target_expr.clone(), fm.columns.clone(), threshold);
    model.condition = q.condition();
    let mut mask = vec![true; m];
    let mut coeffs = vec![0.0; m];
    let mut min_sv_seen = f64::INFINITY;
    for it in 0..max_iters.max(1) {
        let active: Vec<usize> = (0..m).filter(|&j| mask[j]).collect();
        let (w, min_sv) = q.solve(&active);
        min_sv_seen = min_sv_seen.min(min_sv);
        coeffs = vec![0.0; m];
        for (r, &j) in active.iter().enumerate() {
            coeffs[j] = w[r];
        }
        let next: Vec<bool> = (0..m).map(|j| mask[j] && coeffs[j].abs() >= threshold).collect();
        model.iterations = it + 1;
        model.history.push(next.clone());
        let stable = next == mask;
        mask = next;
        if stable || active.is_empty() {
            break;
        }
        if it + 1 == max_iters.max(1) {
            // final coefficients must belong to the final mask
            let active: Vec<usize> = (0..m).filter(|&j| mask[j]).collect();
            let (w, _) = q.solve(&active);
            coeffs = vec![0.0; m];
            for (r, &j) in active.iter().enumerate() {
                coeffs[j] = w[r];
            }
            model.warnings.push(format!("mask did not stabilize in {max_iters} iterations"));
        }
    }
    if min_sv_seen < RANK_FLOOR {
        model
            .warnings
            .push(format!("rank deficient design (min singular value {min_sv_seen:.3e})"));
    }
    for j in 0..m {
        if !mask[j] {
            coeffs[j] = 0.0;
        }
    }
    model.coefficients = coeffs;
    model.mask = mask;
    model
}

/// Plain STLSQ on the rows of `fm`.
pub fn stlsq(fm: &FeatureMatrix, threshold: f64, max_iters: usize) -> Result<SparseModel, RegressError> {
    check_pre(fm, threshold)?;
    let (x, y) = design(fm);
    let q = Normal::from_rows(&x, &y, 1.0 / fm.rows() as f64);
    Ok(threshold_loop(&q, fm, threshold, max_iters))
}

/// Values of `pr v[target]` and `pr v[feature_j]` at the rows of a
/// feature matrix, one block per generator. `pr v[F] = a − A w`.
#[derive(Clone, Debug)]
pub struct SymmetryRows {
    pub blocks: Vec<(DMatrix<f64>, DVector<f64>)>,
}

impl SymmetryRows {
    /// Evaluate the prolonged generators on `jets` at the same strided points
    /// that [`crate::jetgrid::evaluate_features`] produced.
    pub fn build(
        generators: &[ProlongedVectorField],
        target: &Expr,
        features: &[Expr],
        jets: &[JetGrid],
        constants: &Binding,
        stride: Stride,
    ) -> Result<Self, RegressError> {
        let mut blocks = Vec::new();
        for pv in generators {
            let t = pv.apply(target)?;
            let fs: Vec<Expr> = features.iter().map(|f| pv.apply(f)).collect::<Result<_, _>>()?;
            let parts: Vec<FeatureMatrix> = jets
                .iter()
                .enumerate()
                .map(|(k, jet)| crate::jetgrid::evaluate_features(jet, &fs, &t, constants, stride, k))
                .collect::<Result<_, _>>()?;
            let fm = FeatureMatrix::stack(parts)?;
            blocks.push(design(&fm));
        }
        Ok(SymmetryRows { blocks })
    }
}

/// STLSQ on `(1/N)‖y − Xw‖² + λ (1/N) Σ_v ‖a_v − A_v w‖²`.
pub fn stlsq_regularized(
    fm: &FeatureMatrix,
    reg: &SymmetryRows,
    lambda: f64,
    threshold: f64,
    max_iters: usize,
) -> Result<SparseModel, RegressError> {
    check_pre(fm, threshold)?;
    let (x, y) = design(fm);
    let mut q = Normal::from_rows(&x, &y, 1.0 / fm.rows() as f64);
    if lambda > 0.0 {
        for (a, r) in &reg.blocks {
            if a.ncols() != fm.cols() {
                return Err(RegressError::RegularizerShape {
                    got: a.ncols(),
                    want: fm.cols(),
                });
            }
            q.add(Normal::from_rows(a, r, lambda / a.nrows().max(1) as f64));
        }
    }
    Ok(threshold_loop(&q, fm, threshold, max_iters))
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn p(s: &str) -> Expr {
        Expr::parse(s).unwrap()
    }

    fn synthetic(w: &[f64], rows: usize, seed: u64) -> FeatureMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = w.len();
        let values: Vec<f64> = (0..rows * m).map(|_| rng.random_range(-1.0..1.0)).collect();
        let target = (0..rows)
            .map(|r| (0..m).map(|j| values[r * m + j] * w[j]).sum())
            .collect();
        FeatureMatrix {
            columns: (0..m).map(|j| Expr::named(&format!("f{j}"))).collect(),
            target_expr: p("u_t"),
            values,
            target,
            points: (0..rows).map(|r| (0, r, 0)).collect(),
            dropped: 0,
        }
    }

    #[test]
    fn library_enumeration() {
        let spec = LibrarySpec {
            mode: LibraryMode::Poly2,
            inputs: vec![p("u"), p("u_x")],
            include_constant: true,
        };
        let lib: Vec<String> = build_library(&spec).unwrap().iter().map(|e| e.to_string()).collect();
        assert_eq!(lib, ["1", "u", "u_x", "u^2", "u*u_x", "u_x^2"]);
        let spec = LibrarySpec {
            mode: LibraryMode::Poly2,
            inputs: ["u", "u_x", "u_xx", "u_xxx", "u_xxxx"].map(p).to_vec(),
            include_constant: false,
        };
        assert_eq!(build_library(&spec).unwrap().len(), 20);
        let spec = LibrarySpec {
            mode: LibraryMode::Linear,
            inputs: vec![p("u_x"), p("1*u_x")],
            include_constant: false,
        };
        assert!(matches!(build_library(&spec), Err(RegressError::DuplicateInput(_))));
    }

    #[test]
    fn recovers_sparse_synthetic() {
        let fm = synthetic(&[0.0, 2.0, 0.0, -3.0, 0.0], 200, 1);
        let m = stlsq(&fm, 0.5, DEFAULT_MAX_ITERS).unwrap();
        assert_eq!(m.mask, [false, true, false, true, false]);
        assert!((m.coefficients[1] - 2.0).abs() < 1e-8);
        assert!((m.coefficients[3] + 3.0).abs() < 1e-8);
    }

    #[test]
    fn zero_target_is_empty_model() {
        let fm = synthetic(&[0.0; 4], 50, 2);
        let m = stlsq(&fm, 0.5, DEFAULT_MAX_ITERS).unwrap();
        assert_eq!(m.active(), 0);
        assert!(m.coefficients.iter().all(|c| *c == 0.0));
        assert_eq!(m.equation(), p("u_t"));
    }

    #[test]
    fn masks_shrink_monotonically() {
        let fm = synthetic(&[0.6, -0.45, 0.3, 1.2, 0.1, 0.0], 40, 7);
        let m = stlsq(&fm, 0.5, DEFAULT_MAX_ITERS).unwrap();
        for w in m.history.windows(2) {
            assert!(w[1].iter().zip(&w[0]).all(|(b, a)| !*b || *a));
        }
        for (c, on) in m.coefficients.iter().zip(&m.mask) {
            assert!(!on || c.abs() >= 0.5);
        }
    }

    #[test]
    fn preconditions() {
        let fm = synthetic(&[1.0, 1.0, 1.0], 3, 3);
        assert!(matches!(stlsq(&fm, 0.5, 5), Err(RegressError::Underdetermined { .. })));
        let fm = synthetic(&[1.0], 10, 3);
        assert!(matches!(stlsq(&fm, 0.0, 5), Err(RegressError::Threshold(_))));
    }

    #[test]
    fn lambda_zero_matches_plain() {
        let fm = synthetic(&[0.0, 2.0, -0.7, 0.0], 100, 4);
        let reg = SymmetryRows {
            blocks: vec![(DMatrix::from_element(100, 4, 0.3), DVector::from_element(100, 1.0))],
        };
        let a = stlsq(&fm, 0.5, 20).unwrap();
        let b = stlsq_regularized(&fm, &reg, 0.0, 0.5, 20).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn model_text_round_trip() {
        let mut m = SparseModel::empty(p("u_t + u*u_x").simplify(), vec![p("u_x"), p("u_xxx")], 0.5);
        m.coefficients = vec![0.0, -1.0000000000000002];
        m.mask = vec![false, true];
        let back = SparseModel::from_toml(&m.to_toml(), &ParseContext::default()).unwrap();
        assert_eq!(back, m);
        assert_eq!(m.equation().to_string(), "u*u_x + u_t + 1.0000000000000002*u_xxx");
    }
}

//! Fourier pseudo-spectral machinery on a periodic grid.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// FFT plans, wavenumbers and the 2/3 mask for one grid. Owned per solve.
pub struct Spectral {
    pub nx: usize,
    pub k: Vec<f64>,
    pub mask: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
}

impl Spectral {
    pub fn new(nx: usize, length: f64, dealias: bool) -> Self {
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(nx);
        let inv = planner.plan_fft_inverse(nx);
        let scratch_len = fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len());
        let half = nx as i64 / 2;
        let k: Vec<f64> = (0..nx as i64)
            .map(|j| {
                let m = if j < half { j } else if j == half { 0 } else { j - nx as i64 };
                2.0 * PI * m as f64 / length
            })
            .collect();
        let cutoff = nx as i64 / 3;
        let mask = (0..nx as i64)
            .map(|j| {
                let m = if j <= half { j } else { nx as i64 - j };
                if !dealias || m <= cutoff { 1.0 } else { 0.0 }
            })
            .collect();
        Spectral {
            nx,
            k,
            mask,
            fwd,
            inv,
            scratch: vec![Complex64::default(); scratch_len],
        }
    }

    /// Wavenumber of index `j` including the Nyquist mode, for even-order
    /// derivatives.
    pub fn k_even(&self, j: usize) -> f64 {
        if j == self.nx / 2 {
            self.k[1] * (self.nx / 2) as f64
        } else {
            self.k[j]
        }
    }

    /// `(ik)^m`, with the Nyquist mode dropped for odd `m`.
    pub fn symbol(&self, j: usize, m: u32) -> Complex64 {
        let k = if m % 2 == 0 { self.k_even(j) } else { self.k[j] };
        Complex64::new(0.0, k).powu(m)
    }

    pub fn forward(&mut self, u: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = u.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fwd.process_with_scratch(&mut buf, &mut self.scratch);
        buf
    }

    pub fn inverse(&mut self, v: &[Complex64]) -> Vec<f64> {
        let mut buf = v.to_vec();
        self.inv.process_with_scratch(&mut buf, &mut self.scratch);
        let s = 1.0 / self.nx as f64;
        buf.iter().map(|c| c.re * s).collect()
    }

    /// `m`-th spatial derivative in physical space.
    pub fn derivative(&mut self, v: &[Complex64], m: u32) -> Vec<f64> {
        if m == 0 {
            return self.inverse(v);
        }
        let d: Vec<Complex64> = v
            .iter()
            .enumerate()
            .map(|(j, c)| c * self.symbol(j, m))
            .collect();
        self.inverse(&d)
    }

    /// `-½ ik FFT(u²)`, dealiased.
    pub fn burgers_flux(&mut self, v: &[Complex64]) -> Vec<Complex64> {
        let u = self.inverse(v);
        let sq: Vec<f64> = u.iter().map(|x| x * x).collect();
        let mut w = self.forward(&sq);
        for (j, c) in w.iter_mut().enumerate() {
            *c *= Complex64::new(0.0, -0.5 * self.k[j]) * self.mask[j];
        }
        w
    }
}

/// Kassam–Trefethen ETDRK4 coefficients for `v' = Lv + N(v)` with diagonal,
/// possibly complex `L`, evaluated by a contour mean over the full circle.
pub struct Etdrk4 {
    e: Vec<Complex64>,
    e2: Vec<Complex64>,
    q: Vec<Complex64>,
    f1: Vec<Complex64>,
    f2: Vec<Complex64>,
    f3: Vec<Complex64>,
}

const CONTOUR_POINTS: usize = 64;

impl Etdrk4 {
    pub fn new(lin: &[Complex64], h: f64) -> Self {
        let roots: Vec<Complex64> = (0..CONTOUR_POINTS)
            .map(|j| Complex64::from_polar(1.0, 2.0 * PI * (j as f64 + 0.5) / CONTOUR_POINTS as f64))
            .collect();
        let n = lin.len();
        let mut out = Etdrk4 {
            e: Vec::with_capacity(n),
            e2: Vec::with_capacity(n),
            q: Vec::with_capacity(n),
            f1: Vec::with_capacity(n),
            f2: Vec::with_capacity(n),
            f3: Vec::with_capacity(n),
        };
        let m = CONTOUR_POINTS as f64;
        for &l in lin {
            let hl = l * h;
            out.e.push(hl.exp());
            out.e2.push((hl / 2.0).exp());
            let (mut q, mut f1, mut f2, mut f3) = (Complex64::default(), Complex64::default(), Complex64::default(), Complex64::default());
            for r in &roots {
                let z = hl + r;
                let ez = z.exp();
                let z3 = z * z * z;
                q += ((z / 2.0).exp() - 1.0) / z;
                f1 += (-4.0 - z + ez * (4.0 - 3.0 * z + z * z)) / z3;
                f2 += (2.0 + z + ez * (z - 2.0)) / z3;
                f3 += (-4.0 - 3.0 * z - z * z + ez * (4.0 - z)) / z3;
            }
            out.q.push(q * h / m);
            out.f1.push(f1 * h / m);
            out.f2.push(f2 * h / m);
            out.f3.push(f3 * h / m);
        }
        out
    }

    pub fn step<F>(&self, v: &mut Vec<Complex64>, mut nl: F)
    where
        F: FnMut(&[Complex64]) -> Vec<Complex64>,
    {
        let n = v.len();
        let nv = nl(v);
        let a: Vec<Complex64> = (0..n).map(|j| self.e2[j] * v[j] + self.q[j] * nv[j]).collect();
        let na = nl(&a);
        let b: Vec<Complex64> = (0..n).map(|j| self.e2[j] * v[j] + self.q[j] * na[j]).collect();
        let nb = nl(&b);
        let c: Vec<Complex64> = (0..n)
            .map(|j| self.e2[j] * a[j] + self.q[j] * (2.0 * nb[j] - nv[j]))
            .collect();
        let nc = nl(&c);
        for j in 0..n {
            v[j] = self.e[j] * v[j]
                + nv[j] * self.f1[j]
                + 2.0 * (na[j] + nb[j]) * self.f2[j]
                + nc[j] * self.f3[j];
        }
    }
}

/// Classical RK4 step for `v' = f(v)`.
pub fn rk4_step<F>(v: &mut [Complex64], h: f64, mut f: F)
where
    F: FnMut(&[Complex64]) -> Vec<Complex64>,
{
    let n = v.len();
    let k1 = f(v);
    let s: Vec<Complex64> = (0..n).map(|j| v[j] + 0.5 * h * k1[j]).collect();
    let k2 = f(&s);
    let s: Vec<Complex64> = (0..n).map(|j| v[j] + 0.5 * h * k2[j]).collect();
    let k3 = f(&s);
    let s: Vec<Complex64> = (0..n).map(|j| v[j] + h * k3[j]).collect();
    let k4 = f(&s);
    for j in 0..n {
        v[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
    }
}

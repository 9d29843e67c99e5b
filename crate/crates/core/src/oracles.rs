//! Closed-form and brute-force references, kept independent of the solvers
//! they are used to check.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::geometry::FourierSeries;
use crate::topology::{CriticalKind, CriticalPoint, FieldInterp};

/// Complex Fourier coefficients `f_n`, `|n| <= K`, of a real function.
#[derive(Debug, Clone, Serialize)]
pub struct FourierData {
    pub k_max: usize,
    /// `coeffs[n + k_max] = f_n`.
    #[serde(skip)]
    pub coeffs: Vec<Complex64>,
}

impl FourierData {
    pub fn from_series(f: &FourierSeries) -> Self {
        let k_max = f.max_mode() as usize;
        let mut coeffs = vec![Complex64::new(0.0, 0.0); 2 * k_max + 1];
        for m in f.modes() {
            let k = m.k as usize;
            if k == 0 {
                coeffs[k_max] += m.cos;
            } else {
                // a cos kx + b sin kx = (a - ib)/2 e^{ikx} + (a + ib)/2 e^{-ikx}
                coeffs[k_max + k] += Complex64::new(m.cos, -m.sin) * 0.5;
                coeffs[k_max - k] += Complex64::new(m.cos, m.sin) * 0.5;
            }
        }
        FourierData { k_max, coeffs }
    }

    pub fn coeff(&self, n: i64) -> Complex64 {
        if n.unsigned_abs() as usize > self.k_max {
            Complex64::new(0.0, 0.0)
        } else {
            self.coeffs[(n + self.k_max as i64) as usize]
        }
    }

    pub fn is_conjugate_symmetric(&self, tol: f64) -> bool {
        (0..=self.k_max as i64).all(|n| (self.coeff(n) - self.coeff(-n).conj()).norm() <= tol)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let k = self.k_max as i64;
        (-k..=k).map(|n| (self.coeff(n) * Complex64::from_polar(1.0, n as f64 * x)).re).sum()
    }
}

fn both_modes(h: &FourierData, g: &FourierData) -> i64 {
    h.k_max.max(g.k_max) as i64
}

/// Harmonic function on `|y| <= 1` equal to `h` at `y = 1` and `g` at `y = -1`.
pub fn couette_phi(h: &FourierData, g: &FourierData, x: f64, y: f64) -> f64 {
    let k = both_modes(h, g);
    let mut acc = Complex64::new(0.0, 0.0);
    for n in -k..=k {
        let (hn, gn) = (h.coeff(n), g.coeff(n));
        let e = Complex64::from_polar(1.0, n as f64 * x);
        let term = if n == 0 {
            (hn + gn) * 0.5 + (hn - gn) * (0.5 * y)
        } else {
            let nf = n as f64;
            (hn - gn) * ((nf * y).sinh() / (2.0 * nf.sinh())) + (hn + gn) * ((nf * y).cosh() / (2.0 * nf.cosh()))
        };
        acc += term * e;
    }
    acc.re
}

/// `d_y` of [`couette_phi`].
pub fn couette_phi_dy(h: &FourierData, g: &FourierData, x: f64, y: f64) -> f64 {
    let k = both_modes(h, g);
    let mut acc = Complex64::new(0.0, 0.0);
    for n in -k..=k {
        let (hn, gn) = (h.coeff(n), g.coeff(n));
        let e = Complex64::from_polar(1.0, n as f64 * x);
        let term = if n == 0 {
            (hn - gn) * 0.5
        } else {
            let nf = n as f64;
            (hn - gn) * (nf * (nf * y).cosh() / (2.0 * nf.sinh())) + (hn + gn) * (nf * (nf * y).sinh() / (2.0 * nf.cosh()))
        };
        acc += term * e;
    }
    acc.re
}

/// `sum_{n != 0} n h_n / sinh(n) e^{inx}`: `d_y phi(x, 0)` when `g = -h`.
pub fn couette_dyphi_mid(h: &FourierData, x: f64) -> f64 {
    let k = h.k_max as i64;
    (-k..=k)
        .filter(|&n| n != 0)
        .map(|n| {
            let nf = n as f64;
            (h.coeff(n) * (nf / nf.sinh()) * Complex64::from_polar(1.0, nf * x)).re
        })
        .sum()
}

/// Principal Dirichlet eigenvalue of `-Delta` on a flat periodic channel of width `width`.
pub fn flat_channel_lambda1(width: f64) -> f64 {
    (std::f64::consts::PI / width).powi(2)
}

#[derive(Debug, Clone, Serialize)]
pub struct ModeProfile {
    pub k: u32,
    pub y: Vec<f64>,
    pub phi: Vec<f64>,
}

impl ModeProfile {
    /// Piecewise-cubic (four-point Lagrange) value at `t`.
    pub fn value_at(&self, t: f64) -> f64 {
        let n = self.y.len();
        let h = self.y[1] - self.y[0];
        let start = (((t - self.y[0]) / h).floor() as isize - 1).clamp(0, n as isize - 4) as usize;
        let mut acc = 0.0;
        for a in start..start + 4 {
            let mut w = 1.0;
            for b in start..start + 4 {
                if a != b {
                    w *= (t - self.y[b]) / (self.y[a] - self.y[b]);
                }
            }
            acc += w * self.phi[a];
        }
        acc
    }
}

/// Second-order finite differences for `phi'' - (k^2 + F'(psi0(y))) phi = 0`,
/// `phi(-1) = 0`, `phi(1) = 1`, with `fprime` sampled on `ny` uniform nodes.
pub fn mode_ode_solve(k: u32, fprime: &[f64], ny: usize) -> Result<ModeProfile> {
    if ny < 4 || fprime.len() != ny {
        return Err(Error::InvalidResolution { nx: fprime.len(), ns: ny });
    }
    let h = 2.0 / (ny - 1) as f64;
    let y: Vec<f64> = (0..ny).map(|j| -1.0 + j as f64 * h).collect();
    let m = ny - 2;
    let k2 = f64::from(k * k);
    // interior unknowns 1..ny-1; off-diagonals are 1, diagonal -2 - h^2 (k^2 + F')
    let diag: Vec<f64> = (1..ny - 1).map(|j| -2.0 - h * h * (k2 + fprime[j])).collect();
    let mut rhs = vec![0.0; m];
    rhs[m - 1] = -1.0;
    let mut c = vec![0.0; m];
    let mut d = vec![0.0; m];
    let mut beta = diag[0];
    c[0] = 1.0 / beta;
    d[0] = rhs[0] / beta;
    for j in 1..m {
        beta = diag[j] - c[j - 1];
        if beta.abs() < 1e-300 || !beta.is_finite() {
            return Err(Error::SingularSystem(format!("mode {k}: zero pivot at row {j}")));
        }
        c[j] = 1.0 / beta;
        d[j] = (rhs[j] - d[j - 1]) / beta;
    }
    for j in (0..m - 1).rev() {
        d[j] -= c[j] * d[j + 1];
    }
    let mut phi = Vec::with_capacity(ny);
    phi.push(0.0);
    phi.extend(d);
    phi.push(1.0);
    Ok(ModeProfile { k, y, phi })
}

/// Strict local extrema of the interpolant on a lattice `refine` times finer
/// than the grid, by comparison with the eight neighbours. No polishing.
pub fn brute_force_extrema(field: &ScalarField, refine: usize) -> Vec<CriticalPoint> {
    let it = FieldInterp::new(field);
    let g = &field.grid;
    let nx = g.nx * refine;
    let ns = (g.ns - 1) * refine + 1;
    let dx = g.dx / refine as f64;
    let ds = g.ds / refine as f64;
    let mut v = vec![0.0; nx * ns];
    for i in 0..nx {
        for j in 0..ns {
            v[i * ns + j] = it.value(i as f64 * dx, j as f64 * ds);
        }
    }
    let (lo, hi) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &t| (a.min(t), b.max(t)));
    let tol = 1e-10 * (hi - lo);
    let mut out = Vec::new();
    for i in 0..nx {
        for j in 1..ns - 1 {
            let c = v[i * ns + j];
            let mut is_max = true;
            let mut is_min = true;
            for di in [-1isize, 0, 1] {
                for dj in [-1isize, 0, 1] {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let ii = (i as isize + di).rem_euclid(nx as isize) as usize;
                    let jj = (j as isize + dj) as usize;
                    let n = v[ii * ns + jj];
                    is_max &= c > n + tol;
                    is_min &= c < n - tol;
                }
            }
            if !(is_max || is_min) {
                continue;
            }
            let (x, s) = (i as f64 * dx, j as f64 * ds);
            let d = it.eval_phys(x, s);
            out.push(CriticalPoint {
                x,
                y: g.y_at(x, s),
                s,
                value: c,
                kind: if is_max { CriticalKind::Max } else { CriticalKind::Min },
                hxx: d.dxx,
                hxy: d.dxy,
                hyy: d.dyy,
                det: d.det(),
                grad_norm: d.grad_norm(),
            });
        }
    }
    out
}

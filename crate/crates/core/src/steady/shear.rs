//! The x-independent base state `psi0'' = F(psi0)` on `[-1, 1]`.

use serde::Serialize;

use super::nonlinearity::{check_stability, widen, Nonlinearity};
use crate::error::{Error, Result};
use crate::field::{lagrange, stencil_start};

const MAX_ITER: usize = 50;
const RESIDUAL_TOL: f64 = 1e-10;
const ROOT_TOL: f64 = 1e-12;
/// Step of the RK4 continuation outside `[-1, 1]`.
const CONTINUATION_STEP: f64 = 1e-3;

#[derive(Debug, Clone, Serialize)]
pub struct ShearProfile {
    pub y: Vec<f64>,
    pub psi: Vec<f64>,
    pub dpsi: Vec<f64>,
    /// Zeros of `psi0'`, ascending.
    pub stagnation: Vec<f64>,
    pub c_bottom: f64,
    pub c_top: f64,
    #[serde(skip)]
    pub nonlinearity: Nonlinearity,
    pub residual: f64,
    pub iterations: usize,
}

/// Thomas algorithm for `lower[k] x[k-1] + diag[k] x[k] + upper[k] x[k+1] = rhs[k]`.
fn tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut beta = diag[0];
    if beta == 0.0 {
        return Err(Error::SingularSystem("zero pivot in tridiagonal solve".into()));
    }
    c[0] = upper[0] / beta;
    d[0] = rhs[0] / beta;
    for k in 1..n {
        beta = diag[k] - lower[k] * c[k - 1];
        if beta == 0.0 || !beta.is_finite() {
            return Err(Error::SingularSystem("zero pivot in tridiagonal solve".into()));
        }
        c[k] = upper[k] / beta;
        d[k] = (rhs[k] - lower[k] * d[k - 1]) / beta;
    }
    for k in (0..n - 1).rev() {
        d[k] -= c[k] * d[k + 1];
    }
    Ok(d)
}

fn residual(f: &Nonlinearity, psi: &[f64], h: f64) -> Vec<f64> {
    let n = psi.len();
    (1..n - 1)
        .map(|k| (psi[k - 1] - 2.0 * psi[k] + psi[k + 1]) / (h * h) - f.eval(psi[k]))
        .collect()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Fourth-order first derivative of uniform samples (one-sided near the ends).
fn nodal_derivative(v: &[f64], h: f64) -> Vec<f64> {
    let n = v.len();
    (0..n)
        .map(|k| {
            if k >= 2 && k + 2 < n {
                (v[k - 2] - 8.0 * v[k - 1] + 8.0 * v[k + 1] - v[k + 2]) / (12.0 * h)
            } else {
                let start = k.saturating_sub(2).min(n - 5);
                let w: Vec<f64> = (0..5).map(|m| v[start + m]).collect();
                // derivative of the quartic through five points, at offset k - start
                let t = (k - start) as f64;
                let coeff: [f64; 5] = match t as usize {
                    0 => [-25.0, 48.0, -36.0, 16.0, -3.0],
                    1 => [-3.0, -10.0, 18.0, -6.0, 1.0],
                    2 => [1.0, -8.0, 0.0, 8.0, -1.0],
                    3 => [-1.0, 6.0, -18.0, 10.0, 3.0],
                    _ => [3.0, -16.0, 36.0, -48.0, 25.0],
                };
                coeff.iter().zip(&w).map(|(c, x)| c * x).sum::<f64>() / (12.0 * h)
            }
        })
        .collect()
}

pub fn solve_shear(f: &Nonlinearity, c_bottom: f64, c_top: f64, ny: usize) -> Result<ShearProfile> {
    solve_shear_with(f, c_bottom, c_top, ny, false)
}

/// As [`solve_shear`]; `allow_unstable` skips the `F' > -lambda1` check.
pub fn solve_shear_with(f: &Nonlinearity, c_bottom: f64, c_top: f64, ny: usize, allow_unstable: bool) -> Result<ShearProfile> {
    if ny < 8 {
        return Err(Error::InvalidResolution { nx: 1, ns: ny });
    }
    let h = 2.0 / (ny - 1) as f64;
    let y: Vec<f64> = (0..ny).map(|k| -1.0 + k as f64 * h).collect();
    let mut psi: Vec<f64> = y.iter().map(|&t| c_bottom + (c_top - c_bottom) * (t + 1.0) / 2.0).collect();
    let mut r = residual(f, &psi, h);
    let mut history = vec![max_abs(&r)];
    let mut iterations = 0;
    while max_abs(&r) > RESIDUAL_TOL {
        if iterations == MAX_ITER {
            return Err(Error::NewtonDiverged {
                iterations,
                residual: max_abs(&r),
                history,
            });
        }
        let m = ny - 2;
        let lower = vec![1.0 / (h * h); m];
        let upper = vec![1.0 / (h * h); m];
        let diag: Vec<f64> = (1..ny - 1).map(|k| -2.0 / (h * h) - f.d1(psi[k])).collect();
        let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
        let delta = tridiagonal(&lower, &diag, &upper, &rhs)?;
        let r0 = norm2(&r);
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = psi
                .iter()
                .enumerate()
                .map(|(k, &p)| if k == 0 || k == ny - 1 { p } else { p + t * delta[k - 1] })
                .collect();
            let rt = residual(f, &trial, h);
            if norm2(&rt) <= (1.0 - 1e-4 * t) * r0 || max_abs(&rt) <= RESIDUAL_TOL {
                psi = trial;
                r = rt;
                break;
            }
            t *= 0.5;
            if t < 1.0 / 1024.0 {
                return Err(Error::NewtonDiverged {
                    iterations,
                    residual: max_abs(&r),
                    history,
                });
            }
        }
        iterations += 1;
        history.push(max_abs(&r));
    }
    let (lo, hi) = psi.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if !allow_unstable {
        let lambda1 = std::f64::consts::PI.powi(2) / 4.0;
        let range = widen(lo, hi);
        if !check_stability(f, range, lambda1) {
            return Err(Error::StabilityViolated {
                min_derivative: f.min_derivative(range.0, range.1),
                neg_lambda1: -lambda1,
            });
        }
    }
    let dpsi = nodal_derivative(&psi, h);
    let mut profile = ShearProfile {
        y,
        psi,
        dpsi,
        stagnation: Vec::new(),
        c_bottom,
        c_top,
        nonlinearity: f.clone(),
        residual: max_abs(&r),
        iterations,
    };
    profile.stagnation = profile.find_stagnation();
    Ok(profile)
}

impl ShearProfile {
    pub fn spacing(&self) -> f64 {
        self.y[1] - self.y[0]
    }

    fn interp(&self, values: &[f64], t: f64) -> f64 {
        let h = self.spacing();
        let start = stencil_start(t + 1.0, h, self.y.len(), 5);
        lagrange(&self.y[start..start + 5], &values[start..start + 5], t)
    }

    fn find_stagnation(&self) -> Vec<f64> {
        let mut roots: Vec<f64> = Vec::new();
        let d = &self.dpsi;
        for k in 0..d.len() - 1 {
            if d[k] == 0.0 {
                roots.push(self.y[k]);
                continue;
            }
            if d[k] * d[k + 1] < 0.0 {
                let (mut a, mut b) = (self.y[k], self.y[k + 1]);
                let fa = self.derivative_at(a);
                while b - a > ROOT_TOL {
                    let m = 0.5 * (a + b);
                    if self.derivative_at(m) * fa > 0.0 {
                        a = m;
                    } else {
                        b = m;
                    }
                }
                roots.push(0.5 * (a + b));
            }
        }
        if *d.last().unwrap() == 0.0 {
            roots.push(1.0);
        }
        roots.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        // endpoints are boundary points, not interior stagnation
        roots.retain(|&r| r > -1.0 && r < 1.0);
        roots
    }

    /// The stagnation height used for analysis (the first one found).
    pub fn y0(&self) -> Result<f64> {
        self.stagnation.first().copied().ok_or(Error::NoStagnation)
    }

    /// `c0 = psi0(y0)`.
    pub fn c0(&self) -> Result<f64> {
        Ok(self.value_at(self.y0()?))
    }

    /// `F(c0)`, the curvature `psi0''(y0)`.
    pub fn f_c0(&self) -> Result<f64> {
        Ok(self.nonlinearity.eval(self.c0()?))
    }

    pub fn has_multiple_stagnation(&self) -> bool {
        self.stagnation.len() > 1
    }

    /// `psi0'(-1)` and `psi0'(1)`.
    pub fn boundary_slopes(&self) -> (f64, f64) {
        (self.dpsi[0], *self.dpsi.last().unwrap())
    }

    /// `psi0` anywhere on the real line: interpolated inside `[-1, 1]`, continued
    /// by integrating the ODE from the nearest boundary outside.
    pub fn value_at(&self, t: f64) -> f64 {
        self.state_at(t).0
    }

    pub fn derivative_at(&self, t: f64) -> f64 {
        self.state_at(t).1
    }

    /// `psi0''(t) = F(psi0(t))`.
    pub fn second_derivative_at(&self, t: f64) -> f64 {
        self.nonlinearity.eval(self.value_at(t))
    }

    /// `(psi0(t), psi0'(t))`.
    pub fn state_at(&self, t: f64) -> (f64, f64) {
        if (-1.0..=1.0).contains(&t) {
            return (self.interp(&self.psi, t), self.interp(&self.dpsi, t));
        }
        let (start, v0, d0) = if t > 1.0 {
            (1.0, self.c_top, *self.dpsi.last().unwrap())
        } else {
            (-1.0, self.c_bottom, self.dpsi[0])
        };
        let steps = ((t - start).abs() / CONTINUATION_STEP).ceil().max(1.0) as usize;
        let h = (t - start) / steps as f64;
        let f = &self.nonlinearity;
        let (mut u, mut v) = (v0, d0);
        for _ in 0..steps {
            let (k1u, k1v) = (v, f.eval(u));
            let (k2u, k2v) = (v + 0.5 * h * k1v, f.eval(u + 0.5 * h * k1u));
            let (k3u, k3v) = (v + 0.5 * h * k2v, f.eval(u + 0.5 * h * k2u));
            let (k4u, k4v) = (v + h * k3v, f.eval(u + h * k3u));
            u += h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
            v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        }
        (u, v)
    }

    /// Largest `|psi0'' - F(psi0)|` of the three-point discretisation at interior nodes.
    pub fn discrete_residual(&self) -> f64 {
        max_abs(&residual(&self.nonlinearity, &self.psi, self.spacing()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn couette_profile() {
        let p = solve_shear(&Nonlinearity::couette(), 0.0, 0.0, 65).unwrap();
        assert_eq!(p.stagnation.len(), 1);
        assert!(p.y0().unwrap().abs() < 1e-12);
        assert!((p.c0().unwrap() - 0.5).abs() < 1e-12);
        for (y, v) in p.y.iter().zip(&p.psi) {
            assert!((v - 0.5 * (1.0 - y * y)).abs() < 1e-12);
        }
        // continuation outside: psi0(1 + t) = -t - t^2/2
        assert!((p.value_at(1.05) - (-0.05 - 0.00125)).abs() < 1e-12);
        assert!((p.value_at(-1.05) - (-0.05 - 0.00125)).abs() < 1e-12);
    }

    #[test]
    fn harmonic_profile_has_no_stagnation() {
        let p = solve_shear(&Nonlinearity::constant(0.0), 0.0, 1.0, 33).unwrap();
        assert!(p.stagnation.is_empty());
        assert!(matches!(p.y0(), Err(Error::NoStagnation)));
        for (y, v) in p.y.iter().zip(&p.psi) {
            assert!((v - 0.5 * (y + 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_forcing_converges_to_cosine_profile() {
        let f = Nonlinearity::polynomial(vec![-1.0, -1.0]);
        let mut errs = Vec::new();
        for ny in [33, 65, 129] {
            let p = solve_shear(&f, 0.0, 0.0, ny).unwrap();
            assert!(p.y0().unwrap().abs() < 1e-10);
            errs.push((p.c0().unwrap() - (1.0 / 1f64.cos() - 1.0)).abs());
        }
        assert!(errs[2] < 1e-4);
        let order = (errs[1] / errs[2]).log2();
        assert!((order - 2.0).abs() < 0.2, "{order}");
    }

    #[test]
    fn tridiagonal_matches_dense() {
        let x = tridiagonal(&[0.0, 1.0, 1.0], &[4.0, 4.0, 4.0], &[1.0, 1.0, 0.0], &[5.0, 6.0, 5.0]).unwrap();
        for v in x {
            assert!((v - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn nodal_derivative_exact_on_quartics() {
        let h = 0.1;
        let v: Vec<f64> = (0..9).map(|k| (k as f64 * h).powi(4)).collect();
        for (k, d) in nodal_derivative(&v, h).iter().enumerate() {
            assert!((d - 4.0 * (k as f64 * h).powi(3)).abs() < 1e-10);
        }
    }
}

//! C^2 interpolation of nodal fields: a tensor-product cubic spline written in
//! bicubic Hermite form, periodic in x and clamped in s.

use std::f64::consts::TAU;

use crate::field::{one_sided_d1, ScalarField};
use crate::geometry::GridRef;

/// Derivatives in reference coordinates `(x, s)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct RefDerivs {
    pub f: f64,
    pub fx: f64,
    pub fs: f64,
    pub fxx: f64,
    pub fxs: f64,
    pub fss: f64,
}

/// Value, gradient and Hessian in physical coordinates `(x, y)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct PhysDerivs {
    pub value: f64,
    pub dx: f64,
    pub dy: f64,
    pub dxx: f64,
    pub dxy: f64,
    pub dyy: f64,
}

impl PhysDerivs {
    pub fn grad_norm(&self) -> f64 {
        self.dx.hypot(self.dy)
    }

    pub fn det(&self) -> f64 {
        self.dxx * self.dyy - self.dxy * self.dxy
    }
}

/// Slopes of the periodic cubic spline through `v` with spacing `h`.
pub fn periodic_spline_slopes(v: &[f64], h: f64) -> Vec<f64> {
    let n = v.len();
    let rhs: Vec<f64> = (0..n).map(|i| 3.0 * (v[(i + 1) % n] - v[(i + n - 1) % n]) / h).collect();
    cyclic_141(&rhs)
}

/// Solve the circulant system `x[i-1] + 4 x[i] + x[i+1] = r[i]` (indices mod n)
/// by Sherman-Morrison on top of the Thomas algorithm.
fn cyclic_141(r: &[f64]) -> Vec<f64> {
    let n = r.len();
    // A = T + u v^T with u = (gamma, 0, .., 0, 1), v = (1, 0, .., 0, 1/gamma)
    let gamma = -4.0;
    let mut diag = vec![4.0; n];
    diag[0] -= gamma;
    diag[n - 1] -= 1.0 / gamma;
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = 1.0;
    let y = thomas_ones(&diag, r);
    let z = thomas_ones(&diag, &u);
    let fact = (y[0] + y[n - 1] / gamma) / (1.0 + z[0] + z[n - 1] / gamma);
    y.iter().zip(&z).map(|(a, b)| a - fact * b).collect()
}

/// Thomas algorithm with unit off-diagonals.
fn thomas_ones(diag: &[f64], r: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = 1.0 / diag[0];
    d[0] = r[0] / diag[0];
    for k in 1..n {
        let beta = diag[k] - c[k - 1];
        c[k] = 1.0 / beta;
        d[k] = (r[k] - d[k - 1]) / beta;
    }
    for k in (0..n - 1).rev() {
        d[k] -= c[k] * d[k + 1];
    }
    d
}

/// Slopes of the cubic spline through `v` clamped with fourth-order end slopes.
pub fn clamped_spline_slopes(v: &[f64], h: f64) -> Vec<f64> {
    let n = v.len();
    let first = one_sided_d1([v[0], v[1], v[2], v[3], v[4]], h);
    let last = -one_sided_d1([v[n - 1], v[n - 2], v[n - 3], v[n - 4], v[n - 5]], h);
    let m = n - 2;
    let mut rhs: Vec<f64> = (1..n - 1).map(|k| 3.0 * (v[k + 1] - v[k - 1]) / h).collect();
    rhs[0] -= first;
    rhs[m - 1] -= last;
    let mut out = Vec::with_capacity(n);
    out.push(first);
    out.extend(thomas_ones(&vec![4.0; m], &rhs));
    out.push(last);
    out
}

/// Hermite basis on `[0, 1]`: values and two derivatives of `(h00, h01, h10, h11)`.
fn hermite(t: f64) -> [[f64; 4]; 3] {
    let t2 = t * t;
    let t3 = t2 * t;
    [
        [2.0 * t3 - 3.0 * t2 + 1.0, -2.0 * t3 + 3.0 * t2, t3 - 2.0 * t2 + t, t3 - t2],
        [6.0 * t2 - 6.0 * t, -6.0 * t2 + 6.0 * t, 3.0 * t2 - 4.0 * t + 1.0, 3.0 * t2 - 2.0 * t],
        [12.0 * t - 6.0, -12.0 * t + 6.0, 6.0 * t - 4.0, 6.0 * t - 2.0],
    ]
}

#[derive(Debug, Clone)]
pub struct FieldInterp {
    pub grid: GridRef,
    f: Vec<f64>,
    fx: Vec<f64>,
    fs: Vec<f64>,
    fxs: Vec<f64>,
}

impl FieldInterp {
    pub fn new(field: &ScalarField) -> Self {
        let g = field.grid.clone();
        let (nx, ns) = (g.nx, g.ns);
        let mut fx = vec![0.0; nx * ns];
        for j in 0..ns {
            let row: Vec<f64> = (0..nx).map(|i| field.at(i, j)).collect();
            for (i, d) in periodic_spline_slopes(&row, g.dx).into_iter().enumerate() {
                fx[i * ns + j] = d;
            }
        }
        let mut fs = vec![0.0; nx * ns];
        let mut fxs = vec![0.0; nx * ns];
        for i in 0..nx {
            let col = &field.values[i * ns..(i + 1) * ns];
            fs[i * ns..(i + 1) * ns].copy_from_slice(&clamped_spline_slopes(col, g.ds));
            fxs[i * ns..(i + 1) * ns].copy_from_slice(&clamped_spline_slopes(&fx[i * ns..(i + 1) * ns], g.ds));
        }
        FieldInterp {
            grid: g,
            f: field.values.clone(),
            fx,
            fs,
            fxs,
        }
    }

    /// Cell indices and local coordinates of `(x, s)`; x is wrapped, s clamped to `[0, 1]`.
    fn locate(&self, x: f64, s: f64) -> (usize, usize, f64, f64) {
        let g = &self.grid;
        let xw = x.rem_euclid(TAU);
        let mut i = (xw / g.dx).floor() as usize;
        if i >= g.nx {
            i = g.nx - 1;
        }
        let u = (xw - i as f64 * g.dx) / g.dx;
        let sc = s.clamp(0.0, 1.0);
        let j = ((sc / g.ds).floor() as usize).min(g.ns - 2);
        let v = (sc - j as f64 * g.ds) / g.ds;
        (i, j, u, v)
    }

    pub fn eval_ref(&self, x: f64, s: f64) -> RefDerivs {
        let g = &self.grid;
        let (i, j, u, v) = self.locate(x, s);
        let ns = g.ns;
        let i1 = (i + 1) % g.nx;
        let hu = hermite(u);
        let hv = hermite(v);
        let (dx, ds) = (g.dx, g.ds);
        let mut out = [[0.0; 3]; 3];
        // corner p in x (0 -> i, 1 -> i1), q in s (0 -> j, 1 -> j + 1)
        for (p, ip) in [(0usize, i), (1, i1)] {
            for q in 0..2usize {
                let k = ip * ns + j + q;
                let (f, fx, fs, fxs) = (self.f[k], self.fx[k] * dx, self.fs[k] * ds, self.fxs[k] * dx * ds);
                for a in 0..3 {
                    for b in 0..3 {
                        if a + b > 2 {
                            continue;
                        }
                        out[a][b] += hu[a][p] * hv[b][q] * f
                            + hu[a][2 + p] * hv[b][q] * fx
                            + hu[a][p] * hv[b][2 + q] * fs
                            + hu[a][2 + p] * hv[b][2 + q] * fxs;
                    }
                }
            }
        }
        RefDerivs {
            f: out[0][0],
            fx: out[1][0] / dx,
            fs: out[0][1] / ds,
            fxx: out[2][0] / (dx * dx),
            fxs: out[1][1] / (dx * ds),
            fss: out[0][2] / (ds * ds),
        }
    }

    pub fn value(&self, x: f64, s: f64) -> f64 {
        self.eval_ref(x, s).f
    }

    /// Physical derivatives through the chain rule for `y = b(x) + s T(x)`.
    pub fn eval_phys(&self, x: f64, s: f64) -> PhysDerivs {
        let r = self.eval_ref(x, s);
        let shape = &self.grid.shape;
        let b1 = shape.bottom_derivative(x, 1);
        let b2 = shape.bottom_derivative(x, 2);
        let t = shape.top(x) - shape.bottom(x);
        let t1 = shape.top_derivative(x, 1) - b1;
        let t2 = shape.top_derivative(x, 2) - b2;
        let a = (b1 + s * t1) / t;
        let sxx = -(b2 + s * t2) / t + 2.0 * a * t1 / t;
        PhysDerivs {
            value: r.f,
            dx: r.fx - a * r.fs,
            dy: r.fs / t,
            dxx: r.fxx - 2.0 * a * r.fxs + a * a * r.fss + sxx * r.fs,
            dxy: (r.fxs - a * r.fss) / t - r.fs * t1 / (t * t),
            dyy: r.fss / (t * t),
        }
    }

    /// Physical derivatives at physical `(x, y)`.
    pub fn eval_xy(&self, x: f64, y: f64) -> PhysDerivs {
        self.eval_phys(x, self.grid.s_at(x, y))
    }

    /// Largest physical gradient magnitude over the nodes.
    pub fn max_grad(&self) -> f64 {
        let g = &self.grid;
        let mut m: f64 = 0.0;
        for i in 0..g.nx {
            for j in 0..g.ns {
                m = m.max(self.eval_phys(g.x[i], g.s[j]).grad_norm());
            }
        }
        m
    }

    /// Largest absolute physical Hessian entry over the nodes.
    pub fn max_curvature(&self) -> f64 {
        let g = &self.grid;
        let mut m: f64 = 0.0;
        for i in 0..g.nx {
            for j in 0..g.ns {
                let p = self.eval_phys(g.x[i], g.s[j]);
                m = m.max(p.dxx.abs()).max(p.dxy.abs()).max(p.dyy.abs());
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{BoundaryShape, FourierSeries, MappedGrid};

    #[test]
    fn periodic_slopes_of_sine() {
        let n = 64;
        let h = TAU / n as f64;
        let v: Vec<f64> = (0..n).map(|i| (i as f64 * h).sin()).collect();
        for (i, d) in periodic_spline_slopes(&v, h).iter().enumerate() {
            assert!((d - (i as f64 * h).cos()).abs() < 1e-5);
        }
    }

    #[test]
    fn reproduces_nodes_and_smooth_fields() {
        let shape = BoundaryShape::perturbed_flat(FourierSeries::zero(), FourierSeries::cosine(1, 1.0), 0.1);
        let g = MappedGrid::build(&shape, 64, 65).unwrap();
        let f = ScalarField::from_xy(&g, |x, y| x.sin() * (1.0 + y * y) + y);
        let it = FieldInterp::new(&f);
        assert!((it.value(g.x[5], g.s[7]) - f.at(5, 7)).abs() < 1e-14);
        let (x, y) = (1.234, 0.3);
        let p = it.eval_xy(x, y);
        assert!((p.value - (x.sin() * (1.0 + y * y) + y)).abs() < 1e-6);
        assert!((p.dx - x.cos() * (1.0 + y * y)).abs() < 1e-4);
        assert!((p.dy - (2.0 * y * x.sin() + 1.0)).abs() < 1e-4);
        assert!((p.dxx + x.sin() * (1.0 + y * y)).abs() < 1e-2);
        assert!((p.dxy - 2.0 * y * x.cos()).abs() < 1e-2);
        assert!((p.dyy - 2.0 * x.sin()).abs() < 1e-2);
    }
}

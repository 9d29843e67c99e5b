//! Critical points of interpolated fields.

use std::f64::consts::TAU;

use serde::Serialize;

use super::interp::{FieldInterp, PhysDerivs};
use crate::field::ScalarField;

/// Relative size of `det(Hess)` below which a critical point is degenerate,
/// measured against the squared largest Hessian entry of the field.
pub const TAU_HESS: f64 = 1e-6;
const POLISH_ITER: usize = 40;
/// Sub-samples per cell side used to look for sign changes of the gradient.
const SCAN_SUB: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CriticalKind {
    Max,
    Min,
    Saddle,
    Degenerate,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CriticalPoint {
    pub x: f64,
    pub y: f64,
    /// Reference height `s` of the point.
    pub s: f64,
    pub value: f64,
    pub kind: CriticalKind,
    pub hxx: f64,
    pub hxy: f64,
    pub hyy: f64,
    pub det: f64,
    pub grad_norm: f64,
}

impl CriticalPoint {
    pub fn from_derivs(x: f64, y: f64, s: f64, d: &PhysDerivs, det_tol: f64) -> Self {
        let det = d.det();
        let kind = classify(det, d.dyy, d.dxx, det_tol);
        let x = x.rem_euclid(TAU);
        CriticalPoint {
            // rem_euclid can land a hair below the period
            x: if TAU - x < 1e-12 { 0.0 } else { x },
            y,
            s,
            value: d.value,
            kind,
            hxx: d.dxx,
            hxy: d.dxy,
            hyy: d.dyy,
            det,
            grad_norm: d.grad_norm(),
        }
    }

    pub fn is_nondegenerate(&self) -> bool {
        self.kind != CriticalKind::Degenerate
    }
}

pub fn classify(det: f64, hyy: f64, hxx: f64, det_tol: f64) -> CriticalKind {
    if det.abs() <= det_tol {
        CriticalKind::Degenerate
    } else if det < 0.0 {
        CriticalKind::Saddle
    } else if hyy + hxx < 0.0 {
        CriticalKind::Max
    } else {
        CriticalKind::Min
    }
}

/// Periodic distance in x combined with the y offset.
pub fn periodic_distance(a: (f64, f64), b: (f64, f64)) -> f64 {
    let mut dx = (a.0 - b.0).rem_euclid(TAU);
    if dx > TAU / 2.0 {
        dx = TAU - dx;
    }
    dx.hypot(a.1 - b.1)
}

fn changes_sign(vals: &[f64], zero: f64) -> bool {
    let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    lo <= zero && hi >= -zero
}

/// Newton on `(U_x, U_s) = 0` in reference coordinates; a near-singular
/// Jacobian falls back to a one-dimensional polish in `s`.
fn polish(it: &FieldInterp, mut x: f64, mut s: f64, det_floor: f64) -> (f64, f64) {
    for _ in 0..POLISH_ITER {
        let r = it.eval_ref(x, s);
        let det = r.fxx * r.fss - r.fxs * r.fxs;
        let (dx, ds) = if det.abs() > det_floor {
            ((r.fss * r.fx - r.fxs * r.fs) / det, (r.fxx * r.fs - r.fxs * r.fx) / det)
        } else if r.fss != 0.0 {
            (0.0, r.fs / r.fss)
        } else {
            break;
        };
        // keep steps inside a cell so Newton cannot jump between basins
        let lim_x = it.grid.dx;
        let lim_s = it.grid.ds;
        let dx = dx.clamp(-lim_x, lim_x);
        let ds = ds.clamp(-lim_s, lim_s);
        x -= dx;
        s = (s - ds).clamp(0.0, 1.0);
        if dx.abs() < 1e-15 * TAU && ds.abs() < 1e-15 {
            break;
        }
    }
    (x.rem_euclid(TAU), s)
}

/// Interior critical points of a field, polished and classified.
pub fn find_critical_points(field: &ScalarField) -> Vec<CriticalPoint> {
    let it = FieldInterp::new(field);
    find_critical_points_interp(&it)
}

pub fn find_critical_points_interp(it: &FieldInterp) -> Vec<CriticalPoint> {
    let g = it.grid.clone();
    let grad_scale = it.max_grad();
    let kappa = it.max_curvature();
    let det_tol = TAU_HESS * kappa * kappa;
    // gradient components below this are treated as zero when scanning
    let zero = 1e-12 * grad_scale.max(f64::MIN_POSITIVE);
    let accept = 1e-9 * grad_scale.max(f64::MIN_POSITIVE);
    let spacing = g.dx.max(g.ds * g.min_thickness());
    let mut found: Vec<CriticalPoint> = Vec::new();
    let mut ux = Vec::with_capacity((SCAN_SUB + 1) * (SCAN_SUB + 1));
    let mut us = Vec::with_capacity((SCAN_SUB + 1) * (SCAN_SUB + 1));
    for i in 0..g.nx {
        for j in 0..g.ns - 1 {
            ux.clear();
            us.clear();
            for a in 0..=SCAN_SUB {
                for b in 0..=SCAN_SUB {
                    let x = g.x[i] + g.dx * a as f64 / SCAN_SUB as f64;
                    let s = g.s[j] + g.ds * b as f64 / SCAN_SUB as f64;
                    let r = it.eval_ref(x, s);
                    ux.push(r.fx);
                    us.push(r.fs);
                }
            }
            if !(changes_sign(&ux, zero) && changes_sign(&us, zero)) {
                continue;
            }
            let (x, s) = polish(it, g.x[i] + 0.5 * g.dx, g.s[j] + 0.5 * g.ds, 1e-12 * kappa * kappa);
            if s <= 1e-9 || s >= 1.0 - 1e-9 {
                continue;
            }
            let d = it.eval_phys(x, s);
            if d.grad_norm() > accept {
                continue;
            }
            let y = g.y_at(x, s);
            if found.iter().any(|p| periodic_distance((p.x, p.y), (x, y)) < 2.0 * spacing) {
                continue;
            }
            found.push(CriticalPoint::from_derivs(x, y, s, &d, det_tol));
        }
    }
    found.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    found
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{BoundaryShape, MappedGrid};
    use std::f64::consts::PI;

    #[test]
    fn product_of_sinusoids() {
        let g = MappedGrid::build(&BoundaryShape::flat(), 64, 33).unwrap();
        let f = ScalarField::from_xy(&g, |x, y| x.sin() * y.cos());
        let pts = find_critical_points(&f);
        assert_eq!(pts.len(), 2, "{pts:?}");
        assert!((pts[0].x - PI / 2.0).abs() < 1e-6 && pts[0].y.abs() < 1e-6);
        assert_eq!(pts[0].kind, CriticalKind::Max);
        assert!((pts[1].x - 3.0 * PI / 2.0).abs() < 1e-6);
        assert_eq!(pts[1].kind, CriticalKind::Min);
    }

    #[test]
    fn saddle_detected() {
        let g = MappedGrid::build(&BoundaryShape::flat(), 64, 33).unwrap();
        // cos x - y^2 has a max at (0, 0) and a saddle at (pi, 0)
        let f = ScalarField::from_xy(&g, |x, y| x.cos() - y * y);
        let pts = find_critical_points(&f);
        assert_eq!(pts.len(), 2);
        assert_eq!(pts[0].kind, CriticalKind::Max);
        assert_eq!(pts[1].kind, CriticalKind::Saddle);
        assert!((pts[1].x - PI).abs() < 1e-6);
    }

    #[test]
    fn monotone_field_has_none() {
        let g = MappedGrid::build(&BoundaryShape::flat(), 32, 17).unwrap();
        let f = ScalarField::from_xy(&g, |_, y| 0.5 * (y + 1.0));
        assert!(find_critical_points(&f).is_empty());
    }
}

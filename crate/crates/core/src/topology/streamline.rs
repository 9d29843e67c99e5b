//! The near-singular streamline `y_eps(x)`: the height where `d_y psi_eps`
//! vanishes in each column, close to the stagnation height of the shear.

use serde::Serialize;

use super::interp::FieldInterp;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::steady::ShearProfile;

const ROOT_TOL: f64 = 1e-13;
const WINDOW_SCAN: f64 = 1e-3;
const MAX_WINDOW: f64 = 0.5;

#[derive(Debug, Clone, Serialize)]
pub struct StreamlineCurve {
    pub y0: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// `y_eps'(x) = -psi_xy / psi_yy` at each sample.
    pub slope: Vec<f64>,
    /// Half-width of the search window around `y0`.
    pub window: f64,
    /// `max |y_eps - y0|`.
    pub sup_distance: f64,
    /// `max |y_eps - y0| + max |y_eps'|`.
    pub c1_distance: f64,
    /// Largest `|d_y psi_eps|` on the curve relative to the largest gradient of the field.
    pub max_residual: f64,
}

/// Largest `d <= 0.5` such that `psi0''` keeps its sign on `[y0 - d, y0 + d]` with
/// `|psi0''| >= |F(c0)| / 2`, also kept inside the base channel.
pub fn search_window(profile: &ShearProfile) -> Result<f64> {
    Ok(search_window_at(profile, profile.y0()?))
}

/// [`search_window`] around any stagnation height `y0` of the profile.
pub fn search_window_at(profile: &ShearProfile, y0: f64) -> f64 {
    let fc0 = profile.second_derivative_at(y0);
    let steps = (MAX_WINDOW / WINDOW_SCAN).round() as usize;
    let mut d = 0.0;
    for k in 1..=steps {
        let next = k as f64 * WINDOW_SCAN;
        let ok = [y0 - next, y0 + next].iter().all(|&t| {
            let c = profile.second_derivative_at(t);
            c * fc0 > 0.0 && c.abs() >= 0.5 * fc0.abs()
        });
        if !ok {
            break;
        }
        d = next;
    }
    d.min(1.0 - y0.abs())
}

pub fn singular_streamline(field: &ScalarField, profile: &ShearProfile) -> Result<StreamlineCurve> {
    let it = FieldInterp::new(field);
    singular_streamline_interp(&it, profile)
}

pub fn singular_streamline_interp(it: &FieldInterp, profile: &ShearProfile) -> Result<StreamlineCurve> {
    let y0 = profile.y0()?;
    let window = search_window(profile)?;
    let g = it.grid.clone();
    let shape = &g.shape;
    let grad_scale = it.max_grad().max(f64::MIN_POSITIVE);
    let mut y = Vec::with_capacity(g.nx);
    let mut slope = Vec::with_capacity(g.nx);
    let mut residual: f64 = 0.0;
    for (column, &x) in g.x.iter().enumerate() {
        let lo = (y0 - window).max(shape.bottom(x));
        let hi = (y0 + window).min(shape.top(x));
        let dy = |t: f64| it.eval_xy(x, t).dy;
        let (mut a, mut b) = (lo, hi);
        let fa = dy(a);
        if fa * dy(b) > 0.0 {
            return Err(Error::WindowExit { column });
        }
        while b - a > ROOT_TOL {
            let m = 0.5 * (a + b);
            if dy(m) * fa > 0.0 {
                a = m;
            } else {
                b = m;
            }
        }
        let root = 0.5 * (a + b);
        let d = it.eval_xy(x, root);
        residual = residual.max(d.dy.abs() / grad_scale);
        y.push(root);
        slope.push(-d.dxy / d.dyy);
    }
    let sup_distance = y.iter().map(|v| (v - y0).abs()).fold(0.0, f64::max);
    let max_slope = slope.iter().map(|v| v.abs()).fold(0.0, f64::max);
    Ok(StreamlineCurve {
        y0,
        x: g.x.clone(),
        y,
        slope,
        window,
        sup_distance,
        c1_distance: sup_distance + max_slope,
        max_residual: residual,
    })
}

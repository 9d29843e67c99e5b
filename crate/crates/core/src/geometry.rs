//! Perturbed periodic channels and their boundary-fitted grids.
//!
//! A channel is the strip `{ (x, y) : x in [0, 2pi), bottom(x) <= y <= top(x) }`
//! with `bottom = G - eps*g` and `top = H + eps*h`: `g` and `h` are outward
//! displacements of the two walls, so `h = g = cos x` widens the channel at
//! `x = 0` on both sides. All four boundary functions are truncated real
//! Fourier series, so their derivatives are exact.
//!
//! The grid maps the reference rectangle `[0, 2pi) x [0, 1]` onto the channel
//! through the vertical blend `y = bottom(x) + s * T(x)`, `T = top - bottom`.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative threshold below which a Fourier coefficient counts as zero.
pub const TAU_COEF: f64 = 1e-10;

/// Number of points on the audit grid used to check that boundaries do not cross.
pub const AUDIT_POINTS: usize = 4096;

pub const MIN_RESOLUTION: usize = 8;

/// One term `a cos(kx) + b sin(kx)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "(u32, f64, f64)", into = "(u32, f64, f64)")]
pub struct Mode {
    pub k: u32,
    pub cos: f64,
    pub sin: f64,
}

impl From<(u32, f64, f64)> for Mode {
    fn from((k, cos, sin): (u32, f64, f64)) -> Self {
        Mode { k, cos, sin }
    }
}

impl From<Mode> for (u32, f64, f64) {
    fn from(m: Mode) -> Self {
        (m.k, m.cos, m.sin)
    }
}

/// Truncated real Fourier series on the circle.
///
/// Modes are kept sorted by wavenumber with at most one entry per `k`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FourierSeries {
    modes: Vec<Mode>,
}

impl FourierSeries {
    pub fn new(modes: impl IntoIterator<Item = Mode>) -> Self {
        let mut merged: BTreeMap<u32, (f64, f64)> = BTreeMap::new();
        for m in modes {
            let e = merged.entry(m.k).or_insert((0.0, 0.0));
            e.0 += m.cos;
            // sin(0x) vanishes identically
            if m.k > 0 {
                e.1 += m.sin;
            }
        }
        FourierSeries {
            modes: merged
                .into_iter()
                .map(|(k, (cos, sin))| Mode { k, cos, sin })
                .collect(),
        }
    }

    pub fn zero() -> Self {
        FourierSeries::default()
    }

    pub fn constant(c: f64) -> Self {
        Self::new([Mode { k: 0, cos: c, sin: 0.0 }])
    }

    pub fn cosine(k: u32, amplitude: f64) -> Self {
        Self::new([Mode { k, cos: amplitude, sin: 0.0 }])
    }

    pub fn sine(k: u32, amplitude: f64) -> Self {
        Self::new([Mode { k, cos: 0.0, sin: amplitude }])
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    /// Highest wavenumber present (0 for the empty series).
    pub fn max_mode(&self) -> u32 {
        self.modes.iter().map(|m| m.k).max().unwrap_or(0)
    }

    pub fn is_finite(&self) -> bool {
        self.modes.iter().all(|m| m.cos.is_finite() && m.sin.is_finite())
    }

    /// Largest absolute coefficient, constant term included.
    pub fn max_coefficient(&self) -> f64 {
        self.modes
            .iter()
            .map(|m| m.cos.abs().max(m.sin.abs()))
            .fold(0.0, f64::max)
    }

    /// Largest absolute coefficient among modes with `k > 0`.
    pub fn nonconstant_max_coefficient(&self) -> f64 {
        self.modes
            .iter()
            .filter(|m| m.k > 0)
            .map(|m| m.cos.abs().max(m.sin.abs()))
            .fold(0.0, f64::max)
    }

    pub fn constant_term(&self) -> f64 {
        self.modes.iter().find(|m| m.k == 0).map_or(0.0, |m| m.cos)
    }

    pub fn add(&self, other: &FourierSeries) -> FourierSeries {
        FourierSeries::new(self.modes.iter().chain(other.modes.iter()).copied())
    }

    pub fn scale(&self, factor: f64) -> FourierSeries {
        FourierSeries::new(self.modes.iter().map(|m| Mode {
            k: m.k,
            cos: m.cos * factor,
            sin: m.sin * factor,
        }))
    }

    /// The series of `x -> f(x - shift)`.
    pub fn translated(&self, shift: f64) -> FourierSeries {
        FourierSeries::new(self.modes.iter().map(|m| {
            let (sn, cs) = (m.k as f64 * shift).sin_cos();
            Mode {
                k: m.k,
                cos: m.cos * cs - m.sin * sn,
                sin: m.sin * cs + m.cos * sn,
            }
        }))
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.derivative(x, 0)
    }

    /// `order`-th derivative, evaluated exactly term by term.
    pub fn derivative(&self, x: f64, order: u32) -> f64 {
        let mut acc = 0.0;
        for m in &self.modes {
            let kf = m.k as f64;
            if m.k == 0 {
                if order == 0 {
                    acc += m.cos;
                }
                continue;
            }
            let (sn, cs) = (kf * x).sin_cos();
            let scale = kf.powi(order as i32);
            // d/dx cycles (cos, sin) -> (-sin, cos)
            let (c_part, s_part) = match order % 4 {
                0 => (cs, sn),
                1 => (-sn, cs),
                2 => (-cs, -sn),
                _ => (sn, -cs),
            };
            acc += scale * (m.cos * c_part + m.sin * s_part);
        }
        acc
    }

    /// True when some non-constant mode exceeds `tol` in magnitude.
    pub fn has_nonconstant_mode(&self, tol: f64) -> bool {
        self.modes
            .iter()
            .any(|m| m.k > 0 && (m.cos.abs() > tol || m.sin.abs() > tol))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoundaryShape {
    /// Base bottom boundary `G`.
    pub base_bottom: FourierSeries,
    /// Base top boundary `H`.
    pub base_top: FourierSeries,
    /// Outward (downward) displacement `g` of the bottom wall.
    pub pert_bottom: FourierSeries,
    /// Outward (upward) displacement `h` of the top wall.
    pub pert_top: FourierSeries,
    pub epsilon: f64,
    /// Stream value on the bottom boundary.
    pub c_bottom: f64,
    /// Stream value on the top boundary.
    pub c_top: f64,
}

impl Default for BoundaryShape {
    fn default() -> Self {
        Self::flat()
    }
}

impl BoundaryShape {
    /// The straight channel `T x (-1, 1)` with zero boundary values.
    pub fn flat() -> Self {
        BoundaryShape {
            base_bottom: FourierSeries::constant(-1.0),
            base_top: FourierSeries::constant(1.0),
            pert_bottom: FourierSeries::zero(),
            pert_top: FourierSeries::zero(),
            epsilon: 0.0,
            c_bottom: 0.0,
            c_top: 0.0,
        }
    }

    /// Straight channel perturbed to `(-1 - eps g, 1 + eps h)`.
    pub fn perturbed_flat(g: FourierSeries, h: FourierSeries, epsilon: f64) -> Self {
        BoundaryShape {
            pert_bottom: g,
            pert_top: h,
            epsilon,
            ..Self::flat()
        }
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        BoundaryShape {
            epsilon,
            ..self.clone()
        }
    }

    pub fn with_boundary_values(&self, c_bottom: f64, c_top: f64) -> Self {
        BoundaryShape {
            c_bottom,
            c_top,
            ..self.clone()
        }
    }

    /// The unperturbed domain `D_{G,H}`.
    pub fn base(&self) -> Self {
        self.with_epsilon(0.0)
    }

    pub fn bottom(&self, x: f64) -> f64 {
        self.base_bottom.eval(x) - self.epsilon * self.pert_bottom.eval(x)
    }

    pub fn top(&self, x: f64) -> f64 {
        self.base_top.eval(x) + self.epsilon * self.pert_top.eval(x)
    }

    pub fn bottom_derivative(&self, x: f64, order: u32) -> f64 {
        self.base_bottom.derivative(x, order) - self.epsilon * self.pert_bottom.derivative(x, order)
    }

    pub fn top_derivative(&self, x: f64, order: u32) -> f64 {
        self.base_top.derivative(x, order) + self.epsilon * self.pert_top.derivative(x, order)
    }

    /// True when both base boundaries are constant (a straight channel before perturbation).
    pub fn has_flat_base(&self) -> bool {
        let tol = TAU_COEF * self.base_bottom.max_coefficient().max(self.base_top.max_coefficient());
        !self.base_bottom.has_nonconstant_mode(tol) && !self.base_top.has_nonconstant_mode(tol)
    }

    pub fn validate(&self) -> Result<()> {
        let series = [&self.base_bottom, &self.base_top, &self.pert_bottom, &self.pert_top];
        if !series.iter().all(|s| s.is_finite()) {
            return Err(Error::InvalidShape("non-finite Fourier coefficient".into()));
        }
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return Err(Error::InvalidShape(format!("epsilon must be >= 0, got {}", self.epsilon)));
        }
        if !(self.c_bottom.is_finite() && self.c_top.is_finite()) {
            return Err(Error::InvalidShape("non-finite boundary value".into()));
        }
        let (min_gap, at_x) = (0..AUDIT_POINTS)
            .map(|i| {
                let x = TAU * i as f64 / AUDIT_POINTS as f64;
                (self.top(x) - self.bottom(x), x)
            })
            .fold((f64::INFINITY, 0.0), |acc, v| if v.0 < acc.0 { v } else { acc });
        if min_gap <= 0.0 {
            return Err(Error::BoundaryCrossing { min_gap, at_x });
        }
        Ok(())
    }

    /// Translate both perturbations by `shift` in x.
    pub fn translated_perturbation(&self, shift: f64) -> Self {
        BoundaryShape {
            pert_bottom: self.pert_bottom.translated(shift),
            pert_top: self.pert_top.translated(shift),
            ..self.clone()
        }
    }
}

/// Membership in the class of perturbations with `h' + g'` not identically zero.
pub fn membership_bprime(shape: &BoundaryShape) -> bool {
    // constants never matter, so they are left out of the scale as well
    let scale = shape
        .pert_top
        .nonconstant_max_coefficient()
        .max(shape.pert_bottom.nonconstant_max_coefficient());
    if scale == 0.0 {
        return false;
    }
    shape
        .pert_top
        .add(&shape.pert_bottom)
        .has_nonconstant_mode(TAU_COEF * scale)
}

pub type GridRef = Arc<MappedGrid>;

pub fn build_grid(shape: &BoundaryShape, nx: usize, ns: usize) -> Result<GridRef> {
    MappedGrid::build(shape, nx, ns)
}

/// Tensor grid on `[0, 2pi) x [0, 1]` with exact metric terms of the vertical blend.
///
/// Node `(i, j)` has flat index `i * ns + j`; `j = 0` is the bottom boundary and
/// `j = ns - 1` the top. Column `nx` is identified with column `0`.
#[derive(Debug)]
pub struct MappedGrid {
    pub nx: usize,
    pub ns: usize,
    pub dx: f64,
    pub ds: f64,
    pub shape: BoundaryShape,
    pub x: Vec<f64>,
    pub s: Vec<f64>,
    /// bottom(x_i) and its first two derivatives.
    pub bottom: Vec<[f64; 3]>,
    /// T(x_i) = top - bottom and its first two derivatives.
    pub thickness: Vec<[f64; 3]>,
    lambda1: OnceLock<f64>,
}

impl MappedGrid {
    pub fn build(shape: &BoundaryShape, nx: usize, ns: usize) -> Result<GridRef> {
        if nx < MIN_RESOLUTION || ns < MIN_RESOLUTION {
            return Err(Error::InvalidResolution { nx, ns });
        }
        shape.validate()?;
        let dx = TAU / nx as f64;
        let ds = 1.0 / (ns - 1) as f64;
        let x: Vec<f64> = (0..nx).map(|i| i as f64 * dx).collect();
        let s: Vec<f64> = (0..ns).map(|j| j as f64 * ds).collect();
        let bottom: Vec<[f64; 3]> = x
            .iter()
            .map(|&xi| [0, 1, 2].map(|o| shape.bottom_derivative(xi, o)))
            .collect();
        let thickness: Vec<[f64; 3]> = x
            .iter()
            .zip(&bottom)
            .map(|(&xi, b)| {
                let mut t = [0, 1, 2].map(|o| shape.top_derivative(xi, o));
                for (tk, bk) in t.iter_mut().zip(b) {
                    *tk -= bk;
                }
                t
            })
            .collect();
        Ok(Arc::new(MappedGrid {
            nx,
            ns,
            dx,
            ds,
            shape: shape.clone(),
            x,
            s,
            bottom,
            thickness,
            lambda1: OnceLock::new(),
        }))
    }

    pub fn len(&self) -> usize {
        self.nx * self.ns
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.ns + j
    }

    #[inline]
    pub fn wrap(&self, i: isize) -> usize {
        i.rem_euclid(self.nx as isize) as usize
    }

    pub fn is_boundary(&self, j: usize) -> bool {
        j == 0 || j + 1 == self.ns
    }

    /// Physical height of node `(i, j)`.
    #[inline]
    pub fn y(&self, i: usize, j: usize) -> f64 {
        self.bottom[i][0] + self.s[j] * self.thickness[i][0]
    }

    /// Physical height at an arbitrary reference point.
    pub fn y_at(&self, x: f64, s: f64) -> f64 {
        let b = self.shape.bottom(x);
        b + s * (self.shape.top(x) - b)
    }

    /// Inverse of the vertical map at abscissa `x`.
    pub fn s_at(&self, x: f64, y: f64) -> f64 {
        let b = self.shape.bottom(x);
        (y - b) / (self.shape.top(x) - b)
    }

    /// `a(x, s) = (bottom' + s T') / T`, so that `ds/dx` at fixed `y` is `-a`.
    #[inline]
    pub fn slope(&self, i: usize, j: usize) -> f64 {
        (self.bottom[i][1] + self.s[j] * self.thickness[i][1]) / self.thickness[i][0]
    }

    /// Same as [`slope`](Self::slope) at an arbitrary reference point.
    pub fn slope_at(&self, x: f64, s: f64) -> (f64, f64) {
        let b1 = self.shape.bottom_derivative(x, 1);
        let t = self.shape.top(x) - self.shape.bottom(x);
        let t1 = self.shape.top_derivative(x, 1) - b1;
        ((b1 + s * t1) / t, t)
    }

    /// `d^2 s / dx^2` at fixed `y`.
    #[inline]
    pub fn s_xx(&self, i: usize, j: usize) -> f64 {
        let [_, _, b2] = self.bottom[i];
        let [t0, t1, t2] = self.thickness[i];
        let a = self.slope(i, j);
        -(b2 + self.s[j] * t2) / t0 + 2.0 * a * t1 / t0
    }

    /// Both-side minimum of the thickness over the grid columns.
    pub fn min_thickness(&self) -> f64 {
        self.thickness.iter().map(|t| t[0]).fold(f64::INFINITY, f64::min)
    }

    pub fn same_layout(&self, other: &MappedGrid) -> bool {
        self.nx == other.nx && self.ns == other.ns
    }

    /// Principal Dirichlet eigenvalue of `-Delta`, computed once and cached.
    pub fn lambda1(&self) -> Result<f64> {
        if let Some(v) = self.lambda1.get() {
            return Ok(*v);
        }
        let v = crate::operators::smallest_eigenvalue(self)?;
        Ok(*self.lambda1.get_or_init(|| v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn flat_grid_is_identity_map() {
        let g = MappedGrid::build(&BoundaryShape::flat(), 16, 9).unwrap();
        for i in 0..16 {
            assert_eq!(g.thickness[i][0], 2.0);
            for j in 0..9 {
                assert_eq!(g.y(i, j), -1.0 + 2.0 * g.s[j]);
                assert_eq!(g.slope(i, j), 0.0);
                assert_eq!(g.s_xx(i, j), 0.0);
            }
        }
    }

    #[test]
    fn perturbed_top_evaluates_directly() {
        let shape = BoundaryShape::perturbed_flat(FourierSeries::zero(), FourierSeries::cosine(1, 1.0), 0.1);
        let g = MappedGrid::build(&shape, 16, 9).unwrap();
        assert!((g.y(0, 8) - 1.1).abs() < 1e-15);
        assert!((g.y(8, 8) - 0.9).abs() < 1e-15);
        assert!((g.y_at(PI, 1.0) - 0.9).abs() < 1e-15);
    }

    #[test]
    fn crossing_boundaries_rejected() {
        let shape = BoundaryShape::perturbed_flat(FourierSeries::cosine(1, -1.0), FourierSeries::cosine(1, -1.0), 1.5);
        match MappedGrid::build(&shape, 16, 9) {
            Err(Error::BoundaryCrossing { min_gap, .. }) => assert!(min_gap <= 0.0),
            other => panic!("expected BoundaryCrossing, got {other:?}"),
        }
    }

    #[test]
    fn low_resolution_rejected() {
        assert!(matches!(
            MappedGrid::build(&BoundaryShape::flat(), 4, 9),
            Err(Error::InvalidResolution { .. })
        ));
    }

    #[test]
    fn bprime_membership_examples() {
        let cos = FourierSeries::cosine(1, 1.0);
        let s = |g: FourierSeries, h: FourierSeries| BoundaryShape::perturbed_flat(g, h, 0.1);
        assert!(membership_bprime(&s(FourierSeries::zero(), cos.clone())));
        assert!(!membership_bprime(&s(cos.scale(-1.0), cos.clone())));
        assert!(!membership_bprime(&s(FourierSeries::constant(3.0), FourierSeries::constant(1.0))));
    }

    #[test]
    fn derivatives_match_closed_form() {
        let f = FourierSeries::new([Mode { k: 0, cos: 0.5, sin: 0.0 }, Mode { k: 3, cos: 0.2, sin: -0.7 }]);
        let x: f64 = 0.37;
        let (s3, c3) = (3.0 * x).sin_cos();
        assert!((f.derivative(x, 1) - (-0.6 * s3 - 2.1 * c3)).abs() < 1e-14);
        assert!((f.derivative(x, 2) - (-1.8 * c3 + 6.3 * s3)).abs() < 1e-13);
        assert!((f.derivative(x, 3) - (5.4 * s3 + 18.9 * c3)).abs() < 1e-12);
    }

    #[test]
    fn config_format_round_trip() {
        let shape = BoundaryShape::perturbed_flat(FourierSeries::sine(2, 0.5), FourierSeries::cosine(1, 1.0), 0.02);
        let text = toml::to_string(&shape).unwrap();
        assert!(text.contains("pert_top = [[1, 1.0, 0.0]]"), "{text}");
        let back: BoundaryShape = toml::from_str(&text).unwrap();
        assert_eq!(back, shape);
    }

    fn series_strategy() -> impl Strategy<Value = FourierSeries> {
        proptest::collection::vec((0u32..5, -1.0f64..1.0, -1.0f64..1.0), 0..4)
            .prop_map(|v| FourierSeries::new(v.into_iter().map(Mode::from)))
    }

    proptest! {
        #[test]
        fn map_round_trip(h in series_strategy(), g in series_strategy(), eps in 0.0f64..0.2) {
            let shape = BoundaryShape::perturbed_flat(g, h, eps);
            let grid = MappedGrid::build(&shape, 16, 9).unwrap();
            for i in 0..grid.nx {
                for j in 0..grid.ns {
                    let s = grid.s_at(grid.x[i], grid.y(i, j));
                    prop_assert!((s - grid.s[j]).abs() < 1e-12);
                    let lhs = grid.slope(i, j) * grid.thickness[i][0];
                    let rhs = grid.bottom[i][1] + grid.s[j] * grid.thickness[i][1];
                    prop_assert!((lhs - rhs).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn metric_matches_analytic_derivatives(h in series_strategy(), eps in 0.0f64..0.2) {
            let shape = BoundaryShape::perturbed_flat(FourierSeries::zero(), h.clone(), eps);
            let grid = MappedGrid::build(&shape, 16, 9).unwrap();
            for i in 0..grid.nx {
                let x = grid.x[i];
                prop_assert!((grid.thickness[i][1] - eps * h.derivative(x, 1)).abs() < 1e-12);
                prop_assert!((grid.thickness[i][2] - eps * h.derivative(x, 2)).abs() < 1e-12);
            }
        }

        #[test]
        fn bprime_invariant_under_constants(h in series_strategy(), g in series_strategy(), c1 in -3.0f64..3.0, c2 in -3.0f64..3.0) {
            let a = BoundaryShape::perturbed_flat(g.clone(), h.clone(), 0.05);
            let b = BoundaryShape::perturbed_flat(g.add(&FourierSeries::constant(c1)), h.add(&FourierSeries::constant(c2)), 0.05);
            prop_assert_eq!(membership_bprime(&a), membership_bprime(&b));
        }
    }
}

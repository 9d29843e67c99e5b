//! Island detection and the geometry of the `A_delta` level family.

use std::f64::consts::TAU;

use serde::Serialize;

use super::contour::{trace_lattice, Contour, ContourKind, Lattice};
use super::critical::{find_critical_points_interp, CriticalKind, CriticalPoint, TAU_HESS};
use super::interp::FieldInterp;
use super::streamline::search_window_at;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::steady::ShearProfile;

pub const DEFAULT_DELTAS: [f64; 4] = [0.05, 0.1, 0.2, 0.3];
/// Resampling lattice used to trace `A_delta` contours.
const LATTICE_COLUMNS: usize = 1024;
const LATTICE_ROWS: usize = 241;
const WINDOW_ATTEMPTS: usize = 4;
/// Relative change of `D / eps` under eps-halving above which a diagnostic is flagged.
pub const DRIFT_LIMIT: f64 = 0.5;
/// Fraction of the center-to-separatrix gap at which the core contour is traced.
pub const CORE_FRACTION: f64 = 0.5;

#[derive(Debug, Clone, Serialize)]
pub struct IslandLevel {
    pub delta: f64,
    pub level: f64,
    pub height: f64,
    pub width: f64,
    /// min over the contour of `((y - y_c)^2 + eps (x - x_c)^2) / (delta eps)`.
    pub c1: f64,
    /// max of the same quantity.
    pub c2: f64,
    #[serde(skip)]
    pub contour: Contour,
}

#[derive(Debug, Clone, Serialize)]
pub struct IslandReport {
    pub center: CriticalPoint,
    /// Stagnation height of the base flow the island sits on.
    pub y0: f64,
    pub epsilon: f64,
    /// `psi0(y0)`.
    pub c0: f64,
    pub delta_levels: Vec<f64>,
    /// Levels for which an enclosing closed contractible contour was found.
    pub levels: Vec<IslandLevel>,
    /// Value at the saddle nearest the center along the stagnation band.
    pub separatrix: Option<f64>,
    /// Contour halfway between the center value and the separatrix value; its
    /// `delta` is that fraction (0.5) of the center-to-separatrix gap. It
    /// exists even when the `A_delta` levels miss the island, e.g. when the
    /// center lies on the wrong side of `c0`.
    pub core: Option<IslandLevel>,
}

impl IslandReport {
    /// Tallest `A_delta` contour, or the core contour when no `A_delta` level closed.
    pub fn max_height(&self) -> f64 {
        if self.levels.is_empty() {
            return self.core.as_ref().map_or(0.0, |c| c.height);
        }
        self.levels.iter().map(|l| l.height).fold(0.0, f64::max)
    }

    pub fn level(&self, delta: f64) -> Option<&IslandLevel> {
        self.levels.iter().find(|l| (l.delta - delta).abs() < 1e-12)
    }
}

/// Largest height over every island and level.
pub fn max_island_height(reports: &[IslandReport]) -> f64 {
    reports.iter().map(IslandReport::max_height).fold(0.0, f64::max)
}

fn periodic_offset(x: f64, xc: f64) -> f64 {
    let d = x - xc;
    d - (d / TAU).round() * TAU
}

/// Critical points inside the stagnation band.
fn band_points(crit: &[CriticalPoint], y0: f64, window: f64) -> Vec<CriticalPoint> {
    crit.iter().copied().filter(|p| (p.y - y0).abs() < window).collect()
}

/// Islands around the nondegenerate maxima (or minima when `F(c0) > 0`) of the
/// field near the stagnation height of `profile`.
pub fn detect_islands(field: &ScalarField, profile: &ShearProfile, deltas: &[f64]) -> Result<Vec<IslandReport>> {
    let it = FieldInterp::new(field);
    detect_islands_interp(&it, profile, deltas)
}

pub fn detect_islands_interp(it: &FieldInterp, profile: &ShearProfile, deltas: &[f64]) -> Result<Vec<IslandReport>> {
    detect_islands_at(it, profile, profile.y0()?, deltas)
}

/// Islands near the stagnation height `y0`, which need not be the first one of the profile.
pub fn detect_islands_at(it: &FieldInterp, profile: &ShearProfile, y0: f64, deltas: &[f64]) -> Result<Vec<IslandReport>> {
    let c0 = profile.value_at(y0);
    let fc0 = profile.second_derivative_at(y0);
    let epsilon = it.grid.shape.epsilon;
    // without curvature at the stagnation line there is no distinguished extremum type
    if fc0 == 0.0 || epsilon <= 0.0 {
        return Err(Error::NoIsland);
    }
    let want = if fc0 < 0.0 { CriticalKind::Max } else { CriticalKind::Min };
    let window = search_window_at(profile, y0);
    let band = band_points(&find_critical_points_interp(it), y0, window);
    let mut reports = Vec::new();
    for center in band.iter().filter(|p| p.kind == want) {
        let separatrix = band
            .iter()
            .filter(|p| p.kind == CriticalKind::Saddle)
            .min_by(|a, b| {
                periodic_offset(a.x, center.x)
                    .abs()
                    .total_cmp(&periodic_offset(b.x, center.x).abs())
            })
            .map(|p| p.value);
        let phi_c = center.value - c0;
        let mut targets: Vec<(f64, f64)> = deltas.iter().map(|&d| (d, c0 + (1.0 - d) * phi_c)).collect();
        if let Some(sep) = separatrix {
            targets.push((CORE_FRACTION, center.value - CORE_FRACTION * (center.value - sep)));
        }
        let mut found = probe_levels(it, center, epsilon, &targets);
        let core = if separatrix.is_some() { found.pop().flatten() } else { None };
        let levels: Vec<IslandLevel> = found.into_iter().flatten().collect();
        if levels.is_empty() && core.is_none() {
            continue;
        }
        reports.push(IslandReport {
            center: *center,
            y0,
            epsilon,
            c0,
            delta_levels: deltas.to_vec(),
            levels,
            separatrix,
            core,
        });
    }
    if reports.is_empty() {
        return Err(Error::NoIsland);
    }
    Ok(reports)
}

/// Enclosing closed contours of the `(delta, level)` targets, widening the
/// resampling window until every level closes or the window reaches the walls.
fn probe_levels(it: &FieldInterp, center: &CriticalPoint, epsilon: f64, targets: &[(f64, f64)]) -> Vec<Option<IslandLevel>> {
    let shape = &it.grid.shape;
    let gap = targets.iter().map(|t| (center.value - t.1).abs()).fold(0.0, f64::max);
    // half-height of the widest level from the local quadratic model, then a margin
    let mut half = 3.0 * (2.0 * gap / center.hyy.abs().max(f64::MIN_POSITIVE)).sqrt();
    half = half.max(4.0 * it.grid.ds * it.grid.min_thickness());
    let mut found: Vec<Option<IslandLevel>> = vec![None; targets.len()];
    for _ in 0..WINDOW_ATTEMPTS {
        let lo = center.y - half;
        let hi = center.y + half;
        let lat = Lattice::resample(it, center.x - TAU / 2.0, LATTICE_COLUMNS, LATTICE_ROWS, lo, hi);
        let mut clipped = lo <= shape.bottom(center.x) || hi >= shape.top(center.x);
        let mut any_open = false;
        for (k, &(delta, level)) in targets.iter().enumerate() {
            if found[k].is_some() {
                continue;
            }
            let contours = trace_lattice(&lat, level);
            any_open |= contours.iter().any(|c| c.kind == ContourKind::Open);
            found[k] = contours
                .into_iter()
                .filter(|c| c.kind == ContourKind::Contractible && c.encloses(center.x, center.y))
                .min_by(|a, b| a.width().total_cmp(&b.width()))
                .map(|c| measure(c, center, delta, level, epsilon));
        }
        if found.iter().all(Option::is_some) || !any_open {
            break;
        }
        half *= 2.0;
        clipped |= half > shape.top(center.x) - shape.bottom(center.x);
        if clipped {
            break;
        }
    }
    found
}

fn measure(contour: Contour, center: &CriticalPoint, delta: f64, level: f64, epsilon: f64) -> IslandLevel {
    let (mut c1, mut c2) = (f64::INFINITY, 0.0f64);
    for &(x, y) in &contour.points {
        let dx = periodic_offset(x, center.x);
        let q = ((y - center.y).powi(2) + epsilon * dx * dx) / (delta * epsilon);
        c1 = c1.min(q);
        c2 = c2.max(q);
    }
    IslandLevel {
        delta,
        level,
        height: contour.height(),
        width: contour.width(),
        c1,
        c2,
        contour,
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct HessianDiagnostic {
    pub epsilon: f64,
    pub hyy: f64,
    pub hxx_over_eps: f64,
    pub hxy_over_eps: f64,
    pub det_over_eps: f64,
}

impl HessianDiagnostic {
    /// Relative change of `D / eps` against a diagnostic at another epsilon.
    pub fn drift(&self, other: &HessianDiagnostic) -> f64 {
        (self.det_over_eps - other.det_over_eps).abs() / other.det_over_eps.abs().max(f64::MIN_POSITIVE)
    }

    pub fn drift_flagged(&self, other: &HessianDiagnostic) -> bool {
        self.drift(other) > DRIFT_LIMIT
    }
}

/// Hessian entries at an extremum, rescaled by the perturbation size.
pub fn hessian_diagnostic(field: &ScalarField, pt: &CriticalPoint, epsilon: f64) -> Result<HessianDiagnostic> {
    let it = FieldInterp::new(field);
    let d = it.eval_phys(pt.x, pt.s);
    let kappa = it.max_curvature();
    let det = d.det();
    if det.abs() <= TAU_HESS * kappa * kappa || epsilon <= 0.0 {
        return Err(Error::DegenerateHessian { det });
    }
    Ok(HessianDiagnostic {
        epsilon,
        hyy: d.dyy,
        hxx_over_eps: d.dxx / epsilon,
        hxy_over_eps: d.dxy / epsilon,
        det_over_eps: det / epsilon,
    })
}

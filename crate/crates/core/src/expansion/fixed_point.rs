//! Picard iteration for the remainder, split as `r_eps = u_eps + eta_eps` with
//! `eta_eps` carrying the boundary values and `u_eps` vanishing on both walls.
//!
//! With `L = Delta_h - F'(psi0)` and
//! `N(v) = F(psi0 + eps phi + v) - F(psi0) - F'(psi0)(eps phi + v)
//!        + [F(psi0) - Delta_h psi0] - eps [Delta_h phi - F'(psi0) phi]`,
//! the discrete steady equation is exactly `L r = N(r)`, so the iteration
//! `u <- L^{-1} (N(u + eta) - L eta)` converges to the Newton remainder.

use serde::Serialize;

use super::first_order::extend_shear;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::geometry::{BoundaryShape, GridRef};
use crate::operators::{assemble_helmholtz, assemble_laplacian, solve_dirichlet};
use crate::steady::{Nonlinearity, ShearProfile};

/// Successive differences below this stop the iteration.
pub const STEP_TOL: f64 = 1e-12;
/// Contraction factor above which the map is reported as not contracting.
pub const MAX_FACTOR: f64 = 0.95;

#[derive(Debug, Clone, Serialize)]
pub struct FixedPointTrace {
    pub epsilon: f64,
    /// `|v_k|_inf` for `k = 1, 2, ..`.
    pub iterate_norms: Vec<f64>,
    /// `|v_{k+1} - v_k|_inf`, starting with `|v_1 - v_0|`.
    pub diff_norms: Vec<f64>,
    pub contraction_factor: f64,
    /// Whether `|v_k|_inf <= eps` for each recorded iterate.
    pub in_ball: Vec<bool>,
    pub eta_max: f64,
    pub beta_max: f64,
    #[serde(skip)]
    pub u: ScalarField,
    #[serde(skip)]
    pub eta: ScalarField,
    #[serde(skip)]
    pub beta: ScalarField,
}

impl FixedPointTrace {
    /// `u_eps + eta_eps`.
    pub fn remainder(&self) -> ScalarField {
        self.u.add(&self.eta).expect("u and eta share a grid")
    }
}

/// Linear blend in `s` of the wall values of the remainder.
pub fn eta_interpolant(grid: &GridRef, profile: &ShearProfile, phi_ext: &ScalarField, shape: &BoundaryShape) -> Result<ScalarField> {
    let phi_ext = phi_ext.rebased(grid)?;
    let eps = shape.epsilon;
    let top = grid.ns - 1;
    let wall = |i: usize, j: usize, c: f64| c - profile.value_at(grid.y(i, j)) - eps * phi_ext.at(i, j);
    let r_top: Vec<f64> = (0..grid.nx).map(|i| wall(i, top, shape.c_top)).collect();
    let r_bottom: Vec<f64> = (0..grid.nx).map(|i| wall(i, 0, shape.c_bottom)).collect();
    Ok(ScalarField::from_nodes(grid, |i, j| {
        let s = grid.s[j];
        r_top[i] * s + r_bottom[i] * (1.0 - s)
    }))
}

/// Ratio of successive differences after the second iterate; pairs whose
/// differences sit at round-off level are ignored.
fn contraction_estimate(diffs: &[f64], scale: f64) -> f64 {
    let floor = 1e-14 + 1e-11 * scale;
    let ratios: Vec<f64> = diffs
        .windows(2)
        .enumerate()
        .filter(|(k, w)| *k >= 1 && w[0] > floor && w[1] > floor)
        .map(|(_, w)| w[1] / w[0])
        .collect();
    if let Some(m) = ratios.iter().cloned().reduce(f64::max) {
        return m;
    }
    match diffs {
        [a, b, ..] if *a > floor => b / a,
        _ => 0.0,
    }
}

pub fn fixed_point_solve(
    grid: &GridRef,
    f: &Nonlinearity,
    profile: &ShearProfile,
    phi_ext: &ScalarField,
    shape: &BoundaryShape,
    max_iter: usize,
) -> Result<FixedPointTrace> {
    let phi = phi_ext.rebased(grid)?;
    let eps = shape.epsilon;
    let psi0 = extend_shear(profile, grid);
    let slope = psi0.map(|v| f.d1(v));
    let op = assemble_helmholtz(grid, &slope)?;
    let lap = assemble_laplacian(grid);
    let lap_psi0 = lap.apply(&psi0)?;
    let lap_phi = lap.apply(&phi)?;
    let eta = eta_interpolant(grid, profile, &phi, shape)?;
    let beta = op.apply(&eta)?;
    let zeros = vec![0.0; grid.nx];
    let nonlinear = |v: &ScalarField| -> ScalarField {
        ScalarField::from_nodes(grid, |i, j| {
            if grid.is_boundary(j) {
                return 0.0;
            }
            let k = grid.index(i, j);
            let (base, dphi) = (psi0.values[k], phi.values[k]);
            let p = eps * dphi + v.values[k] + eta.values[k];
            let fp = slope.values[k];
            f.eval(base + p) - f.eval(base) - fp * p + (f.eval(base) - lap_psi0.values[k]) - eps * (lap_phi.values[k] - fp * dphi)
        })
    };
    let mut u = ScalarField::zeros(grid);
    let mut iterate_norms = Vec::new();
    let mut diff_norms = Vec::new();
    let mut in_ball = Vec::new();
    let mut converged = false;
    for _ in 0..max_iter {
        let rhs = nonlinear(&u).sub(&beta)?;
        let next = solve_dirichlet(&op, &rhs, &zeros, &zeros)?;
        let diff = next.max_abs_diff(&u)?;
        u = next;
        let norm = u.max_abs();
        iterate_norms.push(norm);
        in_ball.push(norm <= eps);
        diff_norms.push(diff);
        if diff <= STEP_TOL {
            converged = true;
            break;
        }
    }
    let contraction_factor = contraction_estimate(&diff_norms, u.max_abs());
    if contraction_factor > MAX_FACTOR {
        return Err(Error::NotContracting { factor: contraction_factor });
    }
    if !converged {
        return Err(Error::NoConvergence {
            iterations: max_iter,
            last_change: diff_norms.last().copied().unwrap_or(f64::NAN),
        });
    }
    Ok(FixedPointTrace {
        epsilon: eps,
        iterate_norms,
        diff_norms,
        contraction_factor,
        in_ball,
        eta_max: eta.max_abs(),
        beta_max: beta.max_abs(),
        u,
        eta,
        beta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn contraction_ignores_noise() {
        assert_eq!(contraction_estimate(&[1e-3, 1e-6, 1e-9, 1e-17], 1e-3), 1e-3);
        assert_eq!(contraction_estimate(&[1e-3, 0.0], 1e-3), 0.0);
        assert!((contraction_estimate(&[1e-3, 5e-4, 4e-4], 1.0) - 0.8).abs() < 1e-12);
    }
}

//! The first-order correction `phi` and its extension to perturbed channels.

use crate::error::{Error, Result};
use crate::field::{lagrange, stencil_start, ScalarField};
use crate::geometry::{BoundaryShape, GridRef};
use crate::operators::{assemble_helmholtz, solve_dirichlet};
use crate::steady::Nonlinearity;

/// Residual of the linear problem accepted for `phi`, relative to its boundary data.
const PHI_RESIDUAL_TOL: f64 = 1e-10;

/// `d_y psi0` at the bottom and top wall of every column, fourth-order one-sided.
pub fn wall_normal_derivatives(psi0: &ScalarField) -> (Vec<f64>, Vec<f64>) {
    let g = &psi0.grid;
    let shape = &g.shape;
    let mut bottom = Vec::with_capacity(g.nx);
    let mut top = Vec::with_capacity(g.nx);
    for i in 0..g.nx {
        let t = shape.top(g.x[i]) - shape.bottom(g.x[i]);
        let col = psi0.column(i);
        bottom.push(g.boundary_ds(col, false) / t);
        top.push(g.boundary_ds(col, true) / t);
    }
    (bottom, top)
}

/// Solve `(Delta - F'(psi0)) phi = 0` on the base grid with
/// `phi = -h d_y psi0` on the top wall and `phi = g d_y psi0` on the bottom wall
/// (the walls move outward by `eps h` and `eps g`).
pub fn solve_first_order(base_grid: &GridRef, f: &Nonlinearity, psi0: &ScalarField, shape: &BoundaryShape) -> Result<ScalarField> {
    let psi0 = psi0.rebased(base_grid)?;
    let (d_bottom, d_top) = wall_normal_derivatives(&psi0);
    let g = base_grid;
    let top: Vec<f64> = (0..g.nx).map(|i| -shape.pert_top.eval(g.x[i]) * d_top[i]).collect();
    let bottom: Vec<f64> = (0..g.nx).map(|i| shape.pert_bottom.eval(g.x[i]) * d_bottom[i]).collect();
    let potential = psi0.map(|v| f.d1(v));
    let op = assemble_helmholtz(g, &potential)?;
    let phi = solve_dirichlet(&op, &ScalarField::zeros(g), &bottom, &top)?;
    let residual = op.apply(&phi)?.max_abs();
    let scale = top.iter().chain(&bottom).fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    if residual > PHI_RESIDUAL_TOL * scale {
        return Err(Error::SingularSystem(format!("first-order residual {residual:.3e}")));
    }
    Ok(phi)
}

/// Degree-4 Lagrange interpolation (extrapolation outside the base channel) of
/// `phi` along each column, evaluated at the nodes of `target`.
pub fn extend_phi(phi: &ScalarField, target: &GridRef) -> Result<ScalarField> {
    let g = &phi.grid;
    if g.nx != target.nx {
        return Err(Error::GridMismatch(format!("extension needs matching columns ({} vs {})", g.nx, target.nx)));
    }
    Ok(ScalarField::from_nodes(target, |i, j| {
        let x = g.x[i];
        let s = g.s_at(x, target.y(i, j));
        let start = stencil_start(s, g.ds, g.ns, 5);
        lagrange(&g.s[start..start + 5], &phi.column(i)[start..start + 5], s)
    }))
}

/// `psi0` of a shear profile at the nodes of `target`, continued by the ODE outside `[-1, 1]`.
pub fn extend_shear(profile: &crate::steady::ShearProfile, target: &GridRef) -> ScalarField {
    ScalarField::from_xy(target, |_, y| profile.value_at(y))
}

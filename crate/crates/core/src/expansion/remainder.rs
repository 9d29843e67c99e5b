//! The remainder `r_eps = psi_eps - psi0 - eps phi` and its discrete norms.

use serde::Serialize;

use super::first_order::{extend_phi, extend_shear};
use super::trace::{gamma0_trace, TraceRecord};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::geometry::{BoundaryShape, GridRef};
use crate::steady::ShearProfile;

#[derive(Debug, Clone, Serialize)]
pub struct ExpansionReport {
    pub epsilon: f64,
    /// `max |r_eps|` over the perturbed grid.
    pub r_max: f64,
    /// Largest first-difference quotient of `r_eps` between neighbouring nodes.
    pub r_grad: f64,
    pub phi_max: f64,
    /// `phi` along the stagnation height of the base flow, when there is one.
    pub phi_trace: Option<TraceRecord>,
    #[serde(skip)]
    pub phi: ScalarField,
    #[serde(skip)]
    pub r_eps: ScalarField,
}

/// Largest `|r(a) - r(b)| / |a - b|` over x- and s-neighbours in physical distance.
pub fn difference_quotient(r: &ScalarField) -> f64 {
    let g = &r.grid;
    let mut m: f64 = 0.0;
    for i in 0..g.nx {
        let i1 = (i + 1) % g.nx;
        for j in 0..g.ns {
            let dist_x = g.dx.hypot(g.y(i1, j) - g.y(i, j));
            m = m.max((r.at(i1, j) - r.at(i, j)).abs() / dist_x);
            if j + 1 < g.ns {
                let dist_s = g.y(i, j + 1) - g.y(i, j);
                m = m.max((r.at(i, j + 1) - r.at(i, j)).abs() / dist_s);
            }
        }
    }
    m
}

/// `psi0 + eps phi` extended to the nodes of `grid`.
pub fn first_order_approximation(grid: &GridRef, profile: &ShearProfile, phi: &ScalarField, epsilon: f64) -> Result<ScalarField> {
    extend_shear(profile, grid).axpy(epsilon, &extend_phi(phi, grid)?)
}

pub fn compute_remainder(psi_eps: &ScalarField, profile: &ShearProfile, phi: &ScalarField, shape: &BoundaryShape) -> Result<ExpansionReport> {
    let grid = &psi_eps.grid;
    if grid.shape.epsilon != shape.epsilon || grid.nx != phi.grid.nx {
        return Err(Error::GridMismatch("remainder needs psi_eps on the channel of `shape`".into()));
    }
    let approx = first_order_approximation(grid, profile, phi, shape.epsilon)?;
    let r_eps = psi_eps.sub(&approx)?;
    let phi_trace = match gamma0_trace(phi, profile) {
        Ok(t) => Some(t),
        Err(Error::NoStagnation) => None,
        Err(e) => return Err(e),
    };
    Ok(ExpansionReport {
        epsilon: shape.epsilon,
        r_max: r_eps.max_abs(),
        r_grad: difference_quotient(&r_eps),
        phi_max: phi.max_abs(),
        phi_trace,
        phi: phi.clone(),
        r_eps,
    })
}

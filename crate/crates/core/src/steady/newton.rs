//! Damped Newton iteration for `Delta psi = F(psi)` on a mapped grid.

use serde::Serialize;

use super::nonlinearity::{check_stability, widen, Nonlinearity};
use super::shear::ShearProfile;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::geometry::{BoundaryShape, GridRef, MappedGrid};
use crate::operators::{assemble_helmholtz, assemble_laplacian, solve_dirichlet};

#[derive(Debug, Clone, Copy)]
pub struct NewtonOptions {
    pub max_iter: usize,
    /// Target for `max |Delta psi - F(psi)|` over interior nodes.
    pub tol: f64,
    pub min_step: f64,
    /// Skip the `F' > -lambda1` check on the iterate range.
    pub allow_unstable: bool,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            max_iter: 50,
            tol: 1e-9,
            min_step: 1.0 / 1024.0,
            allow_unstable: false,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct NewtonLogEntry {
    pub iteration: usize,
    pub residual: f64,
    pub step: f64,
}

#[derive(Debug, Clone)]
pub struct SteadySolution {
    pub field: ScalarField,
    pub log: Vec<NewtonLogEntry>,
}

impl SteadySolution {
    pub fn log_json(&self) -> String {
        serde_json::to_string_pretty(&self.log).expect("log entries serialise")
    }
}

/// `Delta_h psi - F(psi)` at interior nodes, zero on the boundary rows.
pub fn steady_residual(psi: &ScalarField, f: &Nonlinearity) -> Result<ScalarField> {
    let lap = assemble_laplacian(&psi.grid).apply(psi)?;
    let g = &psi.grid;
    Ok(ScalarField::from_nodes(g, |i, j| {
        if g.is_boundary(j) {
            0.0
        } else {
            lap.at(i, j) - f.eval(psi.at(i, j))
        }
    }))
}

fn interior_max(r: &ScalarField) -> f64 {
    r.max_abs()
}

fn norm2(r: &ScalarField) -> f64 {
    r.values.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `psi0(y)` composed with the vertical map, boundary values imposed exactly.
pub fn initial_guess(grid: &GridRef, profile: &ShearProfile) -> ScalarField {
    let mut u = ScalarField::from_xy(grid, |_, y| profile.value_at(y));
    impose_boundary(&mut u);
    u
}

fn impose_boundary(u: &mut ScalarField) {
    let g = u.grid.clone();
    for i in 0..g.nx {
        *u.at_mut(i, 0) = g.shape.c_bottom;
        *u.at_mut(i, g.ns - 1) = g.shape.c_top;
    }
}

pub fn solve_steady(grid: &GridRef, f: &Nonlinearity, init: &ScalarField) -> Result<ScalarField> {
    Ok(solve_steady_with(grid, f, init, NewtonOptions::default())?.field)
}

fn stability_guard(grid: &MappedGrid, f: &Nonlinearity, psi: &ScalarField) -> Result<()> {
    let (lo, hi) = psi.min_max();
    let range = widen(lo, hi);
    if f.min_derivative(range.0, range.1) >= 0.0 {
        return Ok(());
    }
    let lambda1 = grid.lambda1()?;
    if check_stability(f, range, lambda1) {
        Ok(())
    } else {
        Err(Error::StabilityViolated {
            min_derivative: f.min_derivative(range.0, range.1),
            neg_lambda1: -lambda1,
        })
    }
}

pub fn solve_steady_with(grid: &GridRef, f: &Nonlinearity, init: &ScalarField, opts: NewtonOptions) -> Result<SteadySolution> {
    let mut psi = init.rebased(grid)?;
    impose_boundary(&mut psi);
    let mut r = steady_residual(&psi, f)?;
    let mut log = vec![NewtonLogEntry {
        iteration: 0,
        residual: interior_max(&r),
        step: 0.0,
    }];
    let history = |log: &[NewtonLogEntry]| log.iter().map(|e| e.residual).collect::<Vec<_>>();
    let zeros = vec![0.0; grid.nx];
    for iteration in 1..=opts.max_iter + 1 {
        if interior_max(&r) <= opts.tol {
            return Ok(SteadySolution { field: psi, log });
        }
        if iteration > opts.max_iter {
            break;
        }
        if !opts.allow_unstable {
            stability_guard(grid, f, &psi)?;
        }
        let slope = psi.map(|v| f.d1(v));
        let jac = assemble_helmholtz(grid, &slope)?;
        let neg_r = r.scaled(-1.0);
        let delta = if opts.allow_unstable {
            ScalarField::from_values(grid, jac.solve_interior(&neg_r.values)?)?
        } else {
            solve_dirichlet(&jac, &neg_r, &zeros, &zeros)?
        };
        let r0 = norm2(&r);
        let mut t = 1.0;
        loop {
            let trial = psi.axpy(t, &delta)?;
            let rt = steady_residual(&trial, f)?;
            if norm2(&rt) <= (1.0 - 1e-4 * t) * r0 || interior_max(&rt) <= opts.tol {
                psi = trial;
                r = rt;
                break;
            }
            t *= 0.5;
            if t < opts.min_step {
                return Err(Error::NewtonDiverged {
                    iterations: iteration,
                    residual: interior_max(&r),
                    history: history(&log),
                });
            }
        }
        log.push(NewtonLogEntry {
            iteration,
            residual: interior_max(&r),
            step: t,
        });
    }
    Err(Error::NewtonDiverged {
        iterations: opts.max_iter,
        residual: interior_max(&r),
        history: history(&log),
    })
}

/// Solve on the perturbed channel `shape`, starting from the shear profile and
/// falling back to an epsilon ladder `eps/8, eps/4, eps/2, eps` when Newton
/// fails from the direct start.
pub fn solve_perturbed(
    shape: &BoundaryShape,
    f: &Nonlinearity,
    nx: usize,
    ns: usize,
    profile: &ShearProfile,
    opts: NewtonOptions,
) -> Result<(GridRef, SteadySolution)> {
    let grid = MappedGrid::build(shape, nx, ns)?;
    let direct = solve_steady_with(&grid, f, &initial_guess(&grid, profile), opts);
    match direct {
        Err(Error::NewtonDiverged { .. }) if shape.epsilon > 0.0 => {}
        other => return other.map(|s| (grid, s)),
    }
    let mut current: Option<ScalarField> = None;
    let mut last = None;
    for k in (0..4).rev() {
        let eps = shape.epsilon / f64::from(1u32 << k);
        let g = MappedGrid::build(&shape.with_epsilon(eps), nx, ns)?;
        let init = match &current {
            Some(prev) => prev.rebased(&g)?,
            None => initial_guess(&g, profile),
        };
        let sol = solve_steady_with(&g, f, &init, opts)?;
        current = Some(sol.field.clone());
        last = Some((g, sol));
    }
    Ok(last.expect("ladder has four rungs"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::FourierSeries;
    use crate::steady::shear::solve_shear;

    #[test]
    fn linear_problem_takes_one_step() {
        let g = MappedGrid::build(&BoundaryShape::flat(), 16, 17).unwrap();
        let sol = solve_steady_with(&g, &Nonlinearity::couette(), &ScalarField::zeros(&g), NewtonOptions::default()).unwrap();
        assert_eq!(sol.log.len(), 2);
        let exact = ScalarField::from_xy(&g, |_, y| 0.5 * (1.0 - y * y));
        assert!(sol.field.max_abs_diff(&exact).unwrap() < 1e-11);
    }

    #[test]
    fn unperturbed_solution_is_x_independent() {
        let f = Nonlinearity::wavy();
        let p = solve_shear(&f, 0.0, 0.0, 33).unwrap();
        let shape = BoundaryShape::perturbed_flat(FourierSeries::zero(), FourierSeries::cosine(1, 1.0), 0.0);
        let g = MappedGrid::build(&shape, 16, 33).unwrap();
        let psi = solve_steady(&g, &f, &ScalarField::zeros(&g)).unwrap();
        assert!(psi.x_oscillation() <= 1e-9);
        for j in 0..33 {
            assert!((psi.at(3, j) - p.psi[j]).abs() < 1e-9);
        }
    }

    #[test]
    fn unstable_forcing_is_reported() {
        let f = Nonlinearity::polynomial(vec![1.0, -3.0]);
        let g = MappedGrid::build(&BoundaryShape::flat(), 8, 17).unwrap();
        let init = ScalarField::from_xy(&g, |_, y| 1.0 - y * y);
        assert!(matches!(
            solve_steady(&g, &f, &init),
            Err(Error::StabilityViolated { .. })
        ));
    }

    #[test]
    fn convergence_log_serialises() {
        let g = MappedGrid::build(&BoundaryShape::flat(), 8, 9).unwrap();
        let sol = solve_steady_with(&g, &Nonlinearity::wavy(), &ScalarField::zeros(&g), NewtonOptions::default()).unwrap();
        let log: serde_json::Value = serde_json::from_str(&sol.log_json()).unwrap();
        assert!(log.as_array().unwrap().len() >= 3);
        assert!(sol.log.last().unwrap().residual <= 1e-9);
    }
}

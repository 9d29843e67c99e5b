//! One run of the solve, expand and topology stages at a single epsilon.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expansion::{b0_from_trace, compute_remainder, extend_phi, fixed_point_solve, gamma0_trace, solve_first_order, B0Membership, ExpansionReport, MAX_FACTOR};
use crate::field::ScalarField;
use crate::geometry::{BoundaryShape, GridRef, MappedGrid};
use crate::steady::{initial_guess, solve_perturbed, solve_shear_with, solve_steady_with, NewtonLogEntry, NewtonOptions, Nonlinearity, ShearProfile, SteadySolution};
use crate::topology::{detect_islands_interp, find_critical_points_interp, hessian_diagnostic, singular_streamline_interp, CriticalPoint, FieldInterp, IslandReport};

/// Base shear flow, its two-dimensional solve on the straight channel, and `phi`.
#[derive(Debug, Clone)]
pub struct BaseState {
    pub profile: ShearProfile,
    pub base_grid: GridRef,
    pub psi0: ScalarField,
    pub phi: ScalarField,
    pub b0: Option<B0Membership>,
}

/// Channels whose base is `(-1, 1)`, the only ones with a shear profile.
pub fn check_straight_base(shape: &BoundaryShape) -> Result<()> {
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12;
    if !shape.has_flat_base() || !close(shape.base_bottom.constant_term(), -1.0) || !close(shape.base_top.constant_term(), 1.0) {
        return Err(Error::Config("experiments need the straight base channel (-1, 1)".into()));
    }
    Ok(())
}

impl BaseState {
    pub fn new(shape: &BoundaryShape, f: &Nonlinearity, nx: usize, ns: usize, opts: NewtonOptions) -> Result<Self> {
        check_straight_base(shape)?;
        let profile = solve_shear_with(f, shape.c_bottom, shape.c_top, ns, opts.allow_unstable)?;
        let base_grid = MappedGrid::build(&shape.base(), nx, ns)?;
        let psi0 = solve_steady_with(&base_grid, f, &initial_guess(&base_grid, &profile), opts)?.field;
        Self::assemble(profile, base_grid, psi0, shape, f)
    }

    /// The same base flow with `phi` recomputed for another perturbation.
    pub fn for_shape(&self, shape: &BoundaryShape, f: &Nonlinearity) -> Result<Self> {
        Self::assemble(self.profile.clone(), self.base_grid.clone(), self.psi0.clone(), shape, f)
    }

    fn assemble(profile: ShearProfile, base_grid: GridRef, psi0: ScalarField, shape: &BoundaryShape, f: &Nonlinearity) -> Result<Self> {
        let phi = solve_first_order(&base_grid, f, &psi0, shape)?;
        let b0 = gamma0_trace(&phi, &profile).ok().map(|t| b0_from_trace(&t, phi.max_abs()));
        Ok(BaseState {
            profile,
            base_grid,
            psi0,
            phi,
            b0,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PointRecord {
    pub epsilon: f64,
    /// Newton converged, the streamline stayed in its window and (when run) the
    /// Picard map contracted.
    pub ok: bool,
    pub errors: Vec<String>,
    pub newton_iterations: usize,
    pub r_max: Option<f64>,
    pub r_grad: Option<f64>,
    /// `||y_eps - y0||_inf`.
    pub streamline_sup: Option<f64>,
    pub streamline_sup_over_eps: Option<f64>,
    pub island_count: usize,
    pub max_height: Option<f64>,
    pub det_over_eps: Option<f64>,
    pub hyy: Option<f64>,
    pub contraction_factor: Option<f64>,
    pub islands: Vec<IslandReport>,
}

impl PointRecord {
    fn blank(epsilon: f64) -> Self {
        PointRecord {
            epsilon,
            ok: true,
            errors: Vec::new(),
            newton_iterations: 0,
            r_max: None,
            r_grad: None,
            streamline_sup: None,
            streamline_sup_over_eps: None,
            island_count: 0,
            max_height: None,
            det_over_eps: None,
            hyy: None,
            contraction_factor: None,
            islands: Vec::new(),
        }
    }
}

/// Everything a point produces, including the fields behind the record.
#[derive(Debug, Clone)]
pub struct PointResult {
    pub record: PointRecord,
    pub psi: Option<ScalarField>,
    pub expansion: Option<ExpansionReport>,
    pub critical: Vec<CriticalPoint>,
    pub newton_log: Vec<NewtonLogEntry>,
}

#[derive(Debug, Clone, Copy)]
pub struct PointOptions {
    pub newton: NewtonOptions,
    pub fixed_point: bool,
    pub max_iter: usize,
}

pub fn run_point(base: &BaseState, shape: &BoundaryShape, f: &Nonlinearity, deltas: &[f64], opts: PointOptions) -> PointResult {
    match solve_perturbed(shape, f, base.base_grid.nx, base.base_grid.ns, &base.profile, opts.newton) {
        Ok((grid, sol)) => analyse_point(base, shape, f, deltas, opts, &grid, sol),
        Err(e) => {
            let mut record = PointRecord::blank(shape.epsilon);
            record.ok = false;
            record.errors.push(format!("solve: {e}"));
            PointResult {
                record,
                psi: None,
                expansion: None,
                critical: Vec::new(),
                newton_log: Vec::new(),
            }
        }
    }
}

/// The expand and topology stages on a converged solve.
pub fn analyse_point(base: &BaseState, shape: &BoundaryShape, f: &Nonlinearity, deltas: &[f64], opts: PointOptions, grid: &GridRef, sol: SteadySolution) -> PointResult {
    let eps = shape.epsilon;
    let mut rec = PointRecord::blank(eps);
    rec.newton_iterations = sol.log.len().saturating_sub(1);
    let (psi, newton_log) = (sol.field, sol.log);
    let expansion = match compute_remainder(&psi, &base.profile, &base.phi, shape) {
        Ok(r) => {
            rec.r_max = Some(r.r_max);
            rec.r_grad = Some(r.r_grad);
            Some(r)
        }
        Err(e) => {
            rec.errors.push(format!("expand: {e}"));
            None
        }
    };
    let it = FieldInterp::new(&psi);
    match singular_streamline_interp(&it, &base.profile) {
        Ok(c) => {
            rec.streamline_sup = Some(c.sup_distance);
            rec.streamline_sup_over_eps = (eps > 0.0).then(|| c.sup_distance / eps);
        }
        Err(e) => {
            rec.ok &= !matches!(e, Error::WindowExit { .. });
            rec.errors.push(format!("streamline: {e}"));
        }
    }
    match detect_islands_interp(&it, &base.profile, deltas) {
        Ok(islands) => {
            rec.island_count = islands.len();
            rec.max_height = Some(crate::topology::max_island_height(&islands));
            // the tallest island carries the Hessian diagnostic
            if let Some(top) = islands.iter().max_by(|a, b| a.max_height().total_cmp(&b.max_height())) {
                match hessian_diagnostic(&psi, &top.center, eps) {
                    Ok(d) => {
                        rec.det_over_eps = Some(d.det_over_eps);
                        rec.hyy = Some(d.hyy);
                    }
                    Err(e) => rec.errors.push(format!("hessian: {e}")),
                }
            }
            rec.islands = islands;
        }
        Err(e) => rec.errors.push(format!("islands: {e}")),
    }
    if opts.fixed_point {
        let trace = extend_phi(&base.phi, grid).and_then(|phi_ext| fixed_point_solve(grid, f, &base.profile, &phi_ext, shape, opts.max_iter));
        match trace {
            Ok(t) => {
                rec.ok &= t.contraction_factor < MAX_FACTOR;
                rec.contraction_factor = Some(t.contraction_factor);
            }
            Err(e) => {
                if let Error::NotContracting { factor } = e {
                    rec.contraction_factor = Some(factor);
                }
                rec.ok = false;
                rec.errors.push(format!("fixed point: {e}"));
            }
        }
    }
    let critical = find_critical_points_interp(&it);
    PointResult {
        record: rec,
        psi: Some(psi),
        expansion,
        critical,
        newton_log,
    }
}

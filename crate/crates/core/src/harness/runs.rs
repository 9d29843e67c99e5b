//! Single-configuration experiments: solve, expand, fixed point and the
//! Couette oracle study.

use std::path::Path;

use serde::Serialize;

use super::config::ExperimentConfig;
use super::fit::log_log_fit;
use super::pipeline::{analyse_point, BaseState, PointOptions, PointRecord, PointResult};
use super::{prepare_dirs, write_json};
use crate::error::{Error, Result};
use crate::expansion::{extend_phi, fixed_point_solve, solve_first_order, B0Membership, ExpansionReport, FixedPointTrace};
use crate::field::ScalarField;
use crate::geometry::{BoundaryShape, MappedGrid};
use crate::oracles::{couette_phi, flat_channel_lambda1, FourierData};
use crate::steady::{initial_guess, solve_perturbed, solve_shear, solve_steady, NewtonLogEntry, NewtonOptions};

#[derive(Debug, Clone, Serialize)]
pub struct SolveSummary {
    pub shape: BoundaryShape,
    pub newton: Vec<NewtonLogEntry>,
    pub point: PointRecord,
}

/// Solve at the configured shape and analyse the result.
pub fn run_solve(cfg: &ExperimentConfig) -> Result<(SolveSummary, PointResult)> {
    cfg.validate()?;
    let base = BaseState::new(&cfg.shape, &cfg.nonlinearity, cfg.grid.nx, cfg.grid.ns, NewtonOptions::default())?;
    let opts = PointOptions {
        newton: NewtonOptions::default(),
        fixed_point: false,
        max_iter: cfg.sweep.max_iter,
    };
    let (grid, sol) = solve_perturbed(&cfg.shape, &cfg.nonlinearity, cfg.grid.nx, cfg.grid.ns, &base.profile, opts.newton)?;
    let point = analyse_point(&base, &cfg.shape, &cfg.nonlinearity, &cfg.sweep.deltas, opts, &grid, sol);
    let summary = SolveSummary {
        shape: cfg.shape.clone(),
        newton: point.newton_log.clone(),
        point: point.record.clone(),
    };
    Ok((summary, point))
}

pub fn write_solve(dir: &Path, summary: &SolveSummary, point: &PointResult) -> Result<()> {
    prepare_dirs(dir)?;
    write_json(&dir.join("summary.json"), summary)?;
    if let Some(psi) = &point.psi {
        std::fs::write(dir.join("plots/psi.svg"), super::svg::render_default(psi, &point.record.islands, &point.critical))?;
        psi.save_binary(dir.join("fields/psi.bin"))?;
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct ExpandSummary {
    pub b0: Option<B0Membership>,
    pub report: ExpansionReport,
}

/// First-order expansion and remainder at the configured epsilon.
pub fn run_expand(cfg: &ExperimentConfig) -> Result<ExpandSummary> {
    cfg.validate()?;
    let base = BaseState::new(&cfg.shape, &cfg.nonlinearity, cfg.grid.nx, cfg.grid.ns, NewtonOptions::default())?;
    let (_, sol) = solve_perturbed(&cfg.shape, &cfg.nonlinearity, cfg.grid.nx, cfg.grid.ns, &base.profile, NewtonOptions::default())?;
    let report = crate::expansion::compute_remainder(&sol.field, &base.profile, &base.phi, &cfg.shape)?;
    Ok(ExpandSummary { b0: base.b0, report })
}

pub fn write_expand(dir: &Path, summary: &ExpandSummary) -> Result<()> {
    prepare_dirs(dir)?;
    write_json(&dir.join("summary.json"), summary)?;
    if let Some(t) = &summary.report.phi_trace {
        t.write_csv(std::fs::File::create(dir.join("trace.csv"))?)?;
    }
    summary.report.phi.save_binary(dir.join("fields/phi.bin"))?;
    summary.report.r_eps.save_binary(dir.join("fields/remainder.bin"))?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct FixedPointSummary {
    pub trace: FixedPointTrace,
    /// Max-norm gap between the Picard remainder and the Newton remainder.
    pub newton_gap: f64,
}

/// Picard iteration for the remainder at the configured epsilon, checked
/// against the remainder of the Newton solution.
pub fn run_fixed_point(cfg: &ExperimentConfig) -> Result<FixedPointSummary> {
    cfg.validate()?;
    let f = &cfg.nonlinearity;
    let base = BaseState::new(&cfg.shape, f, cfg.grid.nx, cfg.grid.ns, NewtonOptions::default())?;
    let (grid, sol) = solve_perturbed(&cfg.shape, f, cfg.grid.nx, cfg.grid.ns, &base.profile, NewtonOptions::default())?;
    let report = crate::expansion::compute_remainder(&sol.field, &base.profile, &base.phi, &cfg.shape)?;
    let phi_ext = extend_phi(&base.phi, &grid)?;
    let trace = fixed_point_solve(&grid, f, &base.profile, &phi_ext, &cfg.shape, cfg.sweep.max_iter)?;
    let newton_gap = trace.remainder().max_abs_diff(&report.r_eps)?;
    Ok(FixedPointSummary { trace, newton_gap })
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleLevel {
    pub nx: usize,
    pub ns: usize,
    /// `||phi_h - phi||_inf / ||phi||_inf` against the series solution.
    pub relative_error: f64,
    /// Observed order against the previous resolution.
    pub order: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleSummary {
    pub levels: Vec<OracleLevel>,
    pub fitted_order: Option<f64>,
    pub lambda1: f64,
    pub lambda1_exact: f64,
}

/// `phi` against the series solution for constant `F`, at every configured
/// resolution, plus the principal eigenvalue of the straight channel.
pub fn run_oracle(cfg: &ExperimentConfig) -> Result<OracleSummary> {
    cfg.validate()?;
    let f = &cfg.nonlinearity;
    if !(f.is_affine() && f.d1(0.0) == 0.0) {
        return Err(Error::Config("the oracle study needs a constant nonlinearity".into()));
    }
    super::pipeline::check_straight_base(&cfg.shape)?;
    let (cb, ct) = (cfg.shape.c_bottom, cfg.shape.c_top);
    // psi0 = -F (1 - y^2) / 2 + the linear interpolant of the wall values
    let dpsi0 = |y: f64| f.eval(0.0) * y + (ct - cb) / 2.0;
    let h = FourierData::from_series(&cfg.shape.pert_top.scale(-dpsi0(1.0)));
    let g = FourierData::from_series(&cfg.shape.pert_bottom.scale(dpsi0(-1.0)));
    let mut levels: Vec<OracleLevel> = Vec::new();
    for &n in &cfg.grid.resolutions {
        let grid = MappedGrid::build(&cfg.shape.base(), n, n + 1)?;
        let p = solve_shear(f, cb, ct, n + 1)?;
        let psi0 = solve_steady(&grid, f, &initial_guess(&grid, &p))?;
        let phi = solve_first_order(&grid, f, &psi0, &cfg.shape)?;
        let exact = ScalarField::from_xy(&grid, |x, y| couette_phi(&h, &g, x, y));
        let scale = exact.max_abs().max(f64::MIN_POSITIVE);
        let relative_error = phi.max_abs_diff(&exact)? / scale;
        let order = levels
            .last()
            .map(|prev: &OracleLevel| (prev.relative_error / relative_error).ln() / (n as f64 / prev.nx as f64).ln());
        levels.push(OracleLevel {
            nx: n,
            ns: n + 1,
            relative_error,
            order,
        });
    }
    let hs: Vec<f64> = levels.iter().map(|l| 1.0 / l.nx as f64).collect();
    let errs: Vec<f64> = levels.iter().map(|l| l.relative_error).collect();
    let fitted_order = log_log_fit(&hs, &errs).map(|f| f.slope);
    let flat = MappedGrid::build(&BoundaryShape::flat(), cfg.grid.nx, cfg.grid.ns)?;
    Ok(OracleSummary {
        levels,
        fitted_order,
        lambda1: flat.lambda1()?,
        lambda1_exact: flat_channel_lambda1(2.0),
    })
}

pub fn oracle_csv(summary: &OracleSummary) -> String {
    let mut out = String::from("nx,ns,relative_error,order\n");
    for l in &summary.levels {
        let order = l.order.map(|o| format!("{o:.6}")).unwrap_or_default();
        out.push_str(&format!("{},{},{:.12e},{}\n", l.nx, l.ns, l.relative_error, order));
    }
    out
}

pub fn write_oracle(dir: &Path, summary: &OracleSummary) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("results.csv"), oracle_csv(summary))?;
    write_json(&dir.join("summary.json"), summary)
}

pub fn write_fixed_point(dir: &Path, summary: &FixedPointSummary) -> Result<()> {
    prepare_dirs(dir)?;
    write_json(&dir.join("summary.json"), summary)?;
    summary.trace.remainder().save_binary(dir.join("fields/remainder.bin"))?;
    Ok(())
}

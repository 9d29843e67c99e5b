//! Hypothesis configurations with a known island verdict: a flat bottom under
//! a wavy top, two flat walls, and a base flow with several stagnation heights.

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{AppendixCaseKind, ExperimentConfig};
use super::sweep::with_jobs;
use super::{eps_tag, prepare_dirs, write_json};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::geometry::{BoundaryShape, FourierSeries, TAU_COEF};
use crate::steady::{solve_perturbed, solve_shear_with, NewtonOptions, Nonlinearity, ShearProfile};
use crate::topology::{
    detect_islands_at, find_critical_points_interp, max_island_height, trace_level_set, ContourKind, CriticalKind, CriticalPoint, FieldInterp,
    IslandReport,
};

/// `F(t) = -MU^2 t` with boundary values `cos MU` has the shear `cos(MU y)`,
/// stagnant at `y = 0` and `y = +-pi / MU`.
const TWO_STAGNATION_MU: f64 = 4.0;

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct CriticalCounts {
    pub max: usize,
    pub min: usize,
    pub saddle: usize,
    pub degenerate: usize,
}

impl CriticalCounts {
    fn of(points: &[CriticalPoint]) -> Self {
        let mut c = CriticalCounts::default();
        for p in points {
            match p.kind {
                CriticalKind::Max => c.max += 1,
                CriticalKind::Min => c.min += 1,
                CriticalKind::Saddle => c.saddle += 1,
                CriticalKind::Degenerate => c.degenerate += 1,
            }
        }
        c
    }
}

/// How far `|grad psi|` is from constant along each wall.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct WallGradient {
    pub bottom_mean: f64,
    /// `max | |grad psi| - mean | / mean` along the bottom wall.
    pub bottom_deviation: f64,
    pub top_mean: f64,
    pub top_deviation: f64,
}

pub fn wall_gradient(it: &FieldInterp) -> WallGradient {
    let stats = |s: f64| {
        let v: Vec<f64> = it.grid.x.iter().map(|&x| it.eval_phys(x, s).grad_norm()).collect();
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let dev = v.iter().map(|g| (g - mean).abs()).fold(0.0, f64::max);
        (mean, if mean > 0.0 { dev / mean } else { dev })
    };
    let (bottom_mean, bottom_deviation) = stats(0.0);
    let (top_mean, top_deviation) = stats(1.0);
    WallGradient {
        bottom_mean,
        bottom_deviation,
        top_mean,
        top_deviation,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AppendixPoint {
    pub epsilon: f64,
    pub errors: Vec<String>,
    pub island_count: usize,
    pub max_height: Option<f64>,
    /// Stagnation heights of the base flow with at least one island nearby.
    pub island_levels: Vec<f64>,
    pub critical: CriticalCounts,
    /// Every default level curve wraps the channel.
    pub wrapping_only: bool,
    pub wall_gradient: Option<WallGradient>,
    pub islands: Vec<IslandReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AppendixCase {
    pub kind: AppendixCaseKind,
    pub expect_islands: bool,
    pub shape: BoundaryShape,
    pub nonlinearity: Nonlinearity,
    pub stagnation: Vec<f64>,
    pub points: Vec<AppendixPoint>,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct AppendixSummary {
    pub cases: Vec<AppendixCase>,
    pub passed: bool,
}

/// Solved fields kept for plotting.
pub struct AppendixFields {
    pub kind: AppendixCaseKind,
    pub epsilon: f64,
    pub psi: ScalarField,
    pub islands: Vec<IslandReport>,
    pub critical: Vec<CriticalPoint>,
}

struct CaseSetup {
    shape: BoundaryShape,
    f: Nonlinearity,
    opts: NewtonOptions,
    expect_islands: bool,
}

fn setup(kind: AppendixCaseKind, cfg: &ExperimentConfig) -> CaseSetup {
    let stable = NewtonOptions::default();
    match kind {
        AppendixCaseKind::FlatBottom => {
            let tol = TAU_COEF * cfg.shape.pert_top.max_coefficient().max(1.0);
            let usable = !cfg.shape.pert_bottom.has_nonconstant_mode(tol) && cfg.shape.pert_top.has_nonconstant_mode(tol) && cfg.shape.c_bottom == cfg.shape.c_top;
            let shape = if usable {
                cfg.shape.clone()
            } else {
                BoundaryShape::perturbed_flat(FourierSeries::zero(), FourierSeries::cosine(1, 1.0), 0.0)
            };
            CaseSetup {
                shape,
                f: cfg.nonlinearity.clone(),
                opts: stable,
                expect_islands: true,
            }
        }
        AppendixCaseKind::FlatFlat => CaseSetup {
            shape: BoundaryShape::flat(),
            f: cfg.nonlinearity.clone(),
            opts: stable,
            expect_islands: false,
        },
        AppendixCaseKind::TwoStagnation => {
            let c = TWO_STAGNATION_MU.cos();
            let g = FourierSeries::cosine(2, 0.5);
            let shape = BoundaryShape::perturbed_flat(g, FourierSeries::cosine(1, 1.0), 0.0).with_boundary_values(c, c);
            CaseSetup {
                shape,
                f: Nonlinearity::polynomial(vec![0.0, -TWO_STAGNATION_MU * TWO_STAGNATION_MU]),
                // F' = -16 lies below -lambda1 of the channel, but 16 is not an eigenvalue
                opts: NewtonOptions {
                    allow_unstable: true,
                    ..stable
                },
                expect_islands: true,
            }
        }
    }
}

fn run_case_point(cfg: &ExperimentConfig, s: &CaseSetup, profile: &ShearProfile, kind: AppendixCaseKind, eps: f64) -> (AppendixPoint, Option<AppendixFields>) {
    let mut point = AppendixPoint {
        epsilon: eps,
        errors: Vec::new(),
        island_count: 0,
        max_height: None,
        island_levels: Vec::new(),
        critical: CriticalCounts::default(),
        wrapping_only: false,
        wall_gradient: None,
        islands: Vec::new(),
    };
    let shape = s.shape.with_epsilon(eps);
    let psi = match solve_perturbed(&shape, &s.f, cfg.grid.nx, cfg.grid.ns, profile, s.opts) {
        Ok((_, sol)) => sol.field,
        Err(e) => {
            point.errors.push(format!("solve: {e}"));
            return (point, None);
        }
    };
    let it = FieldInterp::new(&psi);
    for &y0 in &profile.stagnation {
        match detect_islands_at(&it, profile, y0, &cfg.sweep.deltas) {
            Ok(mut r) => {
                point.island_levels.push(y0);
                point.islands.append(&mut r);
            }
            Err(Error::NoIsland) => {}
            Err(e) => point.errors.push(format!("islands at {y0:.4}: {e}")),
        }
    }
    point.island_count = point.islands.len();
    point.max_height = (!point.islands.is_empty()).then(|| max_island_height(&point.islands));
    let critical = find_critical_points_interp(&it);
    point.critical = CriticalCounts::of(&critical);
    point.wrapping_only = super::svg::default_levels(&psi, super::svg::DEFAULT_LEVELS)
        .into_iter()
        .flat_map(|l| trace_level_set(&psi, l))
        .all(|c| c.kind == ContourKind::Wrapping);
    point.wall_gradient = Some(wall_gradient(&it));
    let fields = AppendixFields {
        kind,
        epsilon: eps,
        psi,
        islands: point.islands.clone(),
        critical,
    };
    (point, Some(fields))
}

pub fn run_appendix_a(cfg: &ExperimentConfig, jobs: usize) -> Result<(AppendixSummary, Vec<AppendixFields>)> {
    cfg.validate()?;
    let mut cases = Vec::new();
    let mut fields = Vec::new();
    for &kind in &cfg.appendix.cases {
        let s = setup(kind, cfg);
        let profile = solve_shear_with(&s.f, s.shape.c_bottom, s.shape.c_top, cfg.grid.ns, s.opts.allow_unstable)?;
        let results: Vec<(AppendixPoint, Option<AppendixFields>)> = with_jobs(jobs, || {
            cfg.sweep
                .epsilons
                .par_iter()
                .map(|&eps| run_case_point(cfg, &s, &profile, kind, eps))
                .collect()
        });
        let mut points = Vec::new();
        for (p, f) in results {
            points.push(p);
            fields.extend(f);
        }
        let passed = points.iter().all(|p| {
            let solved = !p.errors.iter().any(|e| e.starts_with("solve"));
            if s.expect_islands {
                solved && p.island_count >= 1
            } else {
                solved && p.island_count == 0 && p.wrapping_only
            }
        });
        cases.push(AppendixCase {
            kind,
            expect_islands: s.expect_islands,
            shape: s.shape.clone(),
            nonlinearity: s.f.clone(),
            stagnation: profile.stagnation.clone(),
            points,
            passed,
        });
    }
    let passed = cases.iter().all(|c| c.passed);
    Ok((AppendixSummary { cases, passed }, fields))
}

fn case_tag(kind: AppendixCaseKind) -> &'static str {
    match kind {
        AppendixCaseKind::FlatBottom => "flat_bottom",
        AppendixCaseKind::FlatFlat => "flat_flat",
        AppendixCaseKind::TwoStagnation => "two_stagnation",
    }
}

/// Write the summary, plots and fields, then fail with the output directory
/// as the artifact dump when any case missed its expected verdict.
pub fn write_appendix(dir: &Path, summary: &AppendixSummary, fields: &[AppendixFields]) -> Result<()> {
    prepare_dirs(dir)?;
    write_json(&dir.join("summary.json"), summary)?;
    for f in fields {
        let name = format!("{}_{}", case_tag(f.kind), eps_tag(f.epsilon));
        std::fs::write(dir.join("plots").join(format!("{name}.svg")), super::svg::render_default(&f.psi, &f.islands, &f.critical))?;
        f.psi.save_binary(dir.join("fields").join(format!("{name}.bin")))?;
    }
    if !summary.passed {
        let failed: Vec<&str> = summary.cases.iter().filter(|c| !c.passed).map(|c| case_tag(c.kind)).collect();
        return Err(Error::AssertionFailed {
            message: format!("island verdict not met for {}", failed.join(", ")),
            dump: dir.to_path_buf(),
        });
    }
    Ok(())
}

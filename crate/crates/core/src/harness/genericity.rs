//! Random boundary perturbations and how often they produce islands.
//!
//! The sampling law (modes up to 4, uniform coefficients, joint sup-norm
//! normalisation) is a choice of this harness. Genericity in the underlying
//! theory is topological (open and dense), so the fractions reported here say
//! nothing about measure.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::config::ExperimentConfig;
use super::pipeline::{run_point, BaseState, PointOptions};
use super::sweep::with_jobs;
use crate::error::Result;
use crate::expansion::gamma0_trace;
use crate::geometry::{membership_bprime, BoundaryShape, FourierSeries, Mode, AUDIT_POINTS};
use crate::steady::NewtonOptions;

pub const MAX_SAMPLE_MODE: u32 = 4;
/// Relative trace oscillation below which `phi` counts as constant on the stagnation line.
pub const LAMINAR_TRACE_TOL: f64 = 1e-8;

fn random_series(rng: &mut ChaCha8Rng) -> FourierSeries {
    FourierSeries::new((0..=MAX_SAMPLE_MODE).map(|k| Mode {
        k,
        cos: rng.gen_range(-1.0..=1.0),
        sin: if k == 0 { 0.0 } else { rng.gen_range(-1.0..=1.0) },
    }))
}

/// Scale `(g, h)` together so that the larger of their sup norms is one.
fn normalise(g: FourierSeries, h: FourierSeries) -> (FourierSeries, FourierSeries) {
    let sup = (0..AUDIT_POINTS)
        .map(|i| {
            let x = TAU * i as f64 / AUDIT_POINTS as f64;
            g.eval(x).abs().max(h.eval(x).abs())
        })
        .fold(0.0, f64::max);
    if sup == 0.0 {
        return (g, h);
    }
    (g.scale(1.0 / sup), h.scale(1.0 / sup))
}

/// `count` generic pairs followed by `complement` pairs with `h + g` constant.
pub fn draw_pairs(seed: u64, count: usize, complement: usize) -> Vec<(FourierSeries, FourierSeries, bool)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count + complement);
    for _ in 0..count {
        let g = random_series(&mut rng);
        let h = random_series(&mut rng);
        let (g, h) = normalise(g, h);
        out.push((g, h, false));
    }
    for _ in 0..complement {
        let g = random_series(&mut rng);
        let c: f64 = rng.gen_range(-1.0..=1.0);
        let h = FourierSeries::constant(c).add(&g.scale(-1.0));
        let (g, h) = normalise(g, h);
        out.push((g, h, true));
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct GenericitySample {
    pub index: usize,
    /// Drawn with `h + g` constant.
    pub complement: bool,
    pub g: FourierSeries,
    pub h: FourierSeries,
    pub bprime: bool,
    pub b0: Option<bool>,
    pub phi_max: Option<f64>,
    /// Oscillation of the trace of `phi` on the stagnation line over `||phi||_inf`.
    pub relative_oscillation: Option<f64>,
    pub island_count: usize,
    pub max_height: Option<f64>,
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GenericitySummary {
    pub seed: u64,
    pub epsilon: f64,
    pub bprime_members: usize,
    pub bprime_with_islands: usize,
    /// Fraction of members of the generic class with at least one island.
    pub island_fraction: Option<f64>,
    pub b0_members: usize,
    pub complement_samples: usize,
    pub complement_max_relative_oscillation: Option<f64>,
    pub complement_with_islands: usize,
    pub samples: Vec<GenericitySample>,
}

fn analyse(base: &BaseState, cfg: &ExperimentConfig, index: usize, g: FourierSeries, h: FourierSeries, complement: bool) -> GenericitySample {
    let eps = cfg.sweep.genericity_epsilon;
    let shape = BoundaryShape {
        pert_bottom: g.clone(),
        pert_top: h.clone(),
        epsilon: eps,
        ..cfg.shape.clone()
    };
    let mut s = GenericitySample {
        index,
        complement,
        bprime: membership_bprime(&shape),
        g,
        h,
        b0: None,
        phi_max: None,
        relative_oscillation: None,
        island_count: 0,
        max_height: None,
        errors: Vec::new(),
    };
    let local = match base.for_shape(&shape, &cfg.nonlinearity) {
        Ok(b) => b,
        Err(e) => {
            s.errors.push(format!("first order: {e}"));
            return s;
        }
    };
    let phi_max = local.phi.max_abs();
    s.phi_max = Some(phi_max);
    s.b0 = local.b0.as_ref().map(|b| b.member);
    match gamma0_trace(&local.phi, &local.profile) {
        Ok(t) => s.relative_oscillation = Some(if phi_max > 0.0 { t.oscillation / phi_max } else { 0.0 }),
        Err(e) => s.errors.push(format!("trace: {e}")),
    }
    let opts = PointOptions {
        newton: NewtonOptions::default(),
        fixed_point: false,
        max_iter: cfg.sweep.max_iter,
    };
    let point = run_point(&local, &shape, &cfg.nonlinearity, &cfg.sweep.deltas, opts).record;
    s.island_count = point.island_count;
    s.max_height = point.max_height;
    s.errors.extend(point.errors);
    s
}

pub fn run_genericity(cfg: &ExperimentConfig, jobs: usize) -> Result<GenericitySummary> {
    cfg.validate()?;
    let base = BaseState::new(&cfg.shape.base(), &cfg.nonlinearity, cfg.grid.nx, cfg.grid.ns, NewtonOptions::default())?;
    let pairs = draw_pairs(cfg.seed, cfg.sweep.samples, cfg.sweep.complement_samples);
    let samples: Vec<GenericitySample> = with_jobs(jobs, || {
        pairs
            .into_par_iter()
            .enumerate()
            .map(|(i, (g, h, c))| analyse(&base, cfg, i, g, h, c))
            .collect()
    });
    let generic: Vec<&GenericitySample> = samples.iter().filter(|s| s.bprime).collect();
    let bprime_with_islands = generic.iter().filter(|s| s.island_count > 0).count();
    let comp: Vec<&GenericitySample> = samples.iter().filter(|s| s.complement).collect();
    Ok(GenericitySummary {
        seed: cfg.seed,
        epsilon: cfg.sweep.genericity_epsilon,
        bprime_members: generic.len(),
        bprime_with_islands,
        island_fraction: (!generic.is_empty()).then(|| bprime_with_islands as f64 / generic.len() as f64),
        b0_members: samples.iter().filter(|s| s.b0 == Some(true)).count(),
        complement_samples: comp.len(),
        complement_max_relative_oscillation: comp.iter().filter_map(|s| s.relative_oscillation).reduce(f64::max),
        complement_with_islands: comp.iter().filter(|s| s.island_count > 0).count(),
        samples,
    })
}

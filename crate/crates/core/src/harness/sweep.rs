//! Epsilon sweeps and the scaling fits over them.

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::config::ExperimentConfig;
use super::fit::{log_log_fit, scaling_fit, PowerFit, MIN_FIT_POINTS};
use super::pipeline::{run_point, BaseState, PointOptions, PointRecord, PointResult};
use super::{eps_tag, prepare_dirs, write_json};
use crate::error::{Error, Result};
use crate::expansion::B0Membership;
use crate::steady::NewtonOptions;

#[derive(Debug, Clone, Serialize)]
pub struct SweepRecord {
    pub b0: Option<B0Membership>,
    pub points: Vec<PointRecord>,
    /// Island height against epsilon; needs [`MIN_FIT_POINTS`] successful points.
    pub height_fit: Option<PowerFit>,
    pub remainder_fit: Option<PowerFit>,
    /// Largest epsilon at which every stage succeeded.
    pub epsilon_star: Option<f64>,
}

impl SweepRecord {
    pub fn successes(&self) -> usize {
        self.points.iter().filter(|p| p.ok).count()
    }
}

/// Run `f` on a pool of `jobs` threads, or rayon's global pool when `jobs` is 0.
pub fn with_jobs<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> T {
    if jobs == 0 {
        return f();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

fn fit_columns(points: &[PointRecord]) -> (Option<PowerFit>, Option<PowerFit>) {
    let ok: Vec<&PointRecord> = points.iter().filter(|p| p.ok).collect();
    let heights: Vec<(f64, f64)> = ok.iter().filter_map(|p| p.max_height.map(|h| (p.epsilon, h))).collect();
    let rems: Vec<(f64, f64)> = ok.iter().filter_map(|p| p.r_max.map(|r| (p.epsilon, r))).collect();
    let fit = |v: &[(f64, f64)]| {
        let (e, y): (Vec<f64>, Vec<f64>) = v.iter().copied().unzip();
        scaling_fit(&e, &y)
    };
    (fit(&heights), fit(&rems))
}

/// Solve, expand and analyse at every configured epsilon. Individual failures
/// are recorded; the sweep fails only when at least [`MIN_FIT_POINTS`] values
/// were requested and fewer succeeded.
pub fn run_sweep(cfg: &ExperimentConfig, jobs: usize) -> Result<(SweepRecord, Vec<PointResult>)> {
    cfg.validate()?;
    let f = &cfg.nonlinearity;
    let base = BaseState::new(&cfg.shape, f, cfg.grid.nx, cfg.grid.ns, NewtonOptions::default())?;
    let opts = PointOptions {
        newton: NewtonOptions::default(),
        fixed_point: cfg.sweep.fixed_point,
        max_iter: cfg.sweep.max_iter,
    };
    let results: Vec<PointResult> = with_jobs(jobs, || {
        cfg.sweep
            .epsilons
            .par_iter()
            .map(|&eps| run_point(&base, &cfg.shape_at(eps), f, &cfg.sweep.deltas, opts))
            .collect()
    });
    let points: Vec<PointRecord> = results.iter().map(|r| r.record.clone()).collect();
    let (height_fit, remainder_fit) = fit_columns(&points);
    let epsilon_star = points.iter().filter(|p| p.ok).map(|p| p.epsilon).reduce(f64::max);
    let record = SweepRecord {
        b0: base.b0.clone(),
        points,
        height_fit,
        remainder_fit,
        epsilon_star,
    };
    let wanted = cfg.sweep.epsilons.len();
    if wanted >= MIN_FIT_POINTS && record.successes() < MIN_FIT_POINTS {
        return Err(Error::SweepFailed {
            succeeded: record.successes(),
            required: MIN_FIT_POINTS,
        });
    }
    Ok((record, results))
}

/// `epsilon, r_max, height, slope_so_far` with the running log-log height slope
/// over the rows up to and including the current one.
pub fn results_csv(record: &SweepRecord) -> String {
    let mut out = String::from("epsilon,r_max,height,slope_so_far\n");
    let (mut es, mut hs) = (Vec::new(), Vec::new());
    let opt = |v: Option<f64>| v.map(|v| format!("{v:.12e}")).unwrap_or_default();
    for p in &record.points {
        if let (true, Some(h)) = (p.ok, p.max_height) {
            es.push(p.epsilon);
            hs.push(h);
        }
        let slope = log_log_fit(&es, &hs).map(|f| f.slope);
        out.push_str(&format!("{},{},{},{}\n", p.epsilon, opt(p.r_max), opt(p.max_height), opt(slope)));
    }
    out
}

/// Write `results.csv`, `summary.json`, one plot and one field per epsilon.
pub fn write_sweep(dir: &Path, record: &SweepRecord, results: &[PointResult]) -> Result<()> {
    prepare_dirs(dir)?;
    std::fs::write(dir.join("results.csv"), results_csv(record))?;
    write_json(&dir.join("summary.json"), record)?;
    for r in results {
        let Some(psi) = &r.psi else { continue };
        let tag = eps_tag(r.record.epsilon);
        std::fs::write(
            dir.join("plots").join(format!("psi_{tag}.svg")),
            super::svg::render_default(psi, &r.record.islands, &r.critical),
        )?;
        psi.save_binary(dir.join("fields").join(format!("psi_{tag}.bin")))?;
    }
    Ok(())
}

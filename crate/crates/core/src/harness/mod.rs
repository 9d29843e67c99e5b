//! Experiment driver: configuration, epsilon sweeps, genericity sampling,
//! scaling fits and the tables and plots they produce.
//!
//! Outputs never contain timings, so a fixed config and seed give
//! byte-identical CSV and JSON.

pub mod appendix;
pub mod config;
pub mod fit;
pub mod genericity;
pub mod pipeline;
pub mod runs;
pub mod svg;
pub mod sweep;

use std::path::Path;

use serde::Serialize;

use crate::error::Result;

pub use appendix::{run_appendix_a, write_appendix, AppendixSummary};
pub use config::{AppendixCaseKind, ExperimentConfig, ExperimentKind};
pub use fit::{log_log_fit, scaling_fit, PowerFit, MIN_FIT_POINTS};
pub use genericity::{run_genericity, GenericitySummary};
pub use pipeline::{run_point, BaseState, PointOptions, PointRecord, PointResult};
pub use runs::{run_expand, run_fixed_point, run_oracle, run_solve, write_expand, write_fixed_point, write_oracle, write_solve};
pub use svg::{emit_svg, render_svg};
pub use sweep::{run_sweep, write_sweep, SweepRecord};

/// Create `dir` with its `plots/` and `fields/` subdirectories.
pub fn prepare_dirs(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir.join("plots"))?;
    std::fs::create_dir_all(dir.join("fields"))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// File-name fragment for an epsilon, e.g. `0.02` becomes `eps0.02`.
pub fn eps_tag(eps: f64) -> String {
    format!("eps{eps}")
}

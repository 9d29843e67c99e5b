//! Experiment configuration, read from TOML.
//!
//! ```toml
//! kind = "sweep"
//! seed = 7
//!
//! [shape]
//! pert_top = [[1, 1.0, 0.0]]   # h = cos x
//!
//! [nonlinearity]
//! polynomial = [-1.0]
//!
//! [grid]
//! nx = 128
//! ns = 129
//!
//! [sweep]
//! epsilons = [0.04, 0.02, 0.01, 0.005]
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BoundaryShape, MIN_RESOLUTION};
use crate::steady::Nonlinearity;
use crate::topology::DEFAULT_DELTAS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Solve,
    Expand,
    Sweep,
    Genericity,
    #[serde(alias = "appendixA")]
    AppendixA,
    #[serde(alias = "fixedpoint")]
    FixedPoint,
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub nx: usize,
    pub ns: usize,
    /// Column counts for convergence studies; each uses `ns = nx + 1`.
    pub resolutions: Vec<usize>,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            nx: 128,
            ns: 129,
            resolutions: vec![32, 64, 128],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub epsilons: Vec<f64>,
    pub deltas: Vec<f64>,
    /// Random pairs drawn by the genericity study.
    pub samples: usize,
    /// Pairs drawn from the complement `h + g = const`.
    pub complement_samples: usize,
    /// Amplitude at which genericity samples are analysed.
    pub genericity_epsilon: f64,
    /// Run the Picard iteration at every sweep point.
    pub fixed_point: bool,
    pub max_iter: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            epsilons: vec![0.04, 0.02, 0.01, 0.005],
            deltas: DEFAULT_DELTAS.to_vec(),
            samples: 50,
            complement_samples: 5,
            genericity_epsilon: 0.02,
            fixed_point: false,
            max_iter: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AppendixCaseKind {
    /// Flat bottom, wavy top, equal boundary values.
    FlatBottom,
    FlatFlat,
    /// A base flow with several stagnation heights and both walls perturbed.
    TwoStagnation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppendixConfig {
    pub cases: Vec<AppendixCaseKind>,
}

impl Default for AppendixConfig {
    fn default() -> Self {
        AppendixConfig {
            cases: vec![AppendixCaseKind::FlatBottom, AppendixCaseKind::FlatFlat, AppendixCaseKind::TwoStagnation],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Option<ExperimentKind>,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub shape: BoundaryShape,
    pub nonlinearity: Nonlinearity,
    pub grid: GridConfig,
    pub sweep: SweepConfig,
    pub appendix: AppendixConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            kind: None,
            seed: 0,
            out: None,
            shape: BoundaryShape::flat(),
            nonlinearity: Nonlinearity::couette(),
            grid: GridConfig::default(),
            sweep: SweepConfig::default(),
            appendix: AppendixConfig::default(),
        }
    }
}

fn strictly_monotone(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] < w[1]) || v.windows(2).all(|w| w[0] > w[1])
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<()> {
        let eps = &self.sweep.epsilons;
        if eps.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
            return Err(Error::Config("epsilons must be positive and finite".into()));
        }
        if !strictly_monotone(eps) {
            return Err(Error::Config("epsilons must be sorted without repeats".into()));
        }
        if !(self.sweep.genericity_epsilon > 0.0 && self.sweep.genericity_epsilon.is_finite()) {
            return Err(Error::Config("genericity_epsilon must be positive".into()));
        }
        if self.sweep.deltas.iter().any(|&d| !(d > 0.0 && d < 1.0)) {
            return Err(Error::Config("deltas must lie in (0, 1)".into()));
        }
        if !self.grid.resolutions.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Config("resolutions must be ascending".into()));
        }
        if self.grid.nx < MIN_RESOLUTION || self.grid.ns < MIN_RESOLUTION {
            return Err(Error::InvalidResolution {
                nx: self.grid.nx,
                ns: self.grid.ns,
            });
        }
        if !self.nonlinearity.is_finite() {
            return Err(Error::Config("nonlinearity has non-finite coefficients".into()));
        }
        self.shape.validate()
    }

    /// The configured shape at amplitude `eps`.
    pub fn shape_at(&self, eps: f64) -> BoundaryShape {
        self.shape.with_epsilon(eps)
    }

    /// Reject a config written for another experiment.
    pub fn expect_kind(&self, kind: ExperimentKind) -> Result<()> {
        match self.kind {
            Some(k) if k != kind => Err(Error::Config(format!("config is for {k:?}, not {kind:?}"))),
            _ => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_config() {
        let cfg = ExperimentConfig::from_toml(
            r#"
            kind = "appendix-a"
            seed = 3
            [shape]
            pert_top = [[1, 1.0, 0.0]]
            epsilon = 0.02
            [nonlinearity]
            polynomial = [-1.0]
            sinusoids = [[0.3, 1.0, 0.0]]
            [sweep]
            epsilons = [0.04, 0.02]
            "#,
        )
        .unwrap();
        assert_eq!(cfg.kind, Some(ExperimentKind::AppendixA));
        assert_eq!(cfg.grid, GridConfig::default());
        assert_eq!(cfg.shape.pert_top.eval(0.0), 1.0);
        assert_eq!(cfg.nonlinearity, Nonlinearity::wavy());
        let back = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn rejects_bad_lists() {
        let bad = ["[sweep]\nepsilons = [0.01, 0.01]", "[sweep]\nepsilons = [0.0, 0.01]", "[grid]\nresolutions = [64, 32]", "bogus = 1"];
        for text in bad {
            assert!(matches!(ExperimentConfig::from_toml(text), Err(Error::Config(_))), "{text}");
        }
    }
}

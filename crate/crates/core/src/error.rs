use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("boundaries cross: minimum thickness {min_gap:.3e} at x = {at_x:.4}")]
    BoundaryCrossing { min_gap: f64, at_x: f64 },

    #[error("resolution {nx}x{ns} below minimum 8x8")]
    InvalidResolution { nx: usize, ns: usize },

    #[error("invalid boundary shape: {0}")]
    InvalidShape(String),

    #[error("singular or sign-indefinite system: {0}")]
    SingularSystem(String),

    #[error("iteration did not converge after {iterations} iterations (last change {last_change:.3e})")]
    NoConvergence { iterations: usize, last_change: f64 },

    #[error("Newton diverged after {iterations} iterations, residual {residual:.3e}")]
    NewtonDiverged {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("elliptic stability violated: min F' = {min_derivative:.4} <= -lambda1 = {neg_lambda1:.4}")]
    StabilityViolated { min_derivative: f64, neg_lambda1: f64 },

    #[error("shear profile has no stagnation point")]
    NoStagnation,

    #[error("fields live on different grids: {0}")]
    GridMismatch(String),

    #[error("fixed-point map is not contracting (factor {factor:.3})")]
    NotContracting { factor: f64 },

    #[error("singular streamline left its search window at column {column}")]
    WindowExit { column: usize },

    #[error("no island found")]
    NoIsland,

    #[error("degenerate Hessian (det = {det:.3e})")]
    DegenerateHessian { det: f64 },

    #[error("sweep failed: {succeeded} epsilon values succeeded, {required} required")]
    SweepFailed { succeeded: usize, required: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("assertion failed: {message} (artifacts in {})", dump.display())]
    AssertionFailed { message: String, dump: PathBuf },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

//! Steady Euler states `Delta psi = F(psi)` on perturbed periodic channels.
//!
//! The crate solves the base shear flow and the perturbed steady state, builds
//! the first-order boundary-perturbation expansion and its remainder, and
//! analyses the streamline topology of the result: critical points, the
//! near-singular streamline, and islands of closed streamlines with their size.

pub mod error;
pub mod expansion;
pub mod field;
pub mod geometry;
pub mod harness;
pub mod operators;
pub mod oracles;
pub mod steady;
pub mod topology;

pub use error::{Error, Result};
pub use expansion::{
    compute_remainder, eta_interpolant, fixed_point_solve, gamma0_trace, membership_b0,
    solve_first_order, B0Membership, ExpansionReport, FixedPointTrace, TraceRecord,
};
pub use field::ScalarField;
pub use geometry::{build_grid, membership_bprime, BoundaryShape, FourierSeries, GridRef, MappedGrid, Mode};
pub use operators::{assemble_helmholtz, assemble_laplacian, smallest_eigenvalue, solve_dirichlet, LinearOperator};
pub use steady::{check_stability, solve_perturbed, solve_shear, solve_steady, solve_steady_with, NewtonOptions, Nonlinearity, ShearProfile, SteadySolution};
pub use topology::{
    detect_islands, find_critical_points, hessian_diagnostic, singular_streamline, trace_level_set,
    CriticalKind, CriticalPoint, IslandReport, StreamlineCurve,
};

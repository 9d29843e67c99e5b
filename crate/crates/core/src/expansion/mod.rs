//! The first-order expansion `psi_eps = psi0 + eps phi + r_eps` around a shear
//! flow, the Picard form of the remainder equation and the traces of `phi` on
//! the stagnation line.

mod first_order;
mod fixed_point;
mod remainder;
mod trace;

pub use first_order::{extend_phi, extend_shear, solve_first_order, wall_normal_derivatives};
pub use fixed_point::{eta_interpolant, fixed_point_solve, FixedPointTrace, MAX_FACTOR, STEP_TOL};
pub use remainder::{compute_remainder, difference_quotient, first_order_approximation, ExpansionReport};
pub use trace::{b0_from_trace, gamma0_trace, membership_b0, B0Membership, TraceMax, TraceRecord, TrigInterp};

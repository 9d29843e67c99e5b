//! Base shear flows and fully nonlinear steady states.

mod newton;
mod nonlinearity;
mod shear;

pub use newton::{
    initial_guess, solve_perturbed, solve_steady, solve_steady_with, steady_residual, NewtonLogEntry, NewtonOptions,
    SteadySolution,
};
pub use nonlinearity::{check_stability, Nonlinearity, Sinusoid};
pub use shear::{solve_shear, solve_shear_with, ShearProfile};

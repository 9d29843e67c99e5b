//! Traces of `phi` along the stagnation line of the base flow and the
//! nondegeneracy test built on them.

use std::f64::consts::TAU;
use std::io::{self, BufWriter, Write};

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use super::first_order::solve_first_order;
use crate::error::Result;
use crate::field::{lagrange, stencil_start, ScalarField};
use crate::geometry::{BoundaryShape, MappedGrid, TAU_COEF};
use crate::steady::{initial_guess, solve_steady, Nonlinearity, ShearProfile};

const NEWTON_ITER: usize = 30;
/// Samples within this fraction of the trace range of the top value count as global maxima.
const MAX_BAND: f64 = 1e-7;

/// Real trigonometric interpolant of periodic samples on a uniform grid.
#[derive(Debug, Clone)]
pub struct TrigInterp {
    /// `(k, a_k, b_k)` with the trace `sum a_k cos kx + b_k sin kx`.
    terms: Vec<(f64, f64, f64)>,
}

impl TrigInterp {
    pub fn new(samples: &[f64]) -> Self {
        let n = samples.len();
        let nf = n as f64;
        let mut buf: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let mut terms = Vec::with_capacity(n / 2 + 1);
        for (k, c) in buf.iter().enumerate().take(n / 2 + 1) {
            let w = if k == 0 || 2 * k == n { 1.0 / nf } else { 2.0 / nf };
            // the Nyquist sine term vanishes on the grid and is dropped
            let b = if 2 * k == n { 0.0 } else { -c.im * w };
            terms.push((k as f64, c.re * w, b));
        }
        TrigInterp { terms }
    }

    pub fn derivative(&self, x: f64, order: u32) -> f64 {
        self.terms
            .iter()
            .map(|&(k, a, b)| {
                let (s, c) = (k * x).sin_cos();
                let kp = k.powi(order as i32);
                // d^m/dx^m of cos and sin cycle with period 4
                match order % 4 {
                    0 => kp * (a * c + b * s),
                    1 => kp * (-a * s + b * c),
                    2 => kp * (-a * c - b * s),
                    _ => kp * (a * s - b * c),
                }
            })
            .sum()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.derivative(x, 0)
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TraceMax {
    pub x: f64,
    pub value: f64,
    pub second_derivative: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceRecord {
    pub y0: f64,
    pub x: Vec<f64>,
    pub values: Vec<f64>,
    /// `max - min` of the samples.
    pub oscillation: f64,
    pub maxima: Vec<TraceMax>,
}

impl TraceRecord {
    pub fn interpolant(&self) -> TrigInterp {
        TrigInterp::new(&self.values)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn write_csv(&self, w: impl Write) -> io::Result<()> {
        let mut w = BufWriter::new(w);
        writeln!(w, "x,value")?;
        for (x, v) in self.x.iter().zip(&self.values) {
            writeln!(w, "{x:.17e},{v:.17e}")?;
        }
        w.flush()
    }
}

/// Cubic interpolation of a column at reference height `s`.
fn column_value(field: &ScalarField, i: usize, s: f64) -> f64 {
    let g = &field.grid;
    let start = stencil_start(s, g.ds, g.ns, 4);
    lagrange(&g.s[start..start + 4], &field.column(i)[start..start + 4], s)
}

/// Polish a maximum of the trace by Newton on its derivative, steps capped at one cell.
fn refine_max(tr: &TrigInterp, x: f64, cell: f64) -> f64 {
    let mut x = x;
    for _ in 0..NEWTON_ITER {
        let d2 = tr.derivative(x, 2);
        if d2 >= 0.0 {
            break;
        }
        let step = (tr.derivative(x, 1) / d2).clamp(-cell, cell);
        x -= step;
        if step.abs() < 1e-15 {
            break;
        }
    }
    x.rem_euclid(TAU)
}

/// `phi(x_i, y0)` at every column of the grid of `phi`.
pub fn gamma0_trace(phi: &ScalarField, profile: &ShearProfile) -> Result<TraceRecord> {
    let y0 = profile.y0()?;
    let g = &phi.grid;
    let values: Vec<f64> = (0..g.nx).map(|i| column_value(phi, i, g.s_at(g.x[i], y0))).collect();
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let range = hi - lo;
    let tr = TrigInterp::new(&values);
    let n = values.len();
    let mut maxima = Vec::new();
    let scale = phi.max_abs().max(f64::MIN_POSITIVE);
    if range <= 1e-12 * scale {
        // a flat trace has no distinguished maximum; report one representative
        maxima.push(TraceMax {
            x: 0.0,
            value: values[0],
            second_derivative: tr.derivative(0.0, 2),
        });
    } else {
        for i in 0..n {
            let (prev, next) = (values[(i + n - 1) % n], values[(i + 1) % n]);
            if values[i] >= prev && values[i] >= next && values[i] >= hi - MAX_BAND * range {
                let x = refine_max(&tr, g.x[i], g.dx);
                maxima.push(TraceMax {
                    x,
                    value: tr.eval(x),
                    second_derivative: tr.derivative(x, 2),
                });
            }
        }
    }
    Ok(TraceRecord {
        y0,
        x: g.x.clone(),
        values,
        oscillation: range,
        maxima,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct B0Membership {
    pub member: bool,
    pub phi_max: f64,
    pub trace_max: f64,
    /// Curvature threshold used for nondegeneracy.
    pub curvature_tol: f64,
    pub witness: Vec<TraceMax>,
}

/// Decide membership from a trace. The curvature threshold is
/// `max(TAU_COEF, dx^2) * |phi|_inf`: the discrete trace resolves `phi_xx` only to `O(dx^2)`.
pub fn b0_from_trace(trace: &TraceRecord, phi_max: f64) -> B0Membership {
    let dx = TAU / trace.x.len() as f64;
    let value_tol = TAU_COEF * phi_max;
    let curvature_tol = TAU_COEF.max(dx * dx) * phi_max;
    let trace_max = trace.max_value();
    let member = phi_max > 0.0
        && trace_max.abs() > value_tol
        && trace.oscillation > value_tol
        && !trace.maxima.is_empty()
        && trace.maxima.iter().all(|m| m.second_derivative < -curvature_tol);
    B0Membership {
        member,
        phi_max,
        trace_max,
        curvature_tol,
        witness: trace.maxima.clone(),
    }
}

/// Solve the base state and `phi` on the base channel of `shape` and test the trace.
pub fn membership_b0(shape: &BoundaryShape, f: &Nonlinearity, profile: &ShearProfile, nx: usize, ns: usize) -> Result<B0Membership> {
    let base = MappedGrid::build(&shape.base(), nx, ns)?;
    let psi0 = solve_steady(&base, f, &initial_guess(&base, profile))?;
    let phi = solve_first_order(&base, f, &psi0, shape)?;
    let trace = gamma0_trace(&phi, profile)?;
    Ok(b0_from_trace(&trace, phi.max_abs()))
}

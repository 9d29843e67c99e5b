//! Least-squares power laws `value ~ C eps^p` in log-log coordinates.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

/// Fewest points for which a scaling slope is reported.
pub const MIN_FIT_POINTS: usize = 4;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PowerFit {
    pub slope: f64,
    /// `ln C`.
    pub intercept: f64,
    /// 95% confidence interval of the slope.
    pub ci_low: f64,
    pub ci_high: f64,
    pub points: usize,
}

/// Ordinary least squares of `ln value` against `ln eps`; `None` with fewer than
/// two usable points. The interval is degenerate (equal to the slope) for two points.
pub fn log_log_fit(eps: &[f64], values: &[f64]) -> Option<PowerFit> {
    let pts: Vec<(f64, f64)> = eps
        .iter()
        .zip(values)
        .filter(|(e, v)| **e > 0.0 && **v > 0.0 && v.is_finite())
        .map(|(e, v)| (e.ln(), v.ln()))
        .collect();
    let n = pts.len();
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let half = if n > 2 {
        let sse: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
        let se = (sse / (nf - 2.0) / sxx).sqrt();
        let t = StudentsT::new(0.0, 1.0, nf - 2.0).expect("positive degrees of freedom");
        t.inverse_cdf(0.975) * se
    } else {
        0.0
    };
    Some(PowerFit {
        slope,
        intercept,
        ci_low: slope - half,
        ci_high: slope + half,
        points: n,
    })
}

/// [`log_log_fit`] only when at least [`MIN_FIT_POINTS`] points are usable.
pub fn scaling_fit(eps: &[f64], values: &[f64]) -> Option<PowerFit> {
    log_log_fit(eps, values).filter(|f| f.points >= MIN_FIT_POINTS)
}

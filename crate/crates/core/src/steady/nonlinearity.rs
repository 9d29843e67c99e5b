use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Number of samples used when minimising `F'` over a value range.
pub const STABILITY_SAMPLES: usize = 1000;

/// `amplitude * sin(omega * t + phase)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "(f64, f64, f64)", into = "(f64, f64, f64)")]
pub struct Sinusoid {
    pub amplitude: f64,
    pub omega: f64,
    pub phase: f64,
}

impl From<(f64, f64, f64)> for Sinusoid {
    fn from((amplitude, omega, phase): (f64, f64, f64)) -> Self {
        Sinusoid { amplitude, omega, phase }
    }
}

impl From<Sinusoid> for (f64, f64, f64) {
    fn from(s: Sinusoid) -> Self {
        (s.amplitude, s.omega, s.phase)
    }
}

/// Vorticity function `F` as a polynomial plus a sum of sinusoids.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Nonlinearity {
    /// Coefficients `p_0, p_1, ..` of `sum p_k t^k`.
    #[serde(default)]
    pub polynomial: Vec<f64>,
    #[serde(default)]
    pub sinusoids: Vec<Sinusoid>,
}

impl Nonlinearity {
    pub fn polynomial(coeffs: impl Into<Vec<f64>>) -> Self {
        Nonlinearity {
            polynomial: coeffs.into(),
            sinusoids: Vec::new(),
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::polynomial(vec![c])
    }

    /// `F = -1`, whose shear solution is plane Couette-Poiseuille flow.
    pub fn couette() -> Self {
        Self::constant(-1.0)
    }

    pub fn with_sinusoid(mut self, amplitude: f64, omega: f64, phase: f64) -> Self {
        self.sinusoids.push(Sinusoid { amplitude, omega, phase });
        self
    }

    /// `F = -1 + 0.3 sin t`.
    pub fn wavy() -> Self {
        Self::couette().with_sinusoid(0.3, 1.0, 0.0)
    }

    /// Derivative of order 0, 1 or 2.
    pub fn derivative(&self, t: f64, order: u32) -> f64 {
        let mut acc = 0.0;
        // Horner on the differentiated coefficients
        for (k, &p) in self.polynomial.iter().enumerate().skip(order as usize).rev() {
            let falling: f64 = (0..order).map(|m| (k as u32 - m) as f64).product();
            acc = acc * t + p * falling;
        }
        for s in &self.sinusoids {
            let arg = s.omega * t + s.phase;
            let w = s.omega.powi(order as i32);
            acc += s.amplitude
                * w
                * match order % 4 {
                    0 => arg.sin(),
                    1 => arg.cos(),
                    2 => -arg.sin(),
                    _ => -arg.cos(),
                };
        }
        acc
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.derivative(t, 0)
    }

    pub fn d1(&self, t: f64) -> f64 {
        self.derivative(t, 1)
    }

    pub fn d2(&self, t: f64) -> f64 {
        self.derivative(t, 2)
    }

    /// True when `F'' = 0` identically.
    pub fn is_affine(&self) -> bool {
        self.sinusoids.iter().all(|s| s.amplitude == 0.0 || s.omega == 0.0)
            && self.polynomial.iter().skip(2).all(|&p| p == 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.polynomial.iter().all(|p| p.is_finite())
            && self
                .sinusoids
                .iter()
                .all(|s| s.amplitude.is_finite() && s.omega.is_finite() && s.phase.is_finite())
    }

    /// Minimum of `F'` over a uniform sample of `[lo, hi]`.
    pub fn min_derivative(&self, lo: f64, hi: f64) -> f64 {
        (0..STABILITY_SAMPLES)
            .map(|k| {
                let t = lo + (hi - lo) * k as f64 / (STABILITY_SAMPLES - 1) as f64;
                self.d1(t)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Worst relative disagreement between `F', F''` and centred differences of
    /// `F, F'` at `samples` random points of `[lo, hi]`.
    pub fn audit(&self, lo: f64, hi: f64, samples: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..samples {
            let t = rng.gen_range(lo..=hi);
            let h = 1e-5 * t.abs().max(1.0);
            let fd1 = (self.eval(t + h) - self.eval(t - h)) / (2.0 * h);
            let fd2 = (self.d1(t + h) - self.d1(t - h)) / (2.0 * h);
            let e1 = (fd1 - self.d1(t)).abs() / self.d1(t).abs().max(1.0);
            let e2 = (fd2 - self.d2(t)).abs() / self.d2(t).abs().max(1.0);
            worst = worst.max(e1).max(e2);
        }
        worst
    }
}

/// True when `min F' > -lambda1 + 1e-6` on a 1000-point sample of `range`.
pub fn check_stability(f: &Nonlinearity, range: (f64, f64), lambda1: f64) -> bool {
    f.min_derivative(range.0, range.1) > -lambda1 + crate::operators::STABILITY_MARGIN
}

/// `range` widened by 10% of its length on each side (a unit-free 0.1 for a point).
pub(crate) fn widen(lo: f64, hi: f64) -> (f64, f64) {
    let w = if hi > lo { 0.1 * (hi - lo) } else { 0.1 * lo.abs().max(1.0) };
    (lo - w, hi + w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_derivatives() {
        let f = Nonlinearity::polynomial(vec![1.0, -2.0, 3.0, 0.5]);
        let t = 0.7;
        assert!((f.eval(t) - (1.0 - 1.4 + 3.0 * 0.49 + 0.5 * 0.343)).abs() < 1e-14);
        assert!((f.d1(t) - (-2.0 + 6.0 * t + 1.5 * t * t)).abs() < 1e-14);
        assert!((f.d2(t) - (6.0 + 3.0 * t)).abs() < 1e-14);
    }

    #[test]
    fn audit_passes_for_mixed_terms() {
        let f = Nonlinearity::polynomial(vec![0.2, -0.5, 0.1]).with_sinusoid(0.3, 2.0, 0.4);
        assert!(f.audit(-2.0, 2.0, 100, 7) < 1e-6);
        assert!(Nonlinearity::wavy().audit(-1.0, 2.0, 100, 1) < 1e-6);
    }

    #[test]
    fn stability_examples() {
        let l1 = PI * PI / 4.0;
        assert!(check_stability(&Nonlinearity::couette(), (0.0, 0.5), l1));
        assert!(!check_stability(&Nonlinearity::polynomial(vec![0.0, -3.0]), (0.0, 1.0), l1));
        assert!(check_stability(&Nonlinearity::polynomial(vec![0.0, -2.0]), (0.0, 1.0), l1));
    }

    #[test]
    fn affine_detection() {
        assert!(Nonlinearity::polynomial(vec![1.0, 2.0]).is_affine());
        assert!(!Nonlinearity::wavy().is_affine());
    }

    #[test]
    fn toml_format() {
        let f: Nonlinearity = toml::from_str("polynomial = [-1.0]\nsinusoids = [[0.3, 1.0, 0.0]]").unwrap();
        assert_eq!(f, Nonlinearity::wavy());
    }
}

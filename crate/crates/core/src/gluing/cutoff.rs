use std::sync::OnceLock;

use crate::numerics::{gauss_legendre, integrate};

/// Smooth cut-off with `β = 1` on `(−∞, −1]`, `β = 0` on `[1, ∞)`,
/// strictly decreasing in between, and `β(s) + β(−s) = 1`.
///
/// `β(s) = 1 − ∫_{−1}^{s} ρ / ∫_{−1}^{1} ρ` with the bump
/// `ρ(x) = exp(−1/(1 − x²))`. Evaluation goes through the odd part
/// `G(x) = ∫_0^x ρ / ∫_{−1}^{1} ρ`, so `β(s) = ½ − sign(s)·G(|s|)` and the
/// reflection identity holds to rounding.
#[derive(Debug, Clone, Copy)]
pub struct CutoffBeta {
    total_mass: f64,
}

const PANELS: usize = 8;
const RULE_POINTS: usize = 20;

fn rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(RULE_POINTS))
}

/// The bump `exp(−1/(1 − x²))` on `(−1, 1)`.
pub fn bump(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - x * x)).exp()
    }
}

impl CutoffBeta {
    pub fn new() -> Self {
        let half = integrate(bump, 0.0, 1.0, PANELS, rule());
        CutoffBeta {
            total_mass: 2.0 * half,
        }
    }

    fn odd_part(&self, x: f64) -> f64 {
        if x >= 1.0 {
            return 0.5;
        }
        if x <= 0.5 {
            integrate(bump, 0.0, x, PANELS, rule()) / self.total_mass
        } else {
            // integrate the short tail so that G(x) ≤ ½ holds to rounding
            (0.5 - integrate(bump, x, 1.0, PANELS, rule()) / self.total_mass).min(0.5)
        }
    }

    pub fn eval(&self, s: f64) -> f64 {
        if s <= -1.0 {
            1.0
        } else if s >= 1.0 {
            0.0
        } else if s >= 0.0 {
            0.5 - self.odd_part(s)
        } else {
            0.5 + self.odd_part(-s)
        }
    }

    pub fn derivative(&self, s: f64) -> f64 {
        -bump(s) / self.total_mass
    }
}

impl Default for CutoffBeta {
    fn default() -> Self {
        CutoffBeta::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reflection_identity_and_midpoint() {
        let b = CutoffBeta::new();
        assert!((b.eval(0.0) - 0.5).abs() < 1e-14);
        for k in 0..1000 {
            let s = -1.5 + 3.0 * k as f64 / 999.0;
            assert!((b.eval(s) + b.eval(-s) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn flat_outside_and_decreasing_inside() {
        let b = CutoffBeta::new();
        assert_eq!(b.eval(-1.0), 1.0);
        assert_eq!(b.eval(-3.0), 1.0);
        assert_eq!(b.eval(1.0), 0.0);
        let mut prev = 1.0;
        for k in 1..200 {
            let s = -1.0 + 2.0 * k as f64 / 200.0;
            let v = b.eval(s);
            // near ±1 the deviation from 0/1 drops below double precision
            if s.abs() < 0.9 {
                assert!(v < prev, "not decreasing at {s}");
            } else {
                assert!(v <= prev, "increasing at {s}");
            }
            prev = v;
        }
        // values approach the ends continuously
        assert!(b.eval(0.999) < 1e-12 && b.eval(-0.999) > 1.0 - 1e-12);
    }

    #[test]
    fn derivative_matches_difference_quotient() {
        let b = CutoffBeta::new();
        for s in [-0.7, -0.2, 0.0, 0.4] {
            let h = 1e-5;
            let fd = (b.eval(s + h) - b.eval(s - h)) / (2.0 * h);
            assert!((fd - b.derivative(s)).abs() < 1e-8);
        }
    }
}

//! Discrete Fourier operations along the circle direction `t ∈ ℝ/ℤ`.
//!
//! A row of `n` real samples at `t_j = j/n` is identified with its
//! trigonometric interpolant. The Nyquist mode is kept as `cos(π n t)`,
//! which is what taking the real part of the inverse transform produces.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

#[derive(Clone)]
pub struct Spectral {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral").field("n", &self.n).finish()
    }
}

impl Spectral {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Spectral {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Signed wavenumber of FFT bin `k`.
    pub fn wavenumber(&self, k: usize) -> i64 {
        if k <= self.n / 2 {
            k as i64
        } else {
            k as i64 - self.n as i64
        }
    }

    /// Normalized coefficients: `row[j] = Σ_k ĉ_k e^{2πi k j/n}`.
    pub fn coefficients(&self, row: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = row.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.forward.process(&mut buf);
        let scale = 1.0 / self.n as f64;
        buf.iter_mut().for_each(|c| *c *= scale);
        buf
    }

    pub fn synthesize(&self, coeffs: &[Complex64]) -> Vec<f64> {
        let mut buf = coeffs.to_vec();
        self.inverse.process(&mut buf);
        buf.iter().map(|c| c.re).collect()
    }

    /// Apply a Fourier multiplier `m(k)` to the row in place.
    pub fn multiply<F>(&self, row: &mut [f64], multiplier: F)
    where
        F: Fn(i64) -> Complex64,
    {
        let mut c = self.coefficients(row);
        for (k, ck) in c.iter_mut().enumerate() {
            *ck *= multiplier(self.wavenumber(k));
        }
        row.copy_from_slice(&self.synthesize(&c));
    }

    /// `row(t) ← row(t − phi)`.
    pub fn rotate(&self, row: &mut [f64], phi: f64) {
        if phi == 0.0 {
            return;
        }
        self.multiply(row, |k| Complex64::from_polar(1.0, -2.0 * PI * k as f64 * phi));
    }

    /// `order`-th derivative in t. Odd derivatives annihilate the Nyquist mode.
    pub fn derivative(&self, row: &mut [f64], order: u32) {
        if order == 0 {
            return;
        }
        let nyq = self.n as i64 / 2;
        let even = self.n.is_multiple_of(2);
        self.multiply(row, |k| {
            if even && k.abs() == nyq && order % 2 == 1 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, 2.0 * PI * k as f64).powu(order)
            }
        });
    }

    pub fn mean(row: &[f64]) -> f64 {
        row.iter().sum::<f64>() / row.len() as f64
    }

    /// Evaluate the interpolant (and its t-derivative) at an arbitrary `t`.
    pub fn eval_with_derivative(&self, coeffs: &[Complex64], t: f64) -> (f64, f64) {
        let nyq = self.n / 2;
        let even = self.n.is_multiple_of(2);
        let mut value = coeffs[0].re;
        let mut deriv = 0.0;
        for (k, ck) in coeffs.iter().enumerate().take(nyq + 1).skip(1) {
            let omega = 2.0 * PI * k as f64;
            if even && k == nyq {
                value += ck.re * (omega * t).cos();
                deriv -= ck.re * omega * (omega * t).sin();
            } else {
                let e = Complex64::from_polar(1.0, omega * t);
                value += 2.0 * (ck * e).re;
                deriv += 2.0 * (ck * e * Complex64::new(0.0, omega)).re;
            }
        }
        (value, deriv)
    }
}

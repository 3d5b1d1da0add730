//! The periodic line scale `E_m = H^m(ℝ/Lℤ)` and the product `ℝ ⊕ E`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Spectral;

/// Highest level with a meaningful norm on the line grid.
pub const MAX_LINE_LEVEL: usize = 3;

pub const DEFAULT_LENGTH: f64 = 8.0;
pub const DEFAULT_POINTS: usize = 16384;

/// A point `(t, u)` of `ℝ ⊕ E`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinePoint {
    pub t: f64,
    pub u: Vec<f64>,
}

impl LinePoint {
    pub fn axpy(&self, eps: f64, dir: &LinePoint) -> LinePoint {
        LinePoint {
            t: self.t + eps * dir.t,
            u: self.u.iter().zip(&dir.u).map(|(a, b)| a + eps * b).collect(),
        }
    }

    pub fn sub(&self, other: &LinePoint) -> LinePoint {
        self.axpy(-1.0, other)
    }

    pub fn scaled(&self, c: f64) -> LinePoint {
        LinePoint {
            t: c * self.t,
            u: self.u.iter().map(|v| c * v).collect(),
        }
    }
}

/// Uniform periodic grid on `[0, L)`; the spectral interpolant defines all
/// shifts, derivatives and norms.
#[derive(Debug, Clone)]
pub struct LineSpace {
    length: f64,
    spectral: Spectral,
}

impl Default for LineSpace {
    fn default() -> Self {
        LineSpace::new(DEFAULT_LENGTH, DEFAULT_POINTS).expect("default line grid")
    }
}

fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

impl LineSpace {
    pub fn new(length: f64, n: usize) -> Result<Self> {
        if !(length > 0.0) || n < 8 || !n.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!("line grid needs L > 0 and even n >= 8, got L = {length}, n = {n}")));
        }
        Ok(LineSpace {
            length,
            spectral: Spectral::new(n),
        })
    }

    pub fn len(&self) -> usize {
        self.spectral.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spectral.is_empty()
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn x(&self, i: usize) -> f64 {
        self.length * i as f64 / self.len() as f64
    }

    /// Angular frequency of wavenumber `k`.
    pub fn omega(&self, k: i64) -> f64 {
        2.0 * PI * k as f64 / self.length
    }

    pub fn sample<F: Fn(f64) -> f64>(&self, f: F) -> Vec<f64> {
        (0..self.len()).map(|i| f(self.x(i))).collect()
    }

    fn check_level(&self, level: usize) -> Result<()> {
        if level > MAX_LINE_LEVEL {
            return Err(Error::LevelOutOfRange {
                level,
                max: MAX_LINE_LEVEL,
            });
        }
        Ok(())
    }

    /// `‖u‖_m² = L Σ_k (1 + ω_k²)^m |ĉ_k|²`.
    pub fn norm(&self, u: &[f64], level: usize) -> Result<f64> {
        self.check_level(level)?;
        if u.len() != self.len() {
            return Err(Error::GridMismatch(format!("{} samples on a {}-point line grid", u.len(), self.len())));
        }
        let c = self.spectral.coefficients(u);
        let sum: f64 = c
            .iter()
            .enumerate()
            .map(|(k, ck)| {
                let w = self.omega(self.spectral.wavenumber(k));
                (1.0 + w * w).powi(level as i32) * ck.norm_sqr()
            })
            .sum();
        Ok((self.length * sum).sqrt())
    }

    /// `|t| + ‖u‖_m`.
    pub fn point_norm(&self, p: &LinePoint, level: usize) -> Result<f64> {
        Ok(p.t.abs() + self.norm(&p.u, level)?)
    }

    /// `u(· + c)`.
    pub fn shift(&self, u: &[f64], c: f64) -> Vec<f64> {
        let mut out = u.to_vec();
        self.spectral.rotate(&mut out, -c / self.length);
        out
    }

    pub fn derivative(&self, u: &[f64]) -> Vec<f64> {
        let mut out = u.to_vec();
        self.spectral.derivative(&mut out, 1);
        let scale = 1.0 / self.length;
        out.iter_mut().for_each(|v| *v *= scale);
        out
    }

    /// Apply the real Fourier multiplier `m(ω)`.
    pub fn apply_multiplier<F: Fn(f64) -> f64>(&self, u: &[f64], m: F) -> Vec<f64> {
        let mut out = u.to_vec();
        self.spectral
            .multiply(&mut out, |k| Complex64::new(m(self.omega(k)), 0.0));
        out
    }

    /// Random function with coefficients of size `(1 + ω²)^{−1/2}`: finite at
    /// level 0, divergent at level 1 under grid refinement.
    pub fn rough_probe<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        let nyq = self.len() / 2;
        let mut c = vec![Complex64::new(0.0, 0.0); self.len()];
        for k in 1..nyq {
            let w = self.omega(k as i64);
            let a = Complex64::new(gaussian(rng), gaussian(rng)) / (1.0 + w * w).sqrt();
            c[k] = a;
            c[self.len() - k] = a.conj();
        }
        self.spectral.synthesize(&c)
    }

    /// Random trigonometric polynomial with wavenumbers `1..=4` and a mean,
    /// amplitudes decaying like `2^{−k}`.
    pub fn smooth_probe<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        let mut c = vec![Complex64::new(0.0, 0.0); self.len()];
        c[0] = Complex64::new(0.5 * gaussian(rng), 0.0);
        for k in 1..=4usize {
            let a = Complex64::new(gaussian(rng), gaussian(rng)) * 0.5f64.powi(k as i32) * 0.5;
            c[k] = a;
            let m = self.len() - k;
            c[m] = a.conj();
        }
        self.spectral.synthesize(&c)
    }

    /// Fixed-seed rough directions: coefficients of modulus `(1 + ω²)^{−1/2}`
    /// and random phase, split into dyadic wavenumber bands
    /// `[2^j, 2^{j+1})`, each band normalized to unit level-0 norm. The set is
    /// bounded in `E_0` but not in `E_1`.
    pub fn rough_bands<R: Rng>(&self, rng: &mut R) -> Vec<Vec<f64>> {
        let nyq = self.len() / 2;
        let mut out = Vec::new();
        let mut lo = 1usize;
        while lo < nyq {
            let hi = (2 * lo).min(nyq);
            let mut c = vec![Complex64::new(0.0, 0.0); self.len()];
            for k in lo..hi {
                let w = self.omega(k as i64);
                let a = Complex64::from_polar(1.0 / (1.0 + w * w).sqrt(), rng.gen_range(0.0..std::f64::consts::TAU));
                c[k] = a;
                c[self.len() - k] = a.conj();
            }
            let mut u = self.spectral.synthesize(&c);
            let n = self.norm(&u, 0).expect("level 0");
            u.iter_mut().for_each(|v| *v /= n);
            out.push(u);
            lo = hi;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn norms_of_a_cosine() {
        let sp = LineSpace::new(8.0, 256).unwrap();
        let w = sp.omega(3);
        let u = sp.sample(|x| (w * x).cos());
        // ∫_0^L cos² = L/2
        let n0 = sp.norm(&u, 0).unwrap();
        assert!((n0 - 2.0).abs() < 1e-12);
        let n2 = sp.norm(&u, 2).unwrap();
        assert!((n2 - 2.0 * (1.0 + w * w)).abs() < 1e-10);
        assert!(sp.norm(&u, 4).is_err());
    }

    #[test]
    fn shift_and_derivative_are_exact_on_trig_polynomials() {
        let sp = LineSpace::new(8.0, 128).unwrap();
        let w = sp.omega(2);
        let u = sp.sample(|x| (w * x).sin());
        let v = sp.shift(&u, 0.3);
        let d = sp.derivative(&u);
        for i in 0..sp.len() {
            let x = sp.x(i);
            assert!((v[i] - (w * (x + 0.3)).sin()).abs() < 1e-13);
            assert!((d[i] - w * (w * x).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn rough_bands_are_unit_and_increasingly_rough() {
        let sp = LineSpace::new(8.0, 1024).unwrap();
        let bands = sp.rough_bands(&mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(bands.len(), 9);
        let mut last = 0.0;
        for b in &bands {
            assert!((sp.norm(b, 0).unwrap() - 1.0).abs() < 1e-12);
            let n1 = sp.norm(b, 1).unwrap();
            assert!(n1 > last);
            last = n1;
        }
    }
}

//! Shared numerical kernels: stencils, t-spectral operations, quadrature and rank tests.

pub mod spectral;
pub mod stencil;

use crate::error::{Error, Result};

pub use spectral::Spectral;
pub use stencil::{fornberg, interp_stencil, DiffOperator, InterpStencil};

/// Trapezoid weights for `n` uniform samples with spacing `h`.
pub fn trapezoid_weights(n: usize, h: f64) -> Vec<f64> {
    let mut w = vec![h; n];
    if n > 0 {
        w[0] = 0.5 * h;
        w[n - 1] = 0.5 * h;
    }
    w
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Composite Gauss–Legendre quadrature of `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize, rule: &(Vec<f64>, Vec<f64>)) -> f64 {
    let (nodes, weights) = rule;
    let width = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * width;
        let mid = lo + 0.5 * width;
        let mut acc = 0.0;
        for (x, w) in nodes.iter().zip(weights) {
            acc += w * f(mid + 0.5 * width * x);
        }
        total += 0.5 * width * acc;
    }
    total
}

/// Numerical rank from singular values: count of `σ > tau · σ_max`.
///
/// Values within one decade of the threshold make the count unreliable and
/// produce [`Error::RankUnstable`].
pub fn numerical_rank(singular_values: &[f64], tau: f64) -> Result<usize> {
    let smax = singular_values.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return Ok(0);
    }
    let mut rank = 0;
    for &s in singular_values {
        let rel = s / smax;
        if rel > tau / 10.0 && rel < tau * 10.0 {
            return Err(Error::RankUnstable(format!(
                "relative singular value {rel:.3e} within a decade of threshold {tau:.1e}"
            )));
        }
        if rel > tau {
            rank += 1;
        }
    }
    Ok(rank)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let rule = gauss_legendre(8);
        let v = integrate(|x| x.powi(6) - x, 0.0, 2.0, 1, &rule);
        assert!((v - (128.0 / 7.0 - 2.0)).abs() < 1e-12);
    }

    #[test]
    fn rank_detects_cluster() {
        assert_eq!(numerical_rank(&[1.0, 0.5, 1e-12], 1e-6).unwrap(), 2);
        assert!(numerical_rank(&[1.0, 2e-6], 1e-6).is_err());
        assert_eq!(numerical_rank(&[0.0, 0.0], 1e-6).unwrap(), 0);
    }
}

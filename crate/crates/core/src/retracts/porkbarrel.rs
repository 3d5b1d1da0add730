//! The varying-dimension retract `{(s, t f_s)}` in `ℝ ⊕ L²(ℝ)`.
//!
//! `f_s(t) = b(t + e^{1/s})` for `s > 0` and `f_s = 0` for `s ≤ 0`, where `b`
//! is a bump with unit `L²` norm supported in `[−1, 1]`. The retraction is
//! `ρ(s, x) = (s, ⟨x, f_s⟩ f_s)`; its image is a line over `s > 0` and the
//! single axis `x = 0` over `s ≤ 0`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Retraction, TangentProbing};
use crate::error::{Error, Result};
use crate::gluing::cutoff::bump;

/// A point `(s, x)` of `ℝ ⊕ L²`, with `x` sampled on the porkbarrel window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PorkPoint {
    pub s: f64,
    pub x: Vec<f64>,
}

/// Discretization of the porkbarrel example on the window `[t_lo, t_hi]`.
#[derive(Debug, Clone)]
pub struct Porkbarrel {
    t_lo: f64,
    h: f64,
    n: usize,
    s_min: f64,
}

/// Smallest positive `s` whose profile still fits in the default window.
pub const DEFAULT_S_MIN: f64 = 0.1;
pub const DEFAULT_T_HI: f64 = 20.0;
pub const DEFAULT_SPACING: f64 = 0.1;
const STENCIL_MARGIN: f64 = 0.98;

fn bump_derivative(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        0.0
    } else {
        let q = 1.0 - x * x;
        bump(x) * (-2.0 * x / (q * q))
    }
}

/// The porkbarrel retraction on the default window.
pub fn porkbarrel_retraction() -> Porkbarrel {
    Porkbarrel::new(DEFAULT_S_MIN, DEFAULT_T_HI, DEFAULT_SPACING).expect("default window is valid")
}

/// Sparse sampled profile: `values[k]` sits at index `start + k`.
struct Profile {
    start: usize,
    values: Vec<f64>,
    /// `∂_s` of the normalized samples.
    ds: Vec<f64>,
}

impl Porkbarrel {
    /// Window `[−(e^{1/(0.98 s_min)} + 2), t_hi]` with spacing `h`.
    pub fn new(s_min: f64, t_hi: f64, h: f64) -> Result<Self> {
        if !(s_min > 0.0 && h > 0.0 && t_hi > 2.0) {
            return Err(Error::InvalidGrid("porkbarrel window needs s_min > 0, h > 0, t_hi > 2".into()));
        }
        // room for finite-difference stencils reaching slightly below s_min
        let t_lo = -((1.0 / (STENCIL_MARGIN * s_min)).exp() + 2.0);
        let n = ((t_hi - t_lo) / h).round() as usize + 1;
        Ok(Porkbarrel { t_lo, h, n, s_min })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn s_min(&self) -> f64 {
        self.s_min
    }

    pub fn t(&self, i: usize) -> f64 {
        self.t_lo + i as f64 * self.h
    }

    fn check_s(&self, s: f64) -> Result<()> {
        if s > 0.0 && s < STENCIL_MARGIN * self.s_min {
            return Err(Error::DomainError(format!(
                "s = {s} in (0, {}): the profile leaves the discretization window",
                self.s_min
            )));
        }
        Ok(())
    }

    fn profile(&self, s: f64) -> Result<Option<Profile>> {
        self.check_s(s)?;
        if s <= 0.0 {
            return Ok(None);
        }
        let shift = (1.0 / s).exp();
        let d_shift = -shift / (s * s);
        // indices with |t + shift| < 1
        let lo = ((-shift - 1.0 - self.t_lo) / self.h).floor().max(0.0) as usize;
        let hi = (((-shift + 1.0 - self.t_lo) / self.h).ceil() as usize).min(self.n - 1);
        let raw: Vec<f64> = (lo..=hi).map(|i| bump(self.t(i) + shift)).collect();
        let draw: Vec<f64> = (lo..=hi).map(|i| bump_derivative(self.t(i) + shift)).collect();
        let nrm2: f64 = self.h * raw.iter().map(|v| v * v).sum::<f64>();
        let nrm = nrm2.sqrt();
        let cross: f64 = self.h * raw.iter().zip(&draw).map(|(a, b)| a * b).sum::<f64>();
        let values = raw.iter().map(|v| v / nrm).collect();
        let ds = raw
            .iter()
            .zip(&draw)
            .map(|(b, db)| d_shift * (db / nrm - b * cross / (nrm2 * nrm)))
            .collect();
        Ok(Some(Profile { start: lo, values, ds }))
    }

    /// Dense `f_s` (zero for `s ≤ 0`).
    pub fn unit_profile(&self, s: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.n];
        if let Some(p) = self.profile(s)? {
            out[p.start..p.start + p.values.len()].copy_from_slice(&p.values);
        }
        Ok(out)
    }

    /// Analytic `∂_s f_s` (zero for `s ≤ 0`).
    pub fn profile_derivative(&self, s: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.n];
        if let Some(p) = self.profile(s)? {
            out[p.start..p.start + p.ds.len()].copy_from_slice(&p.ds);
        }
        Ok(out)
    }

    fn inner(&self, x: &[f64], p: &Profile, which: &[f64]) -> f64 {
        self.h * which.iter().enumerate().map(|(k, v)| v * x[p.start + k]).sum::<f64>()
    }

    fn check_len(&self, q: &PorkPoint) -> Result<()> {
        if q.x.len() != self.n {
            return Err(Error::GridMismatch(format!("point has {} samples, window has {}", q.x.len(), self.n)));
        }
        Ok(())
    }

    /// `(s, t) ↦ (s, t f_s)` on `Z = {(s, t) : t = 0 if s ≤ 0}`.
    pub fn chart_to_retract(&self, s: f64, t: f64) -> Result<PorkPoint> {
        if s <= 0.0 && t != 0.0 {
            return Err(Error::DomainError(format!("(s, t) = ({s}, {t}) is not in Z: t must vanish for s ≤ 0")));
        }
        let f = self.unit_profile(s)?;
        Ok(PorkPoint {
            s,
            x: f.iter().map(|v| t * v).collect(),
        })
    }

    /// `(s, x) ↦ (s, ⟨x, f_s⟩)` for points on the retract.
    pub fn retract_to_chart(&self, q: &PorkPoint) -> Result<(f64, f64)> {
        self.check_len(q)?;
        let residual = self.distance(&self.apply(q)?, q)?;
        if residual > super::ON_RETRACT_TOL * (1.0 + self.norm(q)?) {
            return Err(Error::NotOnRetract { residual });
        }
        let t = match self.profile(q.s)? {
            Some(p) => self.inner(&q.x, &p, &p.values),
            None => 0.0,
        };
        Ok((q.s, t))
    }

    /// Closed-form `Dρ(s, x)[(σ, h)] = (σ, π_s h + σ(⟨x, ∂f⟩ f + ⟨x, f⟩ ∂f))`.
    pub fn analytic_derivative(&self, q: &PorkPoint, dir: &PorkPoint) -> Result<PorkPoint> {
        self.check_len(q)?;
        self.check_len(dir)?;
        let mut x = vec![0.0; self.n];
        if let Some(p) = self.profile(q.s)? {
            let hf = self.inner(&dir.x, &p, &p.values);
            let xf = self.inner(&q.x, &p, &p.values);
            let xdf = self.inner(&q.x, &p, &p.ds);
            for k in 0..p.values.len() {
                x[p.start + k] = hf * p.values[k] + dir.s * (xdf * p.values[k] + xf * p.ds[k]);
            }
        }
        Ok(PorkPoint { s: dir.s, x })
    }

    /// Random ambient point with `s` drawn from `[−2, 0] ∪ [s_min, 2]`.
    pub fn random_point<R: Rng>(&self, rng: &mut R) -> PorkPoint {
        let s = if rng.gen_bool(0.5) {
            rng.gen_range(-2.0..0.0)
        } else {
            rng.gen_range(self.s_min..2.0)
        };
        let x = (0..self.n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        PorkPoint { s, x }
    }

    /// Finite-difference step along a direction with `s`-component `sigma`.
    fn step(&self, s: f64, sigma: f64) -> f64 {
        let base = 1e-3;
        if sigma == 0.0 {
            return base;
        }
        let limit = if s > 0.0 {
            // the profile moves by about 1e-3 window units per step
            1e-3 * s * s * (-1.0 / s).exp()
        } else {
            0.25 * s.abs().max(1e-6)
        };
        (limit / sigma.abs()).min(base)
    }

    fn axpy(&self, q: &PorkPoint, eps: f64, dir: &PorkPoint) -> PorkPoint {
        PorkPoint {
            s: q.s + eps * dir.s,
            x: q.x.iter().zip(&dir.x).map(|(a, b)| a + eps * b).collect(),
        }
    }
}

impl Retraction for Porkbarrel {
    type Point = PorkPoint;

    fn apply(&self, q: &PorkPoint) -> Result<PorkPoint> {
        self.check_len(q)?;
        let mut x = vec![0.0; self.n];
        if let Some(p) = self.profile(q.s)? {
            let c = self.inner(&q.x, &p, &p.values);
            for (k, v) in p.values.iter().enumerate() {
                x[p.start + k] = c * v;
            }
        }
        Ok(PorkPoint { s: q.s, x })
    }

    fn distance(&self, p: &PorkPoint, q: &PorkPoint) -> Result<f64> {
        self.check_len(p)?;
        self.check_len(q)?;
        let ds = p.s - q.s;
        let dx: f64 = p.x.iter().zip(&q.x).map(|(a, b)| (a - b) * (a - b)).sum();
        Ok((ds * ds + self.h * dx).sqrt())
    }

    fn norm(&self, p: &PorkPoint) -> Result<f64> {
        self.check_len(p)?;
        Ok((p.s * p.s + self.h * p.x.iter().map(|v| v * v).sum::<f64>()).sqrt())
    }
}

impl TangentProbing for Porkbarrel {
    /// Five-point central difference of `ρ` along `dir`.
    fn derivative(&self, q: &PorkPoint, dir: &PorkPoint) -> Result<PorkPoint> {
        let eps = self.step(q.s, dir.s);
        let f2 = self.apply(&self.axpy(q, 2.0 * eps, dir))?;
        let f1 = self.apply(&self.axpy(q, eps, dir))?;
        let b1 = self.apply(&self.axpy(q, -eps, dir))?;
        let b2 = self.apply(&self.axpy(q, -2.0 * eps, dir))?;
        let comb = |a2: f64, a1: f64, m1: f64, m2: f64| (-a2 + 8.0 * a1 - 8.0 * m1 + m2) / (12.0 * eps);
        Ok(PorkPoint {
            s: comb(f2.s, f1.s, b1.s, b2.s),
            x: (0..self.n).map(|i| comb(f2.x[i], f1.x[i], b1.x[i], b2.x[i])).collect(),
        })
    }

    /// The `s` direction, `f_s`, and three localized functions (one on the
    /// support of `f_s`, two away from it).
    fn probe_directions(&self, q: &PorkPoint) -> Vec<PorkPoint> {
        let mut out = vec![PorkPoint {
            s: 1.0,
            x: vec![0.0; self.n],
        }];
        let centre_on = if q.s > 0.0 { -(1.0 / q.s).exp() } else { -(1.0f64).exp() };
        if let Ok(f) = self.unit_profile(q.s) {
            if f.iter().any(|v| *v != 0.0) {
                out.push(PorkPoint { s: 0.0, x: f });
            }
        }
        for (centre, width) in [(centre_on + 0.3, 0.7), (5.0, 2.0), (12.0, 3.0)] {
            let mut x: Vec<f64> = (0..self.n)
                .map(|i| {
                    let z = (self.t(i) - centre) / width;
                    (-z * z).exp() * (1.0 + 0.5 * z)
                })
                .collect();
            let n = (self.h * x.iter().map(|v| v * v).sum::<f64>()).sqrt();
            x.iter_mut().for_each(|v| *v /= n);
            out.push(PorkPoint { s: 0.0, x });
        }
        out
    }

    fn coordinates(&self, p: &PorkPoint) -> Vec<f64> {
        let sh = self.h.sqrt();
        std::iter::once(p.s).chain(p.x.iter().map(|v| v * sh)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::super::{retract_membership, tangent_dimension};
    use super::*;

    fn small() -> Porkbarrel {
        Porkbarrel::new(0.25, 10.0, 0.05).unwrap()
    }

    #[test]
    fn negative_s_projects_to_zero() {
        let p = small();
        let q = PorkPoint { s: -1.0, x: vec![0.3; p.len()] };
        let r = p.apply(&q).unwrap();
        assert_eq!(r.s, -1.0);
        assert!(r.x.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn profile_is_fixed_and_orthogonal_is_killed() {
        let p = small();
        let s = 0.4;
        let f = p.unit_profile(s).unwrap();
        let q = PorkPoint { s, x: f.clone() };
        assert!(p.distance(&p.apply(&q).unwrap(), &q).unwrap() < 1e-14);
        // a function supported away from f_s
        let x: Vec<f64> = (0..p.len()).map(|i| if p.t(i) > 5.0 { 1.0 } else { 0.0 }).collect();
        let r = p.apply(&PorkPoint { s, x }).unwrap();
        assert!(r.x.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn hinge_point_is_on_retract() {
        let p = small();
        let q = PorkPoint { s: 0.0, x: vec![0.0; p.len()] };
        assert!(retract_membership(&p, &q, 1e-9).unwrap().on_retract);
    }

    #[test]
    fn off_retract_residual_is_orthogonal_distance() {
        let p = small();
        let s = 0.5;
        let f = p.unit_profile(s).unwrap();
        let x: Vec<f64> = (0..p.len()).map(|i| if p.t(i) > 5.0 { 2.0 } else { 0.0 } + 0.7 * f[i]).collect();
        let expected = (p.spacing() * x.iter().zip(&f).map(|(a, b)| (a - 0.7 * b).powi(2)).sum::<f64>()).sqrt();
        let m = retract_membership(&p, &PorkPoint { s, x }, 1e-9).unwrap();
        assert!(!m.on_retract);
        assert!((m.residual - expected).abs() < 1e-12);
    }

    #[test]
    fn ranks_on_both_sides() {
        let p = small();
        assert_eq!(tangent_dimension(&p, &p.chart_to_retract(0.5, 0.8).unwrap()).unwrap(), 2);
        assert_eq!(tangent_dimension(&p, &p.chart_to_retract(-0.5, 0.0).unwrap()).unwrap(), 1);
    }

    #[test]
    fn finite_differences_match_analytic_derivative() {
        let p = small();
        let q = p.chart_to_retract(0.45, -1.3).unwrap();
        for dir in p.probe_directions(&q) {
            let fd = p.derivative(&q, &dir).unwrap();
            let an = p.analytic_derivative(&q, &dir).unwrap();
            let scale = p.norm(&an).unwrap().max(1.0);
            assert!(p.distance(&fd, &an).unwrap() < 1e-6 * scale);
        }
    }

    #[test]
    fn chart_rejects_points_outside_z() {
        assert!(small().chart_to_retract(-0.2, 1.0).is_err());
        assert!(small().chart_to_retract(0.1, 1.0).is_err());
    }

    #[test]
    fn default_window_edges() {
        let p = porkbarrel_retraction();
        for (s, t, rank) in [(0.1, 0.7, 2), (1.5, -2.0, 2), (-0.1, 0.0, 1), (-2.0, 0.0, 1)] {
            let q = p.chart_to_retract(s, t).unwrap();
            assert_eq!(tangent_dimension(&p, &q).unwrap(), rank, "s = {s}");
            let idem = super::super::tangent_idempotence(&p, &q).unwrap();
            assert!(idem < 1e-6, "s = {s}: {idem:e}");
            let (s2, t2) = p.retract_to_chart(&q).unwrap();
            assert!((s2 - s).abs() + (t2 - t).abs() < 1e-9);
        }
        assert!(matches!(p.chart_to_retract(0.09, 1.0), Err(Error::DomainError(_))));
    }
}

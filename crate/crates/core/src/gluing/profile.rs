//! Gluing profiles `φ: (0,1] → [0,∞)` and annulus moduli.

use std::f64::consts::{E, PI};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Built-in profile kinds, as named in configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileKind {
    Exponential,
    Logarithmic,
}

/// A decreasing diffeomorphism converting a gluing modulus `r` into a neck length `R`.
#[derive(Clone)]
pub enum GluingProfile {
    /// `φ(r) = e^{1/r} − e`
    Exponential,
    /// `φ(r) = −ln(r)/2π`
    Logarithmic,
    Custom(CustomProfile),
}

#[derive(Clone)]
pub struct CustomProfile {
    name: String,
    eval: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl fmt::Debug for GluingProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GluingProfile::Exponential => write!(f, "Exponential"),
            GluingProfile::Logarithmic => write!(f, "Logarithmic"),
            GluingProfile::Custom(c) => write!(f, "Custom({})", c.name),
        }
    }
}

/// Samples used when validating a custom profile.
const CUSTOM_SAMPLES: usize = 512;

impl GluingProfile {
    pub fn from_kind(kind: ProfileKind) -> Self {
        match kind {
            ProfileKind::Exponential => GluingProfile::Exponential,
            ProfileKind::Logarithmic => GluingProfile::Logarithmic,
        }
    }

    /// Wrap a user profile. It is accepted only if sampling on `(0, 1]`
    /// shows a strictly decreasing function with `φ(1) = 0`.
    pub fn custom<F>(name: impl Into<String>, eval: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let at_one = eval(1.0);
        if at_one.abs() > 1e-12 {
            return Err(Error::DomainError(format!("custom profile has φ(1) = {at_one}")));
        }
        let mut prev = f64::INFINITY;
        for k in 1..=CUSTOM_SAMPLES {
            let r = k as f64 / CUSTOM_SAMPLES as f64;
            let v = eval(r);
            if !v.is_finite() || v >= prev {
                return Err(Error::DomainError(format!(
                    "custom profile is not strictly decreasing near r = {r}"
                )));
            }
            prev = v;
        }
        Ok(GluingProfile::Custom(CustomProfile {
            name: name.into(),
            eval: Arc::new(eval),
        }))
    }

    pub fn name(&self) -> &str {
        match self {
            GluingProfile::Exponential => "exponential",
            GluingProfile::Logarithmic => "logarithmic",
            GluingProfile::Custom(c) => &c.name,
        }
    }

    /// Neck length `R = φ(r)` for `r ∈ (0, 1]`.
    pub fn eval(&self, r: f64) -> Result<f64> {
        if !(r > 0.0 && r <= 1.0) {
            return Err(Error::DomainError(format!("gluing modulus r = {r} outside (0, 1]")));
        }
        Ok(match self {
            GluingProfile::Exponential => (1.0 / r).exp() - E,
            GluingProfile::Logarithmic => -r.ln() / (2.0 * PI),
            GluingProfile::Custom(c) => (c.eval)(r),
        })
    }

    /// Solve `φ(r) = neck` by bisection on `(0, 1]`.
    pub fn inverse(&self, neck: f64) -> Result<f64> {
        if neck < 0.0 {
            return Err(Error::DomainError(format!("negative neck length {neck}")));
        }
        let (mut lo, mut hi) = (1e-300_f64, 1.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let v = self.eval(mid)?;
            if v > neck || !v.is_finite() {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-16 * hi {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// Free function form of [`GluingProfile::eval`].
pub fn profile_eval(profile: &GluingProfile, r: f64) -> Result<f64> {
    profile.eval(r)
}

/// Modulus `ln(r2/r1)/2π` of the annulus `{r1 ≤ |z| ≤ r2}`.
pub fn annulus_modulus(r1: f64, r2: f64) -> Result<f64> {
    if !(r1 > 0.0 && r1 <= r2) {
        return Err(Error::DomainError(format!(
            "annulus radii must satisfy 0 < r1 <= r2, got ({r1}, {r2})"
        )));
    }
    Ok((r2 / r1).ln() / (2.0 * PI))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_values() {
        let p = GluingProfile::Exponential;
        assert_eq!(p.eval(1.0).unwrap(), 0.0);
        // e^2 − e, computed independently
        assert!((p.eval(0.5).unwrap() - 4.670_774_270_471_604).abs() < 1e-12);
        assert!(p.eval(0.0).is_err());
        assert!(p.eval(1.5).is_err());
    }

    #[test]
    fn logarithmic_matches_modulus() {
        let p = GluingProfile::Logarithmic;
        assert_eq!(p.eval(1.0).unwrap(), 0.0);
        for r in [0.01, 0.2, 0.5, 0.9] {
            assert!((p.eval(r).unwrap() - annulus_modulus(r, 1.0).unwrap()).abs() < 1e-15);
        }
    }

    #[test]
    fn modulus_cases() {
        assert_eq!(annulus_modulus(0.3, 0.3).unwrap(), 0.0);
        assert!((annulus_modulus((-2.0 * PI).exp(), 1.0).unwrap() - 1.0).abs() < 1e-14);
        assert!(annulus_modulus(0.5, 0.2).is_err());
        assert!(annulus_modulus(0.0, 0.2).is_err());
    }

    #[test]
    fn inverse_round_trip() {
        for p in [GluingProfile::Exponential, GluingProfile::Logarithmic] {
            for r in [0.26, 0.3, 0.45] {
                let neck = p.eval(r).unwrap();
                assert!((p.inverse(neck).unwrap() - r).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn custom_profile_validation() {
        assert!(GluingProfile::custom("bad", |r| r - 1.0).is_err());
        assert!(GluingProfile::custom("offset", |r: f64| 1.0 / r).is_err());
        let p = GluingProfile::custom("quadratic", |r: f64| 1.0 / (r * r) - 1.0).unwrap();
        assert!((p.eval(0.5).unwrap() - 3.0).abs() < 1e-15);
        assert_eq!(p.name(), "quadratic");
    }
}

//! Gluing parameters `a = r·e^{−2πiθ}` and the disk-pair/cylinder coordinate change.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::profile::GluingProfile;
use crate::error::{Error, Result};

/// Default lower bound on `r` for nonzero parameters: the exponential
/// profile gives `R(0.26) ≈ 44`, which fits inside `s_max = 60`.
pub const DEFAULT_R_MIN: f64 = 0.26;

/// A gluing parameter with its derived neck length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GluingParameter {
    pub r: f64,
    pub theta: f64,
    /// `R = φ(r)`; zero (and unused) for `a = 0`.
    #[serde(rename = "R")]
    pub neck: f64,
}

fn canonical_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(1.0);
    if t >= 1.0 {
        0.0
    } else {
        t
    }
}

impl GluingParameter {
    pub fn zero() -> Self {
        GluingParameter {
            r: 0.0,
            theta: 0.0,
            neck: 0.0,
        }
    }

    /// `r = 0` gives the canonical zero parameter (θ forced to 0); otherwise
    /// `r ∈ [r_min, 1/2)` is required.
    pub fn new(r: f64, theta: f64, profile: &GluingProfile, r_min: f64) -> Result<Self> {
        if r == 0.0 {
            return Ok(GluingParameter::zero());
        }
        if !(r >= r_min && r < 0.5) {
            return Err(Error::DomainError(format!(
                "gluing modulus r = {r} outside [{r_min}, 1/2)"
            )));
        }
        Ok(GluingParameter {
            r,
            theta: canonical_angle(theta),
            neck: profile.eval(r)?,
        })
    }

    /// Exponential profile with the default `r_min`.
    pub fn exponential(r: f64, theta: f64) -> Result<Self> {
        GluingParameter::new(r, theta, &GluingProfile::Exponential, DEFAULT_R_MIN)
    }

    pub fn is_zero(&self) -> bool {
        self.r == 0.0
    }

    pub fn complex(&self) -> Complex64 {
        Complex64::from_polar(self.r, -2.0 * PI * self.theta)
    }

    pub fn same_as(&self, other: &GluingParameter) -> bool {
        (self.r - other.r).abs() <= 1e-15
            && (self.theta - other.theta).abs() <= 1e-15
            && (self.neck - other.neck).abs() <= 1e-12 * (1.0 + self.neck)
    }
}

/// A nodal pair `{x, y}` with a decoration `[x̂, θŷ]`.
///
/// Decorations are classes modulo simultaneous rotation, so the class is
/// determined by one angle, stored canonically in `[0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecoratedNodalPair {
    pub x: String,
    pub y: String,
    theta: f64,
}

impl DecoratedNodalPair {
    pub fn new(x: impl Into<String>, y: impl Into<String>, theta: f64) -> Self {
        DecoratedNodalPair {
            x: x.into(),
            y: y.into(),
            theta: canonical_angle(theta),
        }
    }

    /// Rotating `x̂` by `α` and `ŷ` by `β` changes the class angle by `α + β`.
    pub fn rotated(&self, alpha: f64, beta: f64) -> Self {
        DecoratedNodalPair::new(self.x.clone(), self.y.clone(), self.theta + alpha + beta)
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }
}

/// Coordinate changes between the punctured disks at a node and the
/// half-cylinders / glued neck.
///
/// `h_x(z) = e^{−2π(s+it)}` on the `x` side (`s ≥ 0`) and
/// `h_y(z') = e^{2π(s'+it')}` on the `y` side (`s' ≤ 0`).
#[derive(Debug, Clone, Copy)]
pub struct DiskCylinderMaps {
    pub param: GluingParameter,
}

impl DiskCylinderMaps {
    pub fn plus_to_disk(&self, s: f64, t: f64) -> Complex64 {
        Complex64::from_polar((-2.0 * PI * s).exp(), -2.0 * PI * t)
    }

    pub fn disk_to_plus(&self, z: Complex64) -> Result<(f64, f64)> {
        if z.norm() == 0.0 {
            return Err(Error::DomainError("z = 0 is the node itself".into()));
        }
        Ok((-z.norm().ln() / (2.0 * PI), (-z.arg() / (2.0 * PI)).rem_euclid(1.0)))
    }

    pub fn minus_to_disk(&self, s_prime: f64, t_prime: f64) -> Complex64 {
        Complex64::from_polar((2.0 * PI * s_prime).exp(), 2.0 * PI * t_prime)
    }

    pub fn disk_to_minus(&self, z_prime: Complex64) -> Result<(f64, f64)> {
        if z_prime.norm() == 0.0 {
            return Err(Error::DomainError("z' = 0 is the node itself".into()));
        }
        Ok((
            z_prime.norm().ln() / (2.0 * PI),
            (z_prime.arg() / (2.0 * PI)).rem_euclid(1.0),
        ))
    }

    /// `[s, t] = [s − R, t − θ]'` on the glued neck.
    pub fn glued_to_minus(&self, s: f64, t: f64) -> Result<(f64, f64)> {
        if self.param.is_zero() {
            return Err(Error::DomainError("no neck for a = 0".into()));
        }
        Ok((s - self.param.neck, (t - self.param.theta).rem_euclid(1.0)))
    }

    /// The identification constant `e^{−2πiθ} e^{−2πR}` that `h_x(z)·h_y(z')`
    /// must equal for identified points.
    pub fn identification_constant(&self) -> Complex64 {
        Complex64::from_polar((-2.0 * PI * self.param.neck).exp(), -2.0 * PI * self.param.theta)
    }
}

/// Natural gluing parameter `r[x̂, θŷ] ↦ a` with its coordinate maps.
pub fn disk_to_cylinder(
    pair: &DecoratedNodalPair,
    r: f64,
    profile: &GluingProfile,
    r_min: f64,
) -> Result<(GluingParameter, DiskCylinderMaps)> {
    if !(0.0..0.5).contains(&r) {
        return Err(Error::DomainError(format!("r = {r} outside [0, 1/2)")));
    }
    let param = GluingParameter::new(r, pair.theta(), profile, r_min)?;
    Ok((param, DiskCylinderMaps { param }))
}

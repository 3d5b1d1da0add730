//! Level-graded maps `ℝ ⊕ E → ℝ ⊕ E` on the periodic line and their tangents.

use serde::{Deserialize, Serialize};

use super::space::{LinePoint, LineSpace, MAX_LINE_LEVEL};
use crate::error::{Error, Result};

/// Built-in maps. Every map keeps the parameter `t` and acts on `u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ScMap {
    Identity,
    /// `(t, u) ↦ (t, c·u)`.
    Scale { factor: f64 },
    /// `(t, u) ↦ (t, u(· + t))`.
    Shift,
    /// `(t, u) ↦ (t, u(· + c))`.
    FixedShift { by: f64 },
    /// `(t, u) ↦ (t, u²)`.
    Square,
    /// `(t, u) ↦ (t, sin u)`; registered without a derivative.
    SineReference,
    /// `outer ∘ inner`.
    Compose { outer: Box<ScMap>, inner: Box<ScMap> },
}

impl ScMap {
    pub fn compose(outer: ScMap, inner: ScMap) -> ScMap {
        ScMap::Compose {
            outer: Box::new(outer),
            inner: Box::new(inner),
        }
    }

    pub fn name(&self) -> String {
        match self {
            ScMap::Identity => "identity".into(),
            ScMap::Scale { factor } => format!("scale({factor})"),
            ScMap::Shift => "shift".into(),
            ScMap::FixedShift { by } => format!("shift-by({by})"),
            ScMap::Square => "square".into(),
            ScMap::SineReference => "sine-reference".into(),
            ScMap::Compose { outer, inner } => format!("{}∘{}", outer.name(), inner.name()),
        }
    }

    pub fn is_linear(&self) -> bool {
        match self {
            ScMap::Identity | ScMap::Scale { .. } | ScMap::FixedShift { .. } => true,
            ScMap::Shift | ScMap::Square | ScMap::SineReference => false,
            ScMap::Compose { outer, inner } => outer.is_linear() && inner.is_linear(),
        }
    }

    pub fn has_derivative(&self) -> bool {
        match self {
            ScMap::SineReference => false,
            ScMap::Compose { outer, inner } => outer.has_derivative() && inner.has_derivative(),
            _ => true,
        }
    }

    /// Highest level on which the map is tested.
    pub fn max_level(&self) -> usize {
        MAX_LINE_LEVEL
    }

    pub fn eval(&self, space: &LineSpace, x: &LinePoint) -> LinePoint {
        let u = match self {
            ScMap::Identity => x.u.clone(),
            ScMap::Scale { factor } => x.u.iter().map(|v| factor * v).collect(),
            ScMap::Shift => space.shift(&x.u, x.t),
            ScMap::FixedShift { by } => space.shift(&x.u, *by),
            ScMap::Square => x.u.iter().map(|v| v * v).collect(),
            ScMap::SineReference => x.u.iter().map(|v| v.sin()).collect(),
            ScMap::Compose { outer, inner } => return outer.eval(space, &inner.eval(space, x)),
        };
        LinePoint { t: x.t, u }
    }

    /// Analytic `Df(x)k`, if registered.
    pub fn derivative(&self, space: &LineSpace, x: &LinePoint, k: &LinePoint) -> Option<LinePoint> {
        let u = match self {
            ScMap::Identity => k.u.clone(),
            ScMap::Scale { factor } => k.u.iter().map(|v| factor * v).collect(),
            // τ·u'(· + t) + h(· + t)
            ScMap::Shift => {
                let du = space.shift(&space.derivative(&x.u), x.t);
                let hs = space.shift(&k.u, x.t);
                du.iter().zip(&hs).map(|(d, h)| k.t * d + h).collect()
            }
            ScMap::FixedShift { by } => space.shift(&k.u, *by),
            ScMap::Square => x.u.iter().zip(&k.u).map(|(u, h)| 2.0 * u * h).collect(),
            ScMap::SineReference => return None,
            ScMap::Compose { outer, inner } => {
                let y = inner.eval(space, x);
                let dk = inner.derivative(space, x, k)?;
                return outer.derivative(space, &y, &dk);
            }
        };
        Some(LinePoint { t: k.t, u })
    }

    /// Five-point central difference `(−f(x+2εk) + 8f(x+εk) − 8f(x−εk) + f(x−2εk)) / 12ε`
    /// with `ε = step / ‖k‖_0`.
    pub fn finite_difference(&self, space: &LineSpace, x: &LinePoint, k: &LinePoint, step: f64) -> Result<LinePoint> {
        let kn = space.point_norm(k, 0)?;
        if kn == 0.0 {
            return Ok(k.scaled(0.0));
        }
        let eps = step / kn;
        let f2 = self.eval(space, &x.axpy(2.0 * eps, k));
        let f1 = self.eval(space, &x.axpy(eps, k));
        let b1 = self.eval(space, &x.axpy(-eps, k));
        let b2 = self.eval(space, &x.axpy(-2.0 * eps, k));
        let c = |a2: f64, a1: f64, m1: f64, m2: f64| (-a2 + 8.0 * a1 - 8.0 * m1 + m2) / (12.0 * eps);
        Ok(LinePoint {
            t: c(f2.t, f1.t, b1.t, b2.t),
            u: (0..x.u.len()).map(|i| c(f2.u[i], f1.u[i], b1.u[i], b2.u[i])).collect(),
        })
    }
}

/// `Tf(x, h) = (f(x), Df(x)h)` with `x` at level `m + 1` and `h` at level `m`.
#[derive(Debug, Clone)]
pub struct TangentMap {
    map: ScMap,
}

pub fn tangent_map(f: &ScMap) -> Result<TangentMap> {
    if !f.has_derivative() {
        return Err(Error::DerivativeMissing(f.name()));
    }
    Ok(TangentMap { map: f.clone() })
}

impl TangentMap {
    pub fn base(&self) -> &ScMap {
        &self.map
    }

    pub fn apply(
        &self,
        space: &LineSpace,
        x: &LinePoint,
        x_level: usize,
        h: &LinePoint,
        h_level: usize,
    ) -> Result<(LinePoint, LinePoint)> {
        if x_level > self.map.max_level() {
            return Err(Error::LevelOutOfRange {
                level: x_level,
                max: self.map.max_level(),
            });
        }
        if x_level != h_level + 1 {
            return Err(Error::DomainError(format!(
                "tangent grading needs x at level m+1 and h at level m, got {x_level} and {h_level}"
            )));
        }
        let dh = self
            .map
            .derivative(space, x, h)
            .ok_or_else(|| Error::DerivativeMissing(self.map.name()))?;
        Ok((self.map.eval(space, x), dh))
    }
}

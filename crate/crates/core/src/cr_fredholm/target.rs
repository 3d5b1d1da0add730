//! Almost complex structures on a chart `ℝ^{2n}`.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest accepted `‖J(p)² + I‖` on sampled points.
pub const SQUARE_TOLERANCE: f64 = 1e-10;

pub type StructureFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;
/// `(p, h) ↦ DJ(p)h`.
pub type StructureDerivativeFn = Arc<dyn Fn(&[f64], &[f64]) -> DMatrix<f64> + Send + Sync>;

#[derive(Clone)]
pub enum AlmostComplexTarget {
    /// Constant block-diagonal `[[0, −1], [1, 0]]` on `ℝ^{2n}`.
    Standard { complex_dim: usize },
    /// On `ℝ²`: `J(p) = [[φ, −(1 + φ²)], [1, −φ]]` with `φ = κ·p₀`.
    Twisted { kappa: f64 },
    Custom {
        real_dim: usize,
        structure: StructureFn,
        derivative: Option<StructureDerivativeFn>,
        chart_radius: Option<f64>,
    },
}

impl std::fmt::Debug for AlmostComplexTarget {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AlmostComplexTarget::Standard { complex_dim } => write!(f, "Standard(n = {complex_dim})"),
            AlmostComplexTarget::Twisted { kappa } => write!(f, "Twisted(kappa = {kappa})"),
            AlmostComplexTarget::Custom {
                real_dim, chart_radius, ..
            } => write!(f, "Custom(N = {real_dim}, radius = {chart_radius:?})"),
        }
    }
}

/// Serializable description of the built-in targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TargetSpec {
    Standard { complex_dim: usize },
    Twisted { kappa: f64 },
}

impl Default for TargetSpec {
    fn default() -> Self {
        TargetSpec::Standard { complex_dim: 1 }
    }
}

impl TargetSpec {
    pub fn build(&self) -> Result<AlmostComplexTarget> {
        match *self {
            TargetSpec::Standard { complex_dim } => AlmostComplexTarget::standard(complex_dim),
            TargetSpec::Twisted { kappa } => AlmostComplexTarget::twisted(kappa),
        }
    }
}

impl AlmostComplexTarget {
    pub fn standard(complex_dim: usize) -> Result<Self> {
        if complex_dim == 0 {
            return Err(Error::DomainError("target must have positive dimension".into()));
        }
        Ok(AlmostComplexTarget::Standard { complex_dim })
    }

    pub fn twisted(kappa: f64) -> Result<Self> {
        if !kappa.is_finite() {
            return Err(Error::DomainError(format!("twist {kappa} is not finite")));
        }
        Ok(AlmostComplexTarget::Twisted { kappa })
    }

    /// A user-supplied structure, checked for `J² = −I` at random points of
    /// the chart (the unit ball when no radius is given).
    pub fn custom(
        real_dim: usize,
        structure: StructureFn,
        derivative: Option<StructureDerivativeFn>,
        chart_radius: Option<f64>,
    ) -> Result<Self> {
        if real_dim == 0 || !real_dim.is_multiple_of(2) {
            return Err(Error::DomainError(format!("target dimension {real_dim} must be even and positive")));
        }
        let target = AlmostComplexTarget::Custom {
            real_dim,
            structure,
            derivative,
            chart_radius,
        };
        let defect = target.square_defect(32, 0x5eed)?;
        if defect > SQUARE_TOLERANCE {
            return Err(Error::DomainError(format!("J² + I has norm {defect:.3e} on sampled points")));
        }
        Ok(target)
    }

    pub fn real_dim(&self) -> usize {
        match self {
            AlmostComplexTarget::Standard { complex_dim } => 2 * complex_dim,
            AlmostComplexTarget::Twisted { .. } => 2,
            AlmostComplexTarget::Custom { real_dim, .. } => *real_dim,
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            AlmostComplexTarget::Standard { .. } => true,
            AlmostComplexTarget::Twisted { kappa } => *kappa == 0.0,
            AlmostComplexTarget::Custom { .. } => false,
        }
    }

    pub fn has_derivative(&self) -> bool {
        !matches!(self, AlmostComplexTarget::Custom { derivative: None, .. })
    }

    pub fn chart_radius(&self) -> Option<f64> {
        match self {
            AlmostComplexTarget::Custom { chart_radius, .. } => *chart_radius,
            _ => None,
        }
    }

    /// `J(p)` as a matrix.
    pub fn structure_at(&self, p: &[f64]) -> DMatrix<f64> {
        match self {
            AlmostComplexTarget::Standard { complex_dim } => {
                let mut m = DMatrix::zeros(2 * complex_dim, 2 * complex_dim);
                for c in 0..*complex_dim {
                    m[(2 * c, 2 * c + 1)] = -1.0;
                    m[(2 * c + 1, 2 * c)] = 1.0;
                }
                m
            }
            AlmostComplexTarget::Twisted { kappa } => {
                let phi = kappa * p[0];
                DMatrix::from_row_slice(2, 2, &[phi, -(1.0 + phi * phi), 1.0, -phi])
            }
            AlmostComplexTarget::Custom { structure, .. } => structure(p),
        }
    }

    /// `out = J(p) v`.
    pub(crate) fn apply(&self, p: &[f64], v: &[f64], out: &mut [f64]) {
        match self {
            AlmostComplexTarget::Standard { complex_dim } => {
                for c in 0..*complex_dim {
                    out[2 * c] = -v[2 * c + 1];
                    out[2 * c + 1] = v[2 * c];
                }
            }
            AlmostComplexTarget::Twisted { kappa } => {
                let phi = kappa * p[0];
                out[0] = phi * v[0] - (1.0 + phi * phi) * v[1];
                out[1] = v[0] - phi * v[1];
            }
            AlmostComplexTarget::Custom { structure, .. } => {
                let m = structure(p);
                for (i, o) in out.iter_mut().enumerate() {
                    *o = (0..v.len()).map(|k| m[(i, k)] * v[k]).sum();
                }
            }
        }
    }

    /// `out = (DJ(p)h) v`; `false` when no derivative is registered.
    pub(crate) fn apply_derivative(&self, p: &[f64], h: &[f64], v: &[f64], out: &mut [f64]) -> bool {
        match self {
            AlmostComplexTarget::Standard { .. } => {
                out.iter_mut().for_each(|o| *o = 0.0);
                true
            }
            AlmostComplexTarget::Twisted { kappa } => {
                let phi = kappa * p[0];
                let dphi = kappa * h[0];
                out[0] = dphi * v[0] - 2.0 * phi * dphi * v[1];
                out[1] = -dphi * v[1];
                true
            }
            AlmostComplexTarget::Custom { derivative, .. } => match derivative {
                Some(d) => {
                    let m = d(p, h);
                    for (i, o) in out.iter_mut().enumerate() {
                        *o = (0..v.len()).map(|k| m[(i, k)] * v[k]).sum();
                    }
                    true
                }
                None => false,
            },
        }
    }

    /// `max ‖J(p)² + I‖` over `samples` random points of the chart.
    pub fn square_defect(&self, samples: usize, seed: u64) -> Result<f64> {
        let n = self.real_dim();
        let radius = self.chart_radius().unwrap_or(1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..samples {
            let p: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0) * radius / (n as f64).sqrt()).collect();
            let j = self.structure_at(&p);
            if j.shape() != (n, n) {
                return Err(Error::DomainError(format!("J(p) has shape {:?}, expected {n}x{n}", j.shape())));
            }
            worst = worst.max((&j * &j + DMatrix::<f64>::identity(n, n)).norm());
        }
        Ok(worst)
    }

    pub fn name(&self) -> String {
        match self {
            AlmostComplexTarget::Standard { complex_dim } => format!("standard(n={complex_dim})"),
            AlmostComplexTarget::Twisted { kappa } => format!("twisted(kappa={kappa})"),
            AlmostComplexTarget::Custom { .. } => "custom".into(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_structures_square_to_minus_one() {
        for t in [
            AlmostComplexTarget::standard(2).unwrap(),
            AlmostComplexTarget::twisted(0.7).unwrap(),
        ] {
            assert!(t.square_defect(50, 3).unwrap() < 1e-12, "{t:?}");
        }
    }

    #[test]
    fn apply_matches_matrix() {
        let t = AlmostComplexTarget::twisted(0.4).unwrap();
        let p = [0.3, -0.2];
        let v = [1.5, 0.25];
        let mut out = [0.0; 2];
        t.apply(&p, &v, &mut out);
        let m = t.structure_at(&p);
        for i in 0..2 {
            assert!((out[i] - (m[(i, 0)] * v[0] + m[(i, 1)] * v[1])).abs() < 1e-15);
        }
    }

    #[test]
    fn twisted_derivative_matches_difference() {
        let t = AlmostComplexTarget::twisted(0.9).unwrap();
        let p = [0.2, 0.1];
        let h = [0.7, -0.4];
        let v = [0.3, 1.1];
        let mut d = [0.0; 2];
        assert!(t.apply_derivative(&p, &h, &v, &mut d));
        let eps = 1e-6;
        let (mut a, mut b) = ([0.0; 2], [0.0; 2]);
        t.apply(&[p[0] + eps * h[0], p[1] + eps * h[1]], &v, &mut a);
        t.apply(&[p[0] - eps * h[0], p[1] - eps * h[1]], &v, &mut b);
        for i in 0..2 {
            assert!(((a[i] - b[i]) / (2.0 * eps) - d[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn custom_rejects_non_complex_structure() {
        let bad: StructureFn = Arc::new(|_| DMatrix::identity(2, 2));
        assert!(AlmostComplexTarget::custom(2, bad, None, None).is_err());
        let good: StructureFn = Arc::new(|_| DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]));
        let t = AlmostComplexTarget::custom(2, good, None, Some(2.0)).unwrap();
        assert!(!t.has_derivative());
    }
}

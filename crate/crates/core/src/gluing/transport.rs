//! Transport of glued maps along families of neck reparametrizations.

use serde::{Deserialize, Serialize};

use super::cutoff::{bump, CutoffBeta};
use super::field::{DomainKind, FieldGrid, GluedField};
use super::ops::{glue, unglue};
use super::param::GluingParameter;
use crate::error::{Error, Result};
use crate::numerics::{interp_stencil, Spectral};
use crate::scale_space::{distance_at_level, ScaleFunction};

/// Collar data of a diffeomorphism `φ_a: Z_a → Z_{b(a)}`,
/// `φ_a([s, t]) = [s·R_b/R_a + η(s), t + ψ(s)]`.
///
/// `η = shift·(ρ̂(s − 1.5) − ρ̂(s − R_a + 1.5))` with the unit-height bump `ρ̂`
/// displaces the two collars and vanishes near both ends and in the middle;
/// `ψ = β(s − R_a/2)·rotation_left + (1 − β(s − R_a/2))·rotation_right` blends
/// the end rotations through the neck.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollarDiffeo {
    pub shift: f64,
    pub rotation_left: f64,
    pub rotation_right: f64,
}

/// Offset of the collar bumps from the cylinder ends.
const COLLAR_CENTRE: f64 = 1.5;
/// Bound on `max |ρ̂'|`.
const BUMP_SLOPE: f64 = 1.6;

fn unit_bump(x: f64) -> f64 {
    bump(x) * std::f64::consts::E
}

impl CollarDiffeo {
    pub fn identity() -> Self {
        CollarDiffeo {
            shift: 0.0,
            rotation_left: 0.0,
            rotation_right: 0.0,
        }
    }

    pub fn rotation(psi: f64) -> Self {
        CollarDiffeo {
            shift: 0.0,
            rotation_left: psi,
            rotation_right: psi,
        }
    }

    /// Source abscissa and twist for target abscissa `s` on `Z_a`.
    pub fn map(&self, s: f64, neck_a: f64, neck_b: f64, beta: &CutoffBeta) -> (f64, f64) {
        let eta = self.shift * (unit_bump(s - COLLAR_CENTRE) - unit_bump(s - neck_a + COLLAR_CENTRE));
        let b = beta.eval(s - 0.5 * neck_a);
        let src = (s * neck_b / neck_a + eta).clamp(0.0, neck_b);
        (src, b * self.rotation_left + (1.0 - b) * self.rotation_right)
    }

    fn validate(&self, neck_a: f64, neck_b: f64) -> Result<()> {
        if 2.0 * BUMP_SLOPE * self.shift.abs() >= 0.5 * neck_b / neck_a {
            return Err(Error::DomainError(format!(
                "collar shift {} too large for a diffeomorphism",
                self.shift
            )));
        }
        Ok(())
    }
}

/// `u ∘ φ_a` for a field `u` on `Z_{b(a)}`; the result lives on `Z_a`.
pub fn reparametrization_transport<B, F>(
    a: &GluingParameter,
    b: B,
    family: F,
    u: &GluedField,
    beta: &CutoffBeta,
) -> Result<GluedField>
where
    B: Fn(&GluingParameter) -> GluingParameter,
    F: Fn(&GluingParameter) -> CollarDiffeo,
{
    if a.is_zero() {
        return Err(Error::DomainError("transport needs a nonzero gluing parameter".into()));
    }
    let target = b(a);
    if u.kind() != DomainKind::Glued {
        return Err(Error::IncompatibleNeck("transport acts on fields over Z_a".into()));
    }
    let ug = *u.grid().expect("Z_a grid");
    if (u.param().neck - target.neck).abs() > 1e-12 * (1.0 + target.neck)
        || (ug.s_end() - target.neck).abs() > 1e-9 * (1.0 + target.neck)
    {
        return Err(Error::IncompatibleNeck(format!(
            "b(a) has neck {} but the field is sampled on [0, {}]",
            target.neck,
            ug.s_end()
        )));
    }
    let phi = family(a);
    phi.validate(a.neck, target.neck)?;
    let out_grid = if (a.neck - target.neck).abs() <= 1e-15 * a.neck {
        ug
    } else {
        FieldGrid::neck(a.neck, ug.h_s, ug.n_t)
    };
    let n_t = ug.n_t;
    let spectral = Spectral::new(n_t);
    let dim = u.dim();
    let src = u.varying();
    let mut varying = vec![0.0; dim * out_grid.len()];
    for i in 0..out_grid.n_s {
        let (s_src, psi) = phi.map(out_grid.s(i), a.neck, target.neck, beta);
        let st = interp_stencil(s_src, 0.0, ug.h_s, ug.n_s);
        for comp in 0..dim {
            let out = &mut varying[(comp * out_grid.n_s + i) * n_t..(comp * out_grid.n_s + i + 1) * n_t];
            for (k, w) in st.weights.iter().enumerate() {
                let base = (comp * ug.n_s + st.start + k) * n_t;
                for j in 0..n_t {
                    out[j] += w * src[base + j];
                }
            }
            // (u ∘ φ)(s, t) = u(σ(s), t + ψ)
            spectral.rotate(out, -psi);
        }
    }
    let field = GluedField::on_grid(
        DomainKind::Glued,
        *a,
        out_grid,
        u.constant().to_vec(),
        super::field::OffsetProfile::Flat,
        varying,
        *beta,
    );
    Ok(match u.origin() {
        Some((g, w)) => field.with_origin(*g, w.clone()),
        None => field,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportSweep {
    pub samples: usize,
    /// Level-0 distance between consecutive path points, mapped back to `E`.
    pub steps: Vec<f64>,
    /// `max` of `steps`.
    pub modulus: f64,
}

/// Sweep `a` along `path`, transport `⊕_{b(a)} u` to `Z_a`, map back to `E`
/// with zero anti-glued data and record consecutive level-0 distances.
pub fn transport_continuity_sweep<B, F>(
    u: &ScaleFunction,
    path: &[GluingParameter],
    b: B,
    family: F,
    beta: &CutoffBeta,
) -> Result<TransportSweep>
where
    B: Fn(&GluingParameter) -> GluingParameter,
    F: Fn(&GluingParameter) -> CollarDiffeo,
{
    let mut back = Vec::with_capacity(path.len());
    for a in path {
        let w = glue(&b(a), u, beta)?;
        let moved = reparametrization_transport(a, &b, &family, &w, beta)?;
        let zero = GluedField::zero_anti(*a, u.grid(), u.dim());
        back.push(unglue(a, &moved, &zero, beta)?);
    }
    let steps: Vec<f64> = back
        .windows(2)
        .map(|p| distance_at_level(&p[1], &p[0], 0))
        .collect::<Result<_>>()?;
    Ok(TransportSweep {
        samples: path.len(),
        modulus: steps.iter().cloned().fold(0.0, f64::max),
        steps,
    })
}

//! Gluing `⊕_a`, anti-gluing `⊖_a`, total gluing `⊡_a`, its inverse, and the
//! projections `π_a`.
//!
//! With `u± = c + v±` the formulas become
//! `⊕_a u = c + β v⁺ + (1 − β) v⁻'` and
//! `⊖_a u = (β − 1) v⁺ + β v⁻' − av_v·(2β − 1)`,
//! where `v⁻'(s, t) = v⁻(s − R, t − θ)`, `β = β(s − R/2)` and `av_v` is the
//! average of the decaying parts. The fields store those pieces separately.

use super::cutoff::CutoffBeta;
use super::field::{DomainKind, FieldGrid, GluedField, OffsetProfile};
use super::param::GluingParameter;
use crate::error::{Error, Result};
use crate::numerics::{interp_stencil, Spectral};
use crate::scale_space::{CylinderGrid, Half, ScaleFunction};

fn check_neck(a: &GluingParameter, grid: &CylinderGrid) -> Result<()> {
    if a.neck > grid.s_max {
        return Err(Error::NeckTooLong {
            neck: a.neck,
            s_max: grid.s_max,
        });
    }
    Ok(())
}

/// `v⁻(s', t − θ)` on the minus samples.
fn rotated_minus(u: &ScaleFunction, theta: f64) -> Vec<f64> {
    let mut data = u.decaying(Half::Minus).to_vec();
    if theta != 0.0 {
        let spectral = Spectral::new(u.grid().n_t);
        for row in data.chunks_mut(u.grid().n_t) {
            spectral.rotate(row, theta);
        }
    }
    data
}

/// Interpolate one component's rows of `data` (grid `x0 + i·h`, `n` rows) at `x`.
fn interp_row(data: &[f64], comp: usize, n: usize, n_t: usize, x0: f64, h: f64, x: f64, out: &mut [f64]) {
    let st = interp_stencil(x, x0, h, n);
    out.iter_mut().for_each(|v| *v = 0.0);
    for (k, w) in st.weights.iter().enumerate() {
        let base = (comp * n + st.start + k) * n_t;
        for j in 0..n_t {
            out[j] += w * data[base + j];
        }
    }
}

/// `av_a` of the decaying parts: `½ ∫ (v⁺(R/2, t) + v⁻(−R/2, t)) dt`.
fn decaying_average(u: &ScaleFunction, neck: f64) -> Vec<f64> {
    let g = u.grid();
    let mut row = vec![0.0; g.n_t];
    (0..u.dim())
        .map(|comp| {
            interp_row(u.decaying(Half::Plus), comp, g.n_s, g.n_t, 0.0, g.h_s(), 0.5 * neck, &mut row);
            let p = Spectral::mean(&row);
            interp_row(u.decaying(Half::Minus), comp, g.n_s, g.n_t, -g.s_max, g.h_s(), -0.5 * neck, &mut row);
            0.5 * (p + Spectral::mean(&row))
        })
        .collect()
}

/// `av_a(u⁺, u⁻) = ½ ∫_{S¹} (u⁺(R/2, t) + u⁻(−R/2, t)) dt`.
pub fn average(a: &GluingParameter, u: &ScaleFunction) -> Result<Vec<f64>> {
    if a.is_zero() {
        return Err(Error::DomainError("av_a is undefined for a = 0".into()));
    }
    check_neck(a, u.grid())?;
    Ok(decaying_average(u, a.neck)
        .iter()
        .zip(u.asymptotic_constant())
        .map(|(v, c)| v + c)
        .collect())
}

fn glue_with(a: &GluingParameter, u: &ScaleFunction, beta: &CutoffBeta, minus_rot: &[f64]) -> GluedField {
    let g = u.grid();
    let (n_s, n_t, h) = (g.n_s, g.n_t, g.h_s());
    let fg = FieldGrid::neck(a.neck, h, n_t);
    let dim = u.dim();
    let mut varying = vec![0.0; dim * fg.len()];
    let mut prow = vec![0.0; n_t];
    let mut mrow = vec![0.0; n_t];
    for i in 0..fg.n_s {
        let s = fg.s(i);
        let b = beta.eval(s - 0.5 * a.neck);
        for comp in 0..dim {
            let out = &mut varying[(comp * fg.n_s + i) * n_t..(comp * fg.n_s + i + 1) * n_t];
            if b > 0.0 {
                interp_row(u.decaying(Half::Plus), comp, n_s, n_t, 0.0, h, s, &mut prow);
            } else {
                prow.iter_mut().for_each(|v| *v = 0.0);
            }
            if b < 1.0 {
                interp_row(minus_rot, comp, n_s, n_t, -g.s_max, h, s - a.neck, &mut mrow);
            } else {
                mrow.iter_mut().for_each(|v| *v = 0.0);
            }
            for j in 0..n_t {
                out[j] = b * prow[j] + (1.0 - b) * mrow[j];
            }
        }
    }
    GluedField::on_grid(
        DomainKind::Glued,
        *a,
        fg,
        u.asymptotic_constant().to_vec(),
        OffsetProfile::Flat,
        varying,
        *beta,
    )
    .with_origin(*g, u.weights().clone())
}

fn antiglue_with(a: &GluingParameter, u: &ScaleFunction, beta: &CutoffBeta, minus_rot: &[f64]) -> GluedField {
    let g = u.grid();
    let (n_s, n_t, h) = (g.n_s, g.n_t, g.h_s());
    let fg = FieldGrid::anti(a.neck, g);
    let dim = u.dim();
    let av = decaying_average(u, a.neck);
    let mut varying = vec![0.0; dim * fg.len()];
    let mut prow = vec![0.0; n_t];
    for i in 0..fg.n_s {
        let s = fg.s(i);
        let b = beta.eval(s - 0.5 * a.neck);
        for comp in 0..dim {
            let out = &mut varying[(comp * fg.n_s + i) * n_t..(comp * fg.n_s + i + 1) * n_t];
            if b < 1.0 {
                interp_row(u.decaying(Half::Plus), comp, n_s, n_t, 0.0, h, s, &mut prow);
            } else {
                prow.iter_mut().for_each(|v| *v = 0.0);
            }
            if b > 0.0 {
                // C_a sample i sits exactly on minus sample i
                let m = &minus_rot[(comp * n_s + i) * n_t..(comp * n_s + i + 1) * n_t];
                for j in 0..n_t {
                    out[j] = (b - 1.0) * prow[j] + b * m[j];
                }
            } else {
                for j in 0..n_t {
                    out[j] = -prow[j];
                }
            }
        }
    }
    GluedField::on_grid(
        DomainKind::AntiGlued,
        *a,
        fg,
        av.iter().map(|x| -x).collect(),
        OffsetProfile::Signed,
        varying,
        *beta,
    )
    .with_origin(*g, u.weights().clone())
}

/// `⊕_a(u⁺, u⁻)`; the pair itself (`Z_0`) for `a = 0`.
pub fn glue(a: &GluingParameter, u: &ScaleFunction, beta: &CutoffBeta) -> Result<GluedField> {
    if a.is_zero() {
        return Ok(GluedField::pair(u.clone()));
    }
    check_neck(a, u.grid())?;
    Ok(glue_with(a, u, beta, &rotated_minus(u, a.theta)))
}

/// `⊖_a(u⁺, u⁻)`; the empty field for `a = 0`.
pub fn antiglue(a: &GluingParameter, u: &ScaleFunction, beta: &CutoffBeta) -> Result<GluedField> {
    if a.is_zero() {
        return Ok(GluedField::empty(u.dim()));
    }
    check_neck(a, u.grid())?;
    Ok(antiglue_with(a, u, beta, &rotated_minus(u, a.theta)))
}

/// `⊡_a = (⊕_a, ⊖_a)`, linear in `u` for fixed `a`.
pub fn total_glue(a: &GluingParameter, u: &ScaleFunction, beta: &CutoffBeta) -> Result<(GluedField, GluedField)> {
    if a.is_zero() {
        return Ok((GluedField::pair(u.clone()), GluedField::empty(u.dim())));
    }
    check_neck(a, u.grid())?;
    let rot = rotated_minus(u, a.theta);
    Ok((glue_with(a, u, beta, &rot), antiglue_with(a, u, beta, &rot)))
}

/// Inverse of [`total_glue`]: recovers `(u⁺, u⁻)` from a glued and an
/// anti-glued field by solving the pointwise 2×2 systems
/// `g = β x + (1 − β) y`, `k = (β − 1) x + β y` (determinant `β² + (1 − β)² ≥ ½`).
pub fn unglue(a: &GluingParameter, glued: &GluedField, anti: &GluedField, beta: &CutoffBeta) -> Result<ScaleFunction> {
    if a.is_zero() {
        return match (glued.kind(), glued.as_pair()) {
            (DomainKind::Pair, Some(u)) => Ok(u.clone()),
            _ => Err(Error::GridMismatch("a = 0 requires a Z_0 pair field".into())),
        };
    }
    if glued.kind() != DomainKind::Glued || anti.kind() != DomainKind::AntiGlued {
        return Err(Error::GridMismatch(format!(
            "expected (glued, anti_glued) fields, got ({:?}, {:?})",
            glued.kind(),
            anti.kind()
        )));
    }
    if !glued.param().same_as(a) || !anti.param().same_as(a) {
        return Err(Error::GridMismatch("fields were built for a different gluing parameter".into()));
    }
    let (cyl, weights) = glued
        .origin()
        .or(anti.origin())
        .cloned()
        .ok_or_else(|| Error::GridMismatch("glued field does not record its source grid".into()))?;
    let zg = *glued.grid().expect("Z_a grid");
    let cg = *anti.grid().expect("C_a grid");
    if cg != FieldGrid::anti(a.neck, &cyl) || zg.n_t != cyl.n_t {
        return Err(Error::GridMismatch("anti-glued grid does not match the source grid".into()));
    }
    if glued.dim() != anti.dim() {
        return Err(Error::GridMismatch("glued and anti-glued fields have different N".into()));
    }
    if anti.offset() != OffsetProfile::Signed {
        return Err(Error::GridMismatch("anti-glued field must carry a signed offset".into()));
    }
    let dim = glued.dim();
    let (n_s, n_t) = (cyl.n_s, cyl.n_t);
    let gt = glued.varying();
    let kt = anti.varying();
    let mid = (zg.n_s - 1) / 2;

    // av = c_g + mean g̃(R/2); the asymptotic constant is av + γ
    let shift: Vec<f64> = (0..dim)
        .map(|comp| {
            let base = (comp * zg.n_s + mid) * n_t;
            Spectral::mean(&gt[base..base + n_t]) + anti.constant()[comp]
        })
        .collect();
    let c: Vec<f64> = (0..dim).map(|comp| glued.constant()[comp] + shift[comp]).collect();

    let mut plus = vec![0.0; dim * n_s * n_t];
    let mut minus = vec![0.0; dim * n_s * n_t];
    let mut grow = vec![0.0; n_t];
    let mut krow = vec![0.0; n_t];
    for comp in 0..dim {
        for i in 0..n_s {
            let s = cyl.s_plus(i);
            let out = &mut plus[(comp * n_s + i) * n_t..(comp * n_s + i + 1) * n_t];
            interp_row(kt, comp, cg.n_s, n_t, cg.s_start, cg.h_s, s, &mut krow);
            if s > a.neck {
                for j in 0..n_t {
                    out[j] = -krow[j];
                }
                continue;
            }
            let b = beta.eval(s - 0.5 * a.neck);
            let det = b * b + (1.0 - b) * (1.0 - b);
            interp_row(gt, comp, zg.n_s, n_t, 0.0, zg.h_s, s, &mut grow);
            for j in 0..n_t {
                out[j] = (b * (grow[j] - shift[comp]) - (1.0 - b) * krow[j]) / det;
            }
        }
        let spectral = Spectral::new(n_t);
        for i in 0..n_s {
            let s = cg.s(i);
            let kbase = (comp * cg.n_s + i) * n_t;
            let out = &mut minus[(comp * n_s + i) * n_t..(comp * n_s + i + 1) * n_t];
            if s < 0.0 {
                out.copy_from_slice(&kt[kbase..kbase + n_t]);
            } else {
                let b = beta.eval(s - 0.5 * a.neck);
                let det = b * b + (1.0 - b) * (1.0 - b);
                interp_row(gt, comp, zg.n_s, n_t, 0.0, zg.h_s, s, &mut grow);
                for j in 0..n_t {
                    out[j] = ((1.0 - b) * (grow[j] - shift[comp]) + b * kt[kbase + j]) / det;
                }
            }
            spectral.rotate(out, -a.theta);
        }
    }
    Ok(ScaleFunction::from_raw(cyl, weights, c, plus, minus))
}

/// `π_a u = unglue(⊕_a u, 0)`: projection onto `ker ⊖_a` along `ker ⊕_a`.
pub fn pi_projection(a: &GluingParameter, u: &ScaleFunction, beta: &CutoffBeta) -> Result<ScaleFunction> {
    if a.is_zero() {
        return Ok(u.clone());
    }
    let glued = glue(a, u, beta)?;
    let zero = GluedField::zero_anti(*a, u.grid(), u.dim());
    unglue(a, &glued, &zero, beta)
}

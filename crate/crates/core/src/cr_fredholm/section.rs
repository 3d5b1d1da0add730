//! The Cauchy–Riemann section `½[∂_s w + J(w)∂_t w]` on glued cylinders and
//! its linearization.

use serde::{Deserialize, Serialize};

use super::target::AlmostComplexTarget;
use crate::error::{Error, Result};
use crate::gluing::{glue, CutoffBeta, DomainKind, FieldGrid, GluedField, GluingParameter, OffsetProfile};
use crate::numerics::{trapezoid_weights, DiffOperator, Spectral};
use crate::scale_space::{CylinderGrid, ScaleFunction, WeightSequence};

/// Accuracy order of the `s` differences in the section.
pub const CR_S_ORDER: usize = 10;
/// Accuracy order of the `s` differences in level norms.
const NORM_S_ORDER: usize = 4;
const MIN_T_POINTS: usize = 4;

/// Derivative machinery for one grid.
#[derive(Debug, Clone)]
pub(crate) struct CrGrid {
    pub grid: FieldGrid,
    pub dim: usize,
    ds: DiffOperator,
    spectral: Spectral,
}

impl CrGrid {
    pub fn new(grid: FieldGrid, dim: usize) -> Result<Self> {
        if grid.n_s < CR_S_ORDER + 1 || grid.n_t < MIN_T_POINTS {
            return Err(Error::MarginExceeded(format!(
                "grid {}x{} too small for the order-{CR_S_ORDER} stencil",
                grid.n_s, grid.n_t
            )));
        }
        Ok(CrGrid {
            grid,
            dim,
            ds: DiffOperator::new(grid.n_s, grid.h_s, CR_S_ORDER),
            spectral: Spectral::new(grid.n_t),
        })
    }

    pub fn len(&self) -> usize {
        self.dim * self.grid.len()
    }

    #[inline]
    pub fn index(&self, comp: usize, i: usize, j: usize) -> usize {
        (comp * self.grid.n_s + i) * self.grid.n_t + j
    }

    pub fn spectral(&self) -> &Spectral {
        &self.spectral
    }

    pub fn d_s(&self, values: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; values.len()];
        let n_t = self.grid.n_t;
        for comp in 0..self.dim {
            for j in 0..n_t {
                let off = comp * self.grid.n_s * n_t + j;
                self.ds.apply_strided(values, &mut out, off, n_t);
            }
        }
        out
    }

    pub fn d_t(&self, values: &[f64]) -> Vec<f64> {
        let mut out = values.to_vec();
        for row in out.chunks_mut(self.grid.n_t) {
            self.spectral.derivative(row, 1);
        }
        out
    }

    fn point(&self, values: &[f64], i: usize, j: usize, p: &mut [f64]) {
        for (comp, x) in p.iter_mut().enumerate() {
            *x = values[self.index(comp, i, j)];
        }
    }

    fn check_chart(&self, values: &[f64], target: &AlmostComplexTarget) -> Result<()> {
        let Some(radius) = target.chart_radius() else {
            return Ok(());
        };
        let mut p = vec![0.0; self.dim];
        for i in 0..self.grid.n_s {
            for j in 0..self.grid.n_t {
                self.point(values, i, j, &mut p);
                let norm = p.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > radius {
                    return Err(Error::MarginExceeded(format!(
                        "value of norm {norm:.4} at node ({i}, {j}) leaves the chart of radius {radius}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// `½[∂_s w + J(w)∂_t w]` on raw values.
    pub fn dbar(&self, values: &[f64], target: &AlmostComplexTarget) -> Result<Vec<f64>> {
        self.check_chart(values, target)?;
        let ws = self.d_s(values);
        let wt = self.d_t(values);
        let mut out = vec![0.0; values.len()];
        let (mut p, mut v, mut jv) = (vec![0.0; self.dim], vec![0.0; self.dim], vec![0.0; self.dim]);
        for i in 0..self.grid.n_s {
            for j in 0..self.grid.n_t {
                self.point(values, i, j, &mut p);
                self.point(&wt, i, j, &mut v);
                target.apply(&p, &v, &mut jv);
                for comp in 0..self.dim {
                    let k = self.index(comp, i, j);
                    out[k] = 0.5 * (ws[k] + jv[comp]);
                }
            }
        }
        Ok(out)
    }

    /// `½[∂_s h + J(w)∂_t h + (DJ(w)h)∂_t w]` with `∂_t w` precomputed.
    pub fn dbar_linear(
        &self,
        values: &[f64],
        values_dt: &[f64],
        h: &[f64],
        target: &AlmostComplexTarget,
    ) -> Result<Vec<f64>> {
        let hs = self.d_s(h);
        let ht = self.d_t(h);
        let mut out = vec![0.0; values.len()];
        let n = self.dim;
        let (mut p, mut hp, mut v, mut a, mut b) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        for i in 0..self.grid.n_s {
            for j in 0..self.grid.n_t {
                self.point(values, i, j, &mut p);
                self.point(&ht, i, j, &mut v);
                target.apply(&p, &v, &mut a);
                self.point(h, i, j, &mut hp);
                self.point(values_dt, i, j, &mut v);
                if !target.apply_derivative(&p, &hp, &v, &mut b) {
                    return Err(Error::DerivativeMissing(target.name()));
                }
                for comp in 0..n {
                    let k = self.index(comp, i, j);
                    out[k] = 0.5 * (hs[k] + a[comp] + b[comp]);
                }
            }
        }
        Ok(out)
    }
}

fn section_grid(field: &GluedField, target: &AlmostComplexTarget) -> Result<CrGrid> {
    let grid = *field
        .grid()
        .ok_or_else(|| Error::DomainError(format!("{:?} field has no grid", field.kind())))?;
    if field.dim() != target.real_dim() {
        return Err(Error::GridMismatch(format!(
            "field has {} components, target dimension is {}",
            field.dim(),
            target.real_dim()
        )));
    }
    if field.kind() == DomainKind::Glued {
        let neck = field.param().neck;
        if grid.s_start.abs() > 1e-12 || (grid.s_end() - neck).abs() > 1e-9 * (1.0 + neck) {
            return Err(Error::GridMismatch(format!(
                "glued grid [{}, {}] does not cover [0, R = {neck}]",
                grid.s_start,
                grid.s_end()
            )));
        }
    }
    CrGrid::new(grid, field.dim())
}

fn wrap(field: &GluedField, values: Vec<f64>) -> GluedField {
    GluedField::on_grid(
        field.kind(),
        *field.param(),
        *field.grid().expect("grid"),
        vec![0.0; field.dim()],
        OffsetProfile::Flat,
        values,
        *field.cutoff(),
    )
}

/// The `ds`-component of the `(0,1)`-part of `dw` for the standard domain
/// structure: `½[∂_s w + J(w)∂_t w]`.
pub fn cr_evaluate(field: &GluedField, target: &AlmostComplexTarget) -> Result<GluedField> {
    let cg = section_grid(field, target)?;
    let out = cg.dbar(&field.values(), target)?;
    Ok(wrap(field, out))
}

/// Directional derivative of [`cr_evaluate`] at `field` in direction `h`.
pub fn cr_linearize(field: &GluedField, target: &AlmostComplexTarget, h: &GluedField) -> Result<GluedField> {
    if !target.has_derivative() {
        return Err(Error::DerivativeMissing(target.name()));
    }
    let cg = section_grid(field, target)?;
    if h.grid() != field.grid() || h.dim() != field.dim() {
        return Err(Error::GridMismatch("variation lives on a different grid".into()));
    }
    let w = field.values();
    let wt = cg.d_t(&w);
    let out = cg.dbar_linear(&w, &wt, &h.values(), target)?;
    Ok(wrap(field, out))
}

/// `max |value|` over all samples.
pub fn sup_norm(field: &GluedField) -> f64 {
    field.values().iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// Unweighted level-`m` norm `Σ_{a+b≤m} ‖∂_s^a ∂_t^b w‖²` on the grid:
/// trapezoid in `s`, mean in `t`, spectral `t` and 4th-order `s` differences.
pub fn field_level_norm(field: &GluedField, level: usize) -> Result<f64> {
    let grid = *field
        .grid()
        .ok_or_else(|| Error::DomainError("level norms need a gridded field".into()))?;
    if grid.n_s < NORM_S_ORDER + 1 {
        return Err(Error::MarginExceeded("grid too short for level norms".into()));
    }
    let ds = DiffOperator::new(grid.n_s, grid.h_s, NORM_S_ORDER);
    let spectral = Spectral::new(grid.n_t);
    let trap = trapezoid_weights(grid.n_s, grid.h_s);
    let n_t = grid.n_t;
    let mut total = 0.0;
    let mut s_derivs = field.values();
    for a in 0..=level {
        if a > 0 {
            let mut next = vec![0.0; s_derivs.len()];
            for comp in 0..field.dim() {
                for j in 0..n_t {
                    ds.apply_strided(&s_derivs, &mut next, comp * grid.n_s * n_t + j, n_t);
                }
            }
            s_derivs = next;
        }
        for b in 0..=(level - a) {
            let mut d = s_derivs.clone();
            for row in d.chunks_mut(n_t) {
                spectral.derivative(row, b as u32);
            }
            for (r, row) in d.chunks(n_t).enumerate() {
                let i = r % grid.n_s;
                total += trap[i] * row.iter().map(|x| x * x).sum::<f64>() / n_t as f64;
            }
        }
    }
    Ok(total.sqrt())
}

/// `w = c + A e^{−2πk(s+it)}` written as `(x, y)` pairs on the grid: a
/// holomorphic field for the standard structure on `ℝ²`.
pub fn holomorphic_mode(
    param: GluingParameter,
    grid: FieldGrid,
    constant: [f64; 2],
    amplitude: f64,
    mode: u32,
) -> Result<GluedField> {
    let k = mode as f64;
    GluedField::from_fn(param, grid, 2, |comp, s, t| {
        let arg = -2.0 * std::f64::consts::PI * k * t;
        let m = amplitude * (-2.0 * std::f64::consts::PI * k * s).exp();
        constant[comp] + if comp == 0 { m * arg.cos() } else { m * arg.sin() }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GluingCompatibilityRow {
    pub r: f64,
    pub neck: f64,
    /// Level-0 norm of the section over `|s − R/2| ≤ 1`.
    pub transition_norm: f64,
    /// Level-0 norm of the section elsewhere.
    pub outside_norm: f64,
    /// `max |section|` outside the transition zone relative to `max |w|` there.
    pub outside_relative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GluingCompatibilityReport {
    pub rows: Vec<GluingCompatibilityRow>,
    /// Transition-zone norms strictly decrease as `r` decreases.
    pub monotone: bool,
}

/// Glue the holomorphic pair `u⁺ = c + A e^{−2π(s+it)}`,
/// `u⁻ = c + B e^{2π(s'+it')}` for each `r` and evaluate the section with the
/// standard structure. Only the cut-off region can carry a nonzero section.
pub fn gluing_compatibility_sweep(radii: &[f64], s_max: f64, n_s: usize, n_t: usize) -> Result<GluingCompatibilityReport> {
    let grid = CylinderGrid::new(s_max, n_s, n_t)?;
    let c = [0.3, -0.2];
    let (amp_plus, amp_minus) = (0.8, 0.5);
    let two_pi = 2.0 * std::f64::consts::PI;
    let u = ScaleFunction::from_decaying(
        grid,
        WeightSequence::standard(3),
        c.to_vec(),
        |comp, s, t| {
            let m = amp_plus * (-two_pi * s).exp();
            if comp == 0 { m * (two_pi * t).cos() } else { -m * (two_pi * t).sin() }
        },
        |comp, s, t| {
            let m = amp_minus * (two_pi * s).exp();
            if comp == 0 { m * (two_pi * t).cos() } else { m * (two_pi * t).sin() }
        },
    );
    let target = AlmostComplexTarget::standard(1)?;
    let beta = CutoffBeta::new();
    let mut rows = Vec::with_capacity(radii.len());
    for &r in radii {
        let a = GluingParameter::exponential(r, 0.0)?;
        let glued = glue(&a, &u, &beta)?;
        let section = cr_evaluate(&glued, &target)?;
        let g = *section.grid().expect("grid");
        let vals = section.values();
        let w = glued.values();
        let trap = trapezoid_weights(g.n_s, g.h_s);
        let (mut inside, mut outside, mut out_sup, mut w_sup) = (0.0, 0.0, 0.0_f64, 0.0_f64);
        for comp in 0..2 {
            for i in 0..g.n_s {
                let zone = (g.s(i) - 0.5 * a.neck).abs() <= 1.0;
                for j in 0..g.n_t {
                    let k = (comp * g.n_s + i) * g.n_t + j;
                    let contrib = trap[i] * vals[k] * vals[k] / g.n_t as f64;
                    if zone {
                        inside += contrib;
                    } else {
                        outside += contrib;
                        out_sup = out_sup.max(vals[k].abs());
                        w_sup = w_sup.max((w[k] - c[comp]).abs());
                    }
                }
            }
        }
        rows.push(GluingCompatibilityRow {
            r,
            neck: a.neck,
            transition_norm: inside.sqrt(),
            outside_norm: outside.sqrt(),
            outside_relative: if w_sup > 0.0 { out_sup / w_sup } else { 0.0 },
        });
    }
    let mut sorted: Vec<&GluingCompatibilityRow> = rows.iter().collect();
    sorted.sort_by(|x, y| y.r.total_cmp(&x.r));
    let monotone = sorted.windows(2).all(|p| p[1].transition_norm < p[0].transition_norm);
    Ok(GluingCompatibilityReport { rows, monotone })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn neck_grid(n_s: usize, n_t: usize) -> (GluingParameter, FieldGrid) {
        let a = GluingParameter::exponential(0.45, 0.0).unwrap();
        let grid = FieldGrid {
            s_start: 0.0,
            h_s: a.neck / (n_s - 1) as f64,
            n_s,
            n_t,
        };
        (a, grid)
    }

    #[test]
    fn constant_field_has_zero_section() {
        let (a, g) = neck_grid(64, 16);
        let w = GluedField::from_fn(a, g, 2, |c, _, _| [0.4, -1.2][c]).unwrap();
        let t = AlmostComplexTarget::twisted(0.5).unwrap();
        assert!(sup_norm(&cr_evaluate(&w, &t).unwrap()) < 1e-12);
    }

    #[test]
    fn holomorphic_modes_are_annihilated() {
        let (a, g) = neck_grid(256, 64);
        let t = AlmostComplexTarget::standard(1).unwrap();
        for k in 1..=2 {
            let w = holomorphic_mode(a, g, [0.1, 0.2], 1.0, k).unwrap();
            let res = sup_norm(&cr_evaluate(&w, &t).unwrap());
            assert!(res < if k == 1 { 1e-8 } else { 1e-5 }, "k = {k}: {res:e}");
        }
    }

    #[test]
    fn antiholomorphic_magnitude() {
        let (a, g) = neck_grid(256, 64);
        let t = AlmostComplexTarget::standard(1).unwrap();
        // e^{−2π(s − it)}
        let w = GluedField::from_fn(a, g, 2, |c, s, tt| {
            let m = (-2.0 * PI * s).exp();
            if c == 0 { m * (2.0 * PI * tt).cos() } else { m * (2.0 * PI * tt).sin() }
        })
        .unwrap();
        let d = cr_evaluate(&w, &t).unwrap();
        let mut worst: f64 = 0.0;
        for i in 0..g.n_s {
            for j in 0..g.n_t {
                let mag = d.value(0, i, j).hypot(d.value(1, i, j));
                let expect = 2.0 * PI * (-2.0 * PI * g.s(i)).exp();
                worst = worst.max((mag - expect).abs());
            }
        }
        assert!(worst < 1e-7, "{worst:e}");
    }

    #[test]
    fn linearization_matches_differences() {
        let (a, g) = neck_grid(64, 16);
        let t = AlmostComplexTarget::twisted(0.6).unwrap();
        let fw = |c: usize, s: f64, tt: f64| 0.3 * (2.0 * PI * tt + c as f64).sin() * (-0.3 * s).exp() + 0.1 * c as f64;
        let fh = |c: usize, s: f64, tt: f64| (4.0 * PI * tt).cos() * (0.5 * s + c as f64).sin();
        let w = GluedField::from_fn(a, g, 2, fw).unwrap();
        let h = GluedField::from_fn(a, g, 2, fh).unwrap();
        let lin = cr_linearize(&w, &t, &h).unwrap().values();
        let at = |eps: f64| {
            let shifted = GluedField::from_fn(a, g, 2, |c, s, tt| fw(c, s, tt) + eps * fh(c, s, tt)).unwrap();
            cr_evaluate(&shifted, &t).unwrap().values()
        };
        let eps = 1e-3;
        let (p1, m1, p2, m2) = (at(eps), at(-eps), at(2.0 * eps), at(-2.0 * eps));
        let scale = lin.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let mut worst: f64 = 0.0;
        for k in 0..lin.len() {
            let fd = (8.0 * (p1[k] - m1[k]) - (p2[k] - m2[k])) / (12.0 * eps);
            worst = worst.max((fd - lin[k]).abs());
        }
        assert!(worst / scale < 1e-6, "{:e}", worst / scale);
    }

    #[test]
    fn missing_structure_derivative() {
        let (a, g) = neck_grid(32, 8);
        let j: super::super::target::StructureFn =
            std::sync::Arc::new(|_| nalgebra::DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]));
        let t = AlmostComplexTarget::custom(2, j, None, None).unwrap();
        let w = GluedField::from_fn(a, g, 2, |_, _, _| 0.0).unwrap();
        assert!(matches!(cr_linearize(&w, &t, &w), Err(Error::DerivativeMissing(_))));
        assert!(cr_evaluate(&w, &t).is_ok());
    }

    #[test]
    fn chart_and_stencil_margins() {
        let (a, g) = neck_grid(8, 8);
        let w = GluedField::from_fn(a, g, 2, |_, _, _| 0.0).unwrap();
        let t = AlmostComplexTarget::standard(1).unwrap();
        assert!(matches!(cr_evaluate(&w, &t), Err(Error::MarginExceeded(_))));
        let (a, g) = neck_grid(32, 8);
        let w = GluedField::from_fn(a, g, 2, |_, _, _| 3.0).unwrap();
        let j: super::super::target::StructureFn =
            std::sync::Arc::new(|_| nalgebra::DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]));
        let t = AlmostComplexTarget::custom(2, j, None, Some(1.0)).unwrap();
        assert!(matches!(cr_evaluate(&w, &t), Err(Error::MarginExceeded(_))));
    }

    #[test]
    fn level_norm_of_a_mode() {
        let (a, g) = neck_grid(200, 16);
        // w = (cos 2πt, 0): level-1 norm² = R·(½ + ½(2π)²)
        let w = GluedField::from_fn(a, g, 2, |c, _, t| if c == 0 { (2.0 * PI * t).cos() } else { 0.0 }).unwrap();
        let n1 = field_level_norm(&w, 1).unwrap();
        let expect = (a.neck * 0.5 * (1.0 + 4.0 * PI * PI)).sqrt();
        assert!((n1 - expect).abs() < 1e-10 * expect);
    }

    #[test]
    fn glued_holomorphic_pair_is_holomorphic_off_the_cutoff() {
        let rep = gluing_compatibility_sweep(&[0.49, 0.47, 0.45, 0.43], 10.0, 501, 16).unwrap();
        assert!(rep.monotone, "{rep:?}");
        for row in &rep.rows {
            assert!(row.outside_relative < 1e-5, "{row:?}");
        }
    }
}

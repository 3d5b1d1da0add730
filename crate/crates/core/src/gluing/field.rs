//! Discretized maps on the glued cylinder `Z_a`, the anti-glued cylinder `C_a`,
//! and the degenerate `a = 0` domains.

use serde::{Deserialize, Serialize};

use super::cutoff::CutoffBeta;
use super::param::GluingParameter;
use crate::error::{Error, Result};
use crate::numerics::{interp_stencil, trapezoid_weights, Spectral};
use crate::scale_space::{CylinderGrid, ScaleFunction, WeightSequence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    /// `Z_a = [0, R] × S¹`.
    Glued,
    /// `C_a`, truncated to the part where the source data exist.
    AntiGlued,
    /// `Z_0`: the unglued pair itself.
    Pair,
    /// `C_0 = ∅`.
    Empty,
}

/// Uniform `s` samples `s_start + i·h_s` times `n_t` equispaced `t` samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldGrid {
    pub s_start: f64,
    pub h_s: f64,
    pub n_s: usize,
    pub n_t: usize,
}

impl FieldGrid {
    /// Grid on `[0, R]` with an odd number of samples (so `R/2` is a node)
    /// and spacing close to `h_target`.
    pub fn neck(neck: f64, h_target: f64, n_t: usize) -> Self {
        let half = (neck / (2.0 * h_target)).ceil().max(1.0) as usize;
        let n_s = 2 * half + 1;
        FieldGrid {
            s_start: 0.0,
            h_s: neck / (n_s - 1) as f64,
            n_s,
            n_t,
        }
    }

    /// Grid on `[R − s_max, s_max]` aligned with the minus samples of `grid`.
    pub fn anti(neck: f64, grid: &CylinderGrid) -> Self {
        let h = grid.h_s();
        let span = 2.0 * grid.s_max - neck;
        let n_s = ((span / h) + 1e-9).floor() as usize + 1;
        FieldGrid {
            s_start: neck - grid.s_max,
            h_s: h,
            n_s,
            n_t: grid.n_t,
        }
    }

    pub fn s(&self, i: usize) -> f64 {
        self.s_start + i as f64 * self.h_s
    }

    pub fn s_end(&self) -> f64 {
        self.s(self.n_s - 1)
    }

    pub fn t(&self, j: usize) -> f64 {
        j as f64 / self.n_t as f64
    }

    pub fn len(&self) -> usize {
        self.n_s * self.n_t
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, s: f64) -> bool {
        let tol = 1e-9 * self.h_s;
        s >= self.s_start - tol && s <= self.s_end() + tol
    }
}

/// Profile multiplying the stored constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OffsetProfile {
    /// The constant itself.
    Flat,
    /// `(2β(s − R/2) − 1)·constant`, tending to `±constant` at the two ends of `C_a`.
    Signed,
}

/// Value and first partial derivatives at an off-grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub value: f64,
    pub ds: f64,
    pub dt: f64,
}

/// A map from a glued or anti-glued cylinder into `ℝᴺ`.
///
/// Values are `offset(s)·constant + varying(s, t)`. Keeping the constant
/// apart means the small varying part never suffers cancellation against it.
#[derive(Debug, Clone)]
pub struct GluedField {
    kind: DomainKind,
    param: GluingParameter,
    grid: Option<FieldGrid>,
    dim: usize,
    constant: Vec<f64>,
    offset: OffsetProfile,
    varying: Vec<f64>,
    pair: Option<ScaleFunction>,
    origin: Option<(CylinderGrid, WeightSequence)>,
    cutoff: CutoffBeta,
}

impl GluedField {
    pub(crate) fn on_grid(
        kind: DomainKind,
        param: GluingParameter,
        grid: FieldGrid,
        constant: Vec<f64>,
        offset: OffsetProfile,
        varying: Vec<f64>,
        cutoff: CutoffBeta,
    ) -> Self {
        debug_assert_eq!(varying.len(), constant.len() * grid.len());
        GluedField {
            kind,
            param,
            grid: Some(grid),
            dim: constant.len(),
            constant,
            offset,
            varying,
            pair: None,
            origin: None,
            cutoff,
        }
    }

    pub(crate) fn pair(u: ScaleFunction) -> Self {
        GluedField {
            kind: DomainKind::Pair,
            param: GluingParameter::zero(),
            grid: None,
            dim: u.dim(),
            constant: u.asymptotic_constant().to_vec(),
            offset: OffsetProfile::Flat,
            varying: Vec::new(),
            origin: Some((*u.grid(), u.weights().clone())),
            pair: Some(u),
            cutoff: CutoffBeta::new(),
        }
    }

    pub(crate) fn empty(dim: usize) -> Self {
        GluedField {
            kind: DomainKind::Empty,
            param: GluingParameter::zero(),
            grid: None,
            dim,
            constant: vec![0.0; dim],
            offset: OffsetProfile::Flat,
            varying: Vec::new(),
            pair: None,
            origin: None,
            cutoff: CutoffBeta::new(),
        }
    }

    pub(crate) fn with_origin(mut self, grid: CylinderGrid, weights: WeightSequence) -> Self {
        self.origin = Some((grid, weights));
        self
    }

    /// A field on `Z_a` built from closure values `f(comp, s, t)`.
    pub fn from_fn<F>(param: GluingParameter, grid: FieldGrid, dim: usize, f: F) -> Result<Self>
    where
        F: Fn(usize, f64, f64) -> f64,
    {
        if param.is_zero() {
            return Err(Error::DomainError("Z_0 has no finite-cylinder grid".into()));
        }
        let mut varying = vec![0.0; dim * grid.len()];
        for comp in 0..dim {
            for i in 0..grid.n_s {
                for j in 0..grid.n_t {
                    varying[(comp * grid.n_s + i) * grid.n_t + j] = f(comp, grid.s(i), grid.t(j));
                }
            }
        }
        Ok(GluedField::on_grid(
            DomainKind::Glued,
            param,
            grid,
            vec![0.0; dim],
            OffsetProfile::Flat,
            varying,
            CutoffBeta::new(),
        ))
    }

    /// The zero anti-glued field for parameter `a` on the `C_a` grid matching `grid`.
    pub fn zero_anti(param: GluingParameter, grid: &CylinderGrid, dim: usize) -> Self {
        let fg = FieldGrid::anti(param.neck, grid);
        GluedField::on_grid(
            DomainKind::AntiGlued,
            param,
            fg,
            vec![0.0; dim],
            OffsetProfile::Signed,
            vec![0.0; dim * fg.len()],
            CutoffBeta::new(),
        )
    }

    pub fn kind(&self) -> DomainKind {
        self.kind
    }

    pub fn param(&self) -> &GluingParameter {
        &self.param
    }

    pub fn grid(&self) -> Option<&FieldGrid> {
        self.grid.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn constant(&self) -> &[f64] {
        &self.constant
    }

    pub fn offset(&self) -> OffsetProfile {
        self.offset
    }

    pub fn varying(&self) -> &[f64] {
        &self.varying
    }

    /// The unglued pair carried by a `Z_0` field.
    pub fn as_pair(&self) -> Option<&ScaleFunction> {
        self.pair.as_ref()
    }

    pub fn origin(&self) -> Option<&(CylinderGrid, WeightSequence)> {
        self.origin.as_ref()
    }

    pub fn cutoff(&self) -> &CutoffBeta {
        &self.cutoff
    }

    fn require_grid(&self) -> Result<&FieldGrid> {
        self.grid
            .as_ref()
            .ok_or_else(|| Error::DomainError(format!("{:?} field has no grid", self.kind)))
    }

    #[inline]
    pub fn index(&self, comp: usize, i: usize, j: usize) -> usize {
        let g = self.grid.as_ref().expect("grid");
        (comp * g.n_s + i) * g.n_t + j
    }

    /// Multiplier of the constant at abscissa `s`.
    pub fn offset_at(&self, s: f64) -> f64 {
        match self.offset {
            OffsetProfile::Flat => 1.0,
            OffsetProfile::Signed => 2.0 * self.cutoff.eval(s - 0.5 * self.param.neck) - 1.0,
        }
    }

    fn offset_derivative(&self, s: f64) -> f64 {
        match self.offset {
            OffsetProfile::Flat => 0.0,
            OffsetProfile::Signed => 2.0 * self.cutoff.derivative(s - 0.5 * self.param.neck),
        }
    }

    pub fn value(&self, comp: usize, i: usize, j: usize) -> f64 {
        let g = self.grid.as_ref().expect("grid");
        self.constant[comp] * self.offset_at(g.s(i)) + self.varying[self.index(comp, i, j)]
    }

    /// Full sample values in layout `[(comp * n_s + i) * n_t + j]`
    /// (empty for `Z_0` and `C_0`).
    pub fn values(&self) -> Vec<f64> {
        let Some(g) = self.grid else {
            return Vec::new();
        };
        let offsets: Vec<f64> = (0..g.n_s).map(|i| self.offset_at(g.s(i))).collect();
        let mut out = self.varying.clone();
        for comp in 0..self.dim {
            for i in 0..g.n_s {
                let add = self.constant[comp] * offsets[i];
                for j in 0..g.n_t {
                    out[(comp * g.n_s + i) * g.n_t + j] += add;
                }
            }
        }
        out
    }

    /// Interpolated value and partials at `(s, t)`: six-point Lagrange in `s`,
    /// trigonometric interpolation in `t`.
    pub fn sample(&self, comp: usize, s: f64, t: f64) -> Result<FieldSample> {
        let g = *self.require_grid()?;
        if comp >= self.dim {
            return Err(Error::DomainError(format!("component {comp} >= N = {}", self.dim)));
        }
        if !g.contains(s) {
            return Err(Error::DomainError(format!(
                "s = {s} outside [{}, {}]",
                g.s_start,
                g.s_end()
            )));
        }
        let st = interp_stencil(s, g.s_start, g.h_s, g.n_s);
        let mut row = vec![0.0; g.n_t];
        let mut drow = vec![0.0; g.n_t];
        for (k, (w, dw)) in st.weights.iter().zip(&st.d_weights).enumerate() {
            let base = (comp * g.n_s + st.start + k) * g.n_t;
            for j in 0..g.n_t {
                row[j] += w * self.varying[base + j];
                drow[j] += dw * self.varying[base + j];
            }
        }
        let spectral = Spectral::new(g.n_t);
        let (value, dt) = spectral.eval_with_derivative(&spectral.coefficients(&row), t);
        let (ds, _) = spectral.eval_with_derivative(&spectral.coefficients(&drow), t);
        Ok(FieldSample {
            value: value + self.constant[comp] * self.offset_at(s),
            ds: ds + self.constant[comp] * self.offset_derivative(s),
            dt,
        })
    }

    /// Sample through the dual chart: `[s', t']' = [s' + R, t' + θ]`.
    pub fn sample_dual(&self, comp: usize, s_prime: f64, t_prime: f64) -> Result<FieldSample> {
        self.sample(comp, s_prime + self.param.neck, t_prime + self.param.theta)
    }

    /// Level-0 norm with weight `e^{δ|s − R/2|}`.
    ///
    /// On `C_a` this is `|γ|² + Σ ∫ |w − γ(2β − 1)|² e^{2δ|s − R/2|}`. On `Z_a`
    /// the split is around the neck average instead:
    /// `|av|² + Σ ∫ |w − av|² e^{2δ|s − R/2|}` (use `δ = 0` for the plain
    /// norm of the compact cylinder). Trapezoid in `s`, discrete mean in `t`.
    pub fn weighted_norm(&self, delta: f64) -> Result<f64> {
        match self.kind {
            DomainKind::Empty => return Ok(0.0),
            DomainKind::Pair => {
                let u = self.pair.as_ref().expect("pair data");
                return Ok(crate::scale_space::norm_with_delta(u, 0, delta)?.value);
            }
            _ => {}
        }
        let g = *self.require_grid()?;
        let trap = trapezoid_weights(g.n_s, g.h_s);
        let mid = 0.5 * self.param.neck;
        let mid_row = (g.n_s - 1) / 2;
        let mut total = 0.0;
        for comp in 0..self.dim {
            let centre = match self.kind {
                DomainKind::Glued => {
                    let base = (comp * g.n_s + mid_row) * g.n_t;
                    Spectral::mean(&self.varying[base..base + g.n_t])
                }
                _ => 0.0,
            };
            let c = self.constant[comp] + centre;
            total += c * c;
            for i in 0..g.n_s {
                let base = (comp * g.n_s + i) * g.n_t;
                let row: f64 = self.varying[base..base + g.n_t]
                    .iter()
                    .map(|x| (x - centre) * (x - centre))
                    .sum();
                total += trap[i] * (2.0 * delta * (g.s(i) - mid).abs()).exp() * row / g.n_t as f64;
            }
        }
        Ok(total.sqrt())
    }

    pub fn to_record(&self) -> GluedFieldRecord {
        GluedFieldRecord {
            domain_kind: self.kind,
            a: ParamRecord {
                r: self.param.r,
                theta: self.param.theta,
            },
            neck: self.param.neck,
            grid: self.grid,
            n: self.dim,
            values: self.values(),
            pair: self.pair.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamRecord {
    pub r: f64,
    pub theta: f64,
}

/// JSON form of a [`GluedField`]: full sample values, no internal splitting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GluedFieldRecord {
    pub domain_kind: DomainKind,
    pub a: ParamRecord,
    #[serde(rename = "R")]
    pub neck: f64,
    pub grid: Option<FieldGrid>,
    #[serde(rename = "N")]
    pub n: usize,
    pub values: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub pair: Option<ScaleFunction>,
}

impl Serialize for GluedField {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_record().serialize(serializer)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neck_grid_has_midpoint_node() {
        let g = FieldGrid::neck(14.7, 0.02, 8);
        assert_eq!(g.n_s % 2, 1);
        assert!((g.s((g.n_s - 1) / 2) - 7.35).abs() < 1e-12);
        assert!((g.s_end() - 14.7).abs() < 1e-12);
        assert!(g.h_s <= 0.02);
    }

    #[test]
    fn anti_grid_aligns_with_minus_samples() {
        let cyl = CylinderGrid::new(20.0, 1001, 8).unwrap();
        let g = FieldGrid::anti(6.5, &cyl);
        for i in [0, 10, 500] {
            assert!((g.s(i) - 6.5 - cyl.s_minus(i)).abs() < 1e-12);
        }
        assert!(g.s_end() <= 20.0 + 1e-9 && g.s_end() > 20.0 - cyl.h_s());
    }

    #[test]
    fn sampler_reproduces_smooth_field() {
        let a = GluingParameter::exponential(0.45, 0.1).unwrap();
        let g = FieldGrid::neck(a.neck, 0.02, 16);
        let f = |s: f64, t: f64| (0.3 * s).sin() * (2.0 * std::f64::consts::PI * t).cos();
        let w = GluedField::from_fn(a, g, 1, |_, s, t| f(s, t)).unwrap();
        let p = w.sample(0, 2.345, 0.123).unwrap();
        assert!((p.value - f(2.345, 0.123)).abs() < 1e-9);
        let dt_exact = -(0.3 * 2.345f64).sin() * 2.0 * std::f64::consts::PI * (2.0 * std::f64::consts::PI * 0.123).sin();
        assert!((p.dt - dt_exact).abs() < 1e-8);
        let ds_exact = 0.3 * (0.3 * 2.345f64).cos() * (2.0 * std::f64::consts::PI * 0.123).cos();
        assert!((p.ds - ds_exact).abs() < 1e-7);
        assert!(w.sample(0, a.neck + 1.0, 0.0).is_err());
    }
}

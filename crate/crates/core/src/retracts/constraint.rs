//! Retraction onto maps whose value at a marked point lies on an affine
//! codimension-two constraint.
//!
//! For `w` near `w0`, Newton finds the point `z(w)` near the reference point
//! `z0` where `A·w(z) = b`. The retraction precomposes `w` with a compactly
//! supported reparametrization `ψ(z) = z + χ(z − z0)(z(w) − z0)`, so that the
//! result takes the value `w(z(w))` at `z0`.

use super::Retraction;
use crate::error::{Error, Result};
use crate::gluing::{CutoffBeta, DomainKind, FieldGrid, GluedField, OffsetProfile};

/// Transversality threshold on `|det(A·[∂_s w, ∂_t w])|` at the reference point.
pub const TRANSVERSALITY_MIN: f64 = 1e-3;

/// Radius of the support of the reparametrization.
pub const SUPPORT_RADIUS: f64 = 0.4;

/// Upper bound on `max |β'|`, used to keep `ψ` a diffeomorphism.
const CUTOFF_SLOPE: f64 = 0.85;

const NEWTON_MAX_ITER: usize = 30;
const NEWTON_TOL: f64 = 1e-13;

/// `{p ∈ ℝ^N : rows·p = rhs}` with two rows.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AffineConstraint {
    pub rows: [Vec<f64>; 2],
    pub rhs: [f64; 2],
}

impl AffineConstraint {
    /// The constraint with the given rows passing through `point`.
    pub fn through(rows: [Vec<f64>; 2], point: &[f64]) -> Result<Self> {
        let mut rhs = [0.0; 2];
        for (k, row) in rows.iter().enumerate() {
            if row.len() != point.len() {
                return Err(Error::DomainError("constraint row and point dimensions differ".into()));
            }
            rhs[k] = row.iter().zip(point).map(|(a, p)| a * p).sum();
        }
        Ok(AffineConstraint { rows, rhs })
    }

    pub fn dim(&self) -> usize {
        self.rows[0].len()
    }

    fn apply(&self, p: &[f64]) -> [f64; 2] {
        let mut out = [0.0; 2];
        for k in 0..2 {
            out[k] = self.rows[k].iter().zip(p).map(|(a, x)| a * x).sum::<f64>() - self.rhs[k];
        }
        out
    }

    fn linear(&self, p: &[f64]) -> [f64; 2] {
        let mut out = [0.0; 2];
        for k in 0..2 {
            out[k] = self.rows[k].iter().zip(p).map(|(a, x)| a * x).sum::<f64>();
        }
        out
    }
}

fn wrap(t: f64) -> f64 {
    t - t.round()
}

/// The retraction built by [`constraint_retraction_demo`].
#[derive(Debug, Clone)]
pub struct ConstraintRetraction {
    constraint: AffineConstraint,
    reference: (f64, f64),
    grid: FieldGrid,
    template: GluedField,
    beta: CutoffBeta,
}

/// Build the constraint retraction around `w0`, whose value at the grid node
/// closest to the middle of the neck must lie on the constraint.
pub fn constraint_retraction_demo(constraint: AffineConstraint, w0: &GluedField) -> Result<ConstraintRetraction> {
    if w0.kind() != DomainKind::Glued {
        return Err(Error::DomainError("the constraint demo acts on fields over Z_a".into()));
    }
    let grid = *w0.grid().expect("Z_a grid");
    let i0 = grid.n_s / 2;
    ConstraintRetraction::new(constraint, w0, (grid.s(i0), 0.0))
}

impl ConstraintRetraction {
    /// `reference` must be a grid node at distance at least the support radius
    /// from both ends of the neck.
    pub fn new(constraint: AffineConstraint, w0: &GluedField, reference: (f64, f64)) -> Result<Self> {
        let grid = *w0
            .grid()
            .filter(|_| w0.kind() == DomainKind::Glued)
            .ok_or_else(|| Error::DomainError("the constraint demo acts on fields over Z_a".into()))?;
        if w0.dim() < 2 || constraint.dim() != w0.dim() {
            return Err(Error::DomainError(format!(
                "constraint in R^{} does not match a field with N = {} (N ≥ 2 required)",
                constraint.dim(),
                w0.dim()
            )));
        }
        let (s0, t0) = reference;
        if s0 - SUPPORT_RADIUS < grid.s_start || s0 + SUPPORT_RADIUS > grid.s_end() {
            return Err(Error::DomainError(format!("reference point s = {s0} too close to the neck ends")));
        }
        let rho = ConstraintRetraction {
            constraint,
            reference: (s0, wrap(t0)),
            grid,
            template: w0.clone(),
            beta: CutoffBeta::new(),
        };
        let (f, jac) = rho.system(w0, s0, t0)?;
        let res = f[0].hypot(f[1]);
        if res > 1e-9 {
            return Err(Error::NoIntersection(format!(
                "w0 misses the constraint at the reference point by {res:e}"
            )));
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if det.abs() < TRANSVERSALITY_MIN {
            return Err(Error::NotTransversal { det });
        }
        Ok(rho)
    }

    pub fn reference(&self) -> (f64, f64) {
        self.reference
    }

    pub fn constraint(&self) -> &AffineConstraint {
        &self.constraint
    }

    /// `A·w(s, t) − b` and its Jacobian in `(s, t)`.
    fn system(&self, w: &GluedField, s: f64, t: f64) -> Result<([f64; 2], [[f64; 2]; 2])> {
        let n = w.dim();
        let (mut val, mut ds, mut dt) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        for c in 0..n {
            let smp = w.sample(c, s, t)?;
            val[c] = smp.value;
            ds[c] = smp.ds;
            dt[c] = smp.dt;
        }
        let f = self.constraint.apply(&val);
        let js = self.constraint.linear(&ds);
        let jt = self.constraint.linear(&dt);
        Ok((f, [[js[0], jt[0]], [js[1], jt[1]]]))
    }

    /// `|A·w(z0) − b|`.
    pub fn constraint_residual(&self, w: &GluedField) -> Result<f64> {
        let (f, _) = self.system(w, self.reference.0, self.reference.1)?;
        Ok(f[0].hypot(f[1]))
    }

    /// The intersection point `z(w)` found by Newton from `z0`.
    pub fn intersection(&self, w: &GluedField) -> Result<(f64, f64)> {
        let (mut s, mut t) = self.reference;
        for _ in 0..NEWTON_MAX_ITER {
            if !self.grid.contains(s) {
                return Err(Error::NoIntersection(format!("Newton left the neck at s = {s}")));
            }
            let (f, j) = self.system(w, s, t)?;
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            if det.abs() < 1e-14 {
                return Err(Error::NoIntersection("singular constraint Jacobian".into()));
            }
            let step_s = (j[1][1] * f[0] - j[0][1] * f[1]) / det;
            let step_t = (-j[1][0] * f[0] + j[0][0] * f[1]) / det;
            s -= step_s;
            t -= step_t;
            if step_s.hypot(step_t) <= NEWTON_TOL * (1.0 + s.abs()) {
                return Ok((s, self.reference.1 + wrap(t - self.reference.1)));
            }
        }
        Err(Error::NoIntersection("Newton did not converge near the reference point".into()))
    }

    fn check_grid(&self, w: &GluedField) -> Result<()> {
        let g = w.grid().ok_or_else(|| Error::GridMismatch("field has no Z_a grid".into()))?;
        if w.kind() != DomainKind::Glued || *g != self.grid || w.dim() != self.template.dim() {
            return Err(Error::GridMismatch("field does not live on the reference neck grid".into()));
        }
        Ok(())
    }

    fn chi(&self, ds: f64, dt: f64) -> f64 {
        let d = ds.hypot(wrap(dt));
        self.beta.eval(4.0 * d / SUPPORT_RADIUS - 3.0)
    }
}

impl Retraction for ConstraintRetraction {
    type Point = GluedField;

    fn apply(&self, w: &GluedField) -> Result<GluedField> {
        self.check_grid(w)?;
        let (s0, t0) = self.reference;
        let (sz, tz) = self.intersection(w)?;
        let (ms, mt) = (sz - s0, wrap(tz - t0));
        let displacement = ms.hypot(mt);
        if displacement * 4.0 * CUTOFF_SLOPE / SUPPORT_RADIUS >= 0.5 {
            return Err(Error::NoIntersection(format!(
                "intersection moved by {displacement:e}, beyond the retraction neighbourhood"
            )));
        }
        let g = self.grid;
        let n = w.dim();
        let mut values = w.values();
        for i in 0..g.n_s {
            let s = g.s(i);
            if (s - s0).abs() >= SUPPORT_RADIUS {
                continue;
            }
            for j in 0..g.n_t {
                let t = g.t(j);
                let c = self.chi(s - s0, t - t0);
                if c == 0.0 {
                    continue;
                }
                for comp in 0..n {
                    values[(comp * g.n_s + i) * g.n_t + j] = w.sample(comp, s + c * ms, t + c * mt)?.value;
                }
            }
        }
        Ok(GluedField::on_grid(
            DomainKind::Glued,
            *w.param(),
            g,
            vec![0.0; n],
            OffsetProfile::Flat,
            values,
            *w.cutoff(),
        ))
    }

    /// Unweighted `L²` distance of the sampled values.
    fn distance(&self, p: &GluedField, q: &GluedField) -> Result<f64> {
        self.check_grid(p)?;
        self.check_grid(q)?;
        let sum: f64 = p.values().iter().zip(q.values()).map(|(a, b)| (a - b) * (a - b)).sum();
        Ok((sum * self.grid.h_s / self.grid.n_t as f64).sqrt())
    }

    fn norm(&self, p: &GluedField) -> Result<f64> {
        self.check_grid(p)?;
        let sum: f64 = p.values().iter().map(|a| a * a).sum();
        Ok((sum * self.grid.h_s / self.grid.n_t as f64).sqrt())
    }
}

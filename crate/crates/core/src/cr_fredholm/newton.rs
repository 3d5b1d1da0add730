//! Damped Newton iteration for `∂̄_J w = s(w)` on a finite cylinder.
//!
//! The discrete system is made square by spectral boundary conditions on the
//! end slices. Writing a slice as complex Fourier modes `ĉ_k` of
//! `w_{2c} + i w_{2c+1}`, the modes `k < 0` are held at `s = 0` and the modes
//! `k > 0` at `s = R`; the section equations are imposed at interior nodes and
//! on the complementary modes of the end slices, except the mode `k = 0` at
//! `s = R`. What remains free is the asymptotic constant, one point of `ℝ^{2n}`,
//! which point constraints pin.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::section::{holomorphic_mode, CrGrid};
use super::target::AlmostComplexTarget;
use crate::error::{Error, Result};
use crate::gluing::cutoff::bump;
use crate::gluing::{FieldGrid, GluedField, GluingParameter, OffsetProfile};

pub const DEFAULT_NEWTON_TOL: f64 = 1e-9;
pub const DEFAULT_NEWTON_MAX_ITER: usize = 25;
/// Residuals below this are rounding noise and are left out of order estimates.
const ORDER_FLOOR: f64 = 1e-13;
const MIN_STEP: f64 = 1.0 / 64.0;
const CONDITION_FLOOR: f64 = 1e-13;
const KERNEL_TAU: f64 = 1e-10;

/// `w(s_i, t_j) = value`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointConstraint {
    pub s_index: usize,
    pub t_index: usize,
    pub value: Vec<f64>,
}

impl PointConstraint {
    /// Pin `field` to its current value at node `(i, j)`.
    pub fn at_node(field: &GluedField, i: usize, j: usize) -> Result<Self> {
        let g = field.grid().ok_or_else(|| Error::DomainError("field has no grid".into()))?;
        if i >= g.n_s || j >= g.n_t {
            return Err(Error::DomainError(format!("node ({i}, {j}) outside the grid")));
        }
        Ok(PointConstraint {
            s_index: i,
            t_index: j,
            value: (0..field.dim()).map(|c| field.value(c, i, j)).collect(),
        })
    }
}

/// `s(w) = M(f) + λ·M(w)` with the `t`-mollifier `M = (1 − ∂_t²)^{-1/2}`.
#[derive(Debug, Clone)]
pub struct ScPlusPerturbation {
    smoothed_forcing: Vec<f64>,
    strength: f64,
    grid: FieldGrid,
}

fn mollify_raw(cg: &CrGrid, values: &[f64]) -> Vec<f64> {
    let mut out = values.to_vec();
    for row in out.chunks_mut(cg.grid.n_t) {
        cg.spectral().multiply(row, |k| {
            let w = 2.0 * std::f64::consts::PI * k as f64;
            Complex64::new(1.0 / (1.0 + w * w).sqrt(), 0.0)
        });
    }
    out
}

/// The mollifier `(1 − ∂_t²)^{-1/2}` applied row by row; it gains one
/// derivative in `t`.
pub fn mollify(field: &GluedField) -> Result<GluedField> {
    let g = *field.grid().ok_or_else(|| Error::DomainError("field has no grid".into()))?;
    let cg = CrGrid::new(g, field.dim())?;
    Ok(GluedField::on_grid(
        field.kind(),
        *field.param(),
        g,
        vec![0.0; field.dim()],
        OffsetProfile::Flat,
        mollify_raw(&cg, &field.values()),
        *field.cutoff(),
    ))
}

impl ScPlusPerturbation {
    pub fn new(forcing: &GluedField, strength: f64) -> Result<Self> {
        let g = *forcing.grid().ok_or_else(|| Error::DomainError("forcing has no grid".into()))?;
        let cg = CrGrid::new(g, forcing.dim())?;
        Ok(ScPlusPerturbation {
            smoothed_forcing: mollify_raw(&cg, &forcing.values()),
            strength,
            grid: g,
        })
    }

    pub fn strength(&self) -> f64 {
        self.strength
    }

    fn eval(&self, cg: &CrGrid, w: &[f64]) -> Vec<f64> {
        let mut out = self.smoothed_forcing.clone();
        if self.strength != 0.0 {
            for (o, m) in out.iter_mut().zip(mollify_raw(cg, w)) {
                *o += self.strength * m;
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub perturbation: Option<ScPlusPerturbation>,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            tol: DEFAULT_NEWTON_TOL,
            max_iter: DEFAULT_NEWTON_MAX_ITER,
            perturbation: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewtonReport {
    pub iterations: usize,
    /// `max |F|` of the discrete system, starting with the initial guess.
    pub residuals: Vec<f64>,
    pub step_lengths: Vec<f64>,
    /// `log(e_{k+1}/e_k) / log(e_k/e_{k−1})` over residuals above rounding level.
    pub order_estimates: Vec<f64>,
    /// The last order estimate, if any triple of residuals qualified.
    pub order: Option<f64>,
    /// Kernel dimension of the constrained linearization at the solution.
    pub kernel_dim: usize,
    /// Kernel dimension without the point constraints.
    pub free_kernel_dim: usize,
    /// `σ_max / σ_min` of the constrained linearization at the solution.
    pub condition: f64,
    pub unknowns: usize,
    pub equations: usize,
}

#[derive(Debug, Clone)]
pub struct CrSolution {
    pub field: GluedField,
    pub report: NewtonReport,
}

fn signed(bin: usize, n: usize) -> i64 {
    if bin < n / 2 || n % 2 == 1 && bin <= n / 2 {
        bin as i64
    } else {
        bin as i64 - n as i64
    }
}

/// Complex modes of `x + i y` on slice `i` of the pair `c`.
fn slice_modes(cg: &CrGrid, values: &[f64], pair: usize, i: usize) -> Vec<Complex64> {
    let n_t = cg.grid.n_t;
    let x0 = cg.index(2 * pair, i, 0);
    let y0 = cg.index(2 * pair + 1, i, 0);
    let cx = cg.spectral().coefficients(&values[x0..x0 + n_t]);
    let cy = cg.spectral().coefficients(&values[y0..y0 + n_t]);
    cx.iter().zip(&cy).map(|(a, b)| a + Complex64::i() * b).collect()
}

struct System<'a> {
    cg: CrGrid,
    target: &'a AlmostComplexTarget,
    constraints: &'a [PointConstraint],
    perturbation: Option<&'a ScPlusPerturbation>,
    /// Held modes at `s = 0` (`k < 0`) and `s = R` (`k > 0`) per pair.
    held_start: Vec<Vec<Complex64>>,
    held_end: Vec<Vec<Complex64>>,
}

impl<'a> System<'a> {
    fn pairs(&self) -> usize {
        self.cg.dim / 2
    }

    fn bins(&self, pred: impl Fn(i64) -> bool) -> Vec<usize> {
        let n = self.cg.grid.n_t;
        (0..n).filter(|&b| pred(signed(b, n))).collect()
    }

    fn equations(&self) -> usize {
        self.cg.len() - self.cg.dim + self.cg.dim * self.constraints.len()
    }

    /// Stack section values `r` and field values `w` into the system vector.
    /// With `affine` the held data and constraint values are subtracted.
    fn stack(&self, r: &[f64], w: &[f64], affine: bool) -> Vec<f64> {
        let g = self.cg.grid;
        let mut out = Vec::with_capacity(self.equations());
        for comp in 0..self.cg.dim {
            for i in 1..g.n_s - 1 {
                let k = self.cg.index(comp, i, 0);
                out.extend_from_slice(&r[k..k + g.n_t]);
            }
        }
        let start_eq = self.bins(|k| k >= 0);
        let end_eq = self.bins(|k| k < 0);
        let start_held = self.bins(|k| k < 0);
        let end_held = self.bins(|k| k > 0);
        for pair in 0..self.pairs() {
            let m = slice_modes(&self.cg, r, pair, 0);
            for &b in &start_eq {
                out.extend([m[b].re, m[b].im]);
            }
            let m = slice_modes(&self.cg, r, pair, g.n_s - 1);
            for &b in &end_eq {
                out.extend([m[b].re, m[b].im]);
            }
            let m = slice_modes(&self.cg, w, pair, 0);
            for (q, &b) in start_held.iter().enumerate() {
                let v = if affine { m[b] - self.held_start[pair][q] } else { m[b] };
                out.extend([v.re, v.im]);
            }
            let m = slice_modes(&self.cg, w, pair, g.n_s - 1);
            for (q, &b) in end_held.iter().enumerate() {
                let v = if affine { m[b] - self.held_end[pair][q] } else { m[b] };
                out.extend([v.re, v.im]);
            }
        }
        for pc in self.constraints {
            for comp in 0..self.cg.dim {
                let v = w[self.cg.index(comp, pc.s_index, pc.t_index)];
                out.push(if affine { v - pc.value[comp] } else { v });
            }
        }
        debug_assert_eq!(out.len(), self.equations());
        out
    }

    fn residual(&self, w: &[f64]) -> Result<Vec<f64>> {
        let mut r = self.cg.dbar(w, self.target)?;
        if let Some(p) = self.perturbation {
            for (x, s) in r.iter_mut().zip(p.eval(&self.cg, w)) {
                *x -= s;
            }
        }
        Ok(self.stack(&r, w, true))
    }

    fn jacobian(&self, w: &[f64]) -> Result<DMatrix<f64>> {
        let n = self.cg.len();
        let wt = self.cg.d_t(w);
        let mut jac = DMatrix::zeros(self.equations(), n);
        let mut e = vec![0.0; n];
        for q in 0..n {
            e[q] = 1.0;
            let mut r = self.cg.dbar_linear(w, &wt, &e, self.target)?;
            if let Some(p) = self.perturbation {
                if p.strength != 0.0 {
                    for (x, m) in r.iter_mut().zip(mollify_raw(&self.cg, &e)) {
                        *x -= p.strength * m;
                    }
                }
            }
            jac.set_column(q, &DVector::from_vec(self.stack(&r, &e, false)));
            e[q] = 0.0;
        }
        Ok(jac)
    }
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

fn kernel_and_condition(jac: &DMatrix<f64>) -> (usize, f64) {
    let sv = jac.clone().svd(false, false).singular_values;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let rank = sv.iter().filter(|s| **s > KERNEL_TAU * smax).count();
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    let kernel = jac.ncols().saturating_sub(rank);
    (kernel, if smin > 0.0 { smax / smin } else { f64::INFINITY })
}

/// Solve `∂̄_J w = 0` near `initial` with the default options.
pub fn cr_newton_solve(
    initial: &GluedField,
    target: &AlmostComplexTarget,
    constraints: &[PointConstraint],
    tol: f64,
) -> Result<CrSolution> {
    cr_newton_solve_with(
        initial,
        target,
        constraints,
        &NewtonOptions {
            tol,
            ..NewtonOptions::default()
        },
    )
}

pub fn cr_newton_solve_with(
    initial: &GluedField,
    target: &AlmostComplexTarget,
    constraints: &[PointConstraint],
    options: &NewtonOptions,
) -> Result<CrSolution> {
    let g = *initial
        .grid()
        .ok_or_else(|| Error::DomainError("Newton solving needs a gridded field".into()))?;
    let dim = initial.dim();
    if dim != target.real_dim() || !dim.is_multiple_of(2) {
        return Err(Error::GridMismatch(format!(
            "field dimension {dim} does not match the target dimension {}",
            target.real_dim()
        )));
    }
    if !target.has_derivative() {
        return Err(Error::DerivativeMissing(target.name()));
    }
    for pc in constraints {
        if pc.s_index >= g.n_s || pc.t_index >= g.n_t || pc.value.len() != dim {
            return Err(Error::DomainError(format!(
                "constraint at ({}, {}) with {} values does not fit the field",
                pc.s_index,
                pc.t_index,
                pc.value.len()
            )));
        }
    }
    if let Some(p) = &options.perturbation {
        if p.grid != g || p.smoothed_forcing.len() != dim * g.len() {
            return Err(Error::GridMismatch("perturbation lives on a different grid".into()));
        }
    }
    let cg = CrGrid::new(g, dim)?;
    let w0 = initial.values();
    let pairs = dim / 2;
    let n_t = g.n_t;
    let held = |i: usize, pred: &dyn Fn(i64) -> bool| -> Vec<Vec<Complex64>> {
        (0..pairs)
            .map(|pair| {
                let m = slice_modes(&cg, &w0, pair, i);
                (0..n_t).filter(|&b| pred(signed(b, n_t))).map(|b| m[b]).collect()
            })
            .collect()
    };
    let held_start = held(0, &|k| k < 0);
    let held_end = held(g.n_s - 1, &|k| k > 0);
    let sys = System {
        cg: cg.clone(),
        target,
        constraints,
        perturbation: options.perturbation.as_ref(),
        held_start,
        held_end,
    };
    let unknowns = cg.len();
    let equations = sys.equations();
    if equations < unknowns {
        return Err(Error::IllConditioned(format!(
            "a kernel of dimension {} is not pinned; add point constraints",
            unknowns - equations
        )));
    }

    let mut w = w0;
    let mut f = sys.residual(&w)?;
    let mut residuals = vec![sup(&f)];
    let mut steps = Vec::new();
    let mut iterations = 0;
    while residuals[iterations] >= options.tol {
        if iterations == options.max_iter {
            return Err(Error::NewtonDiverged(format!(
                "residual {:.3e} after {} iterations",
                residuals[iterations], iterations
            )));
        }
        let jac = sys.jacobian(&w)?;
        if iterations == 0 {
            let (kernel, cond) = kernel_and_condition(&jac);
            if kernel > 0 || cond > 1.0 / CONDITION_FLOOR {
                return Err(Error::IllConditioned(format!(
                    "constrained linearization has kernel {kernel} and condition {cond:.3e}"
                )));
            }
        }
        let rhs = -DVector::from_vec(f.clone());
        let step = if jac.is_square() {
            jac.lu().solve(&rhs)
        } else {
            jac.svd(true, true).solve(&rhs, 0.0).ok()
        }
        .ok_or_else(|| Error::IllConditioned("linearization is singular".into()))?;
        let current = residuals[iterations];
        let mut lambda = 1.0;
        loop {
            let trial: Vec<f64> = w.iter().zip(step.iter()).map(|(x, d)| x + lambda * d).collect();
            let ft = sys.residual(&trial)?;
            let e = sup(&ft);
            if !e.is_finite() {
                return Err(Error::NewtonDiverged("non-finite residual".into()));
            }
            if e < (1.0 - 1e-4 * lambda) * current || e < options.tol {
                w = trial;
                f = ft;
                residuals.push(e);
                steps.push(lambda);
                break;
            }
            lambda *= 0.5;
            if lambda < MIN_STEP {
                return Err(Error::NewtonDiverged(format!(
                    "no descent from residual {current:.3e} at iteration {}",
                    iterations + 1
                )));
            }
        }
        iterations += 1;
    }

    let jac = sys.jacobian(&w)?;
    let (kernel_dim, condition) = kernel_and_condition(&jac);
    let free_rows = equations - dim * constraints.len();
    let free = jac.rows(0, free_rows).into_owned();
    let (free_kernel_dim, _) = kernel_and_condition(&free);
    let order_estimates: Vec<f64> = residuals
        .windows(3)
        .filter(|e| e.iter().all(|x| *x > ORDER_FLOOR))
        .map(|e| (e[2] / e[1]).ln() / (e[1] / e[0]).ln())
        .collect();
    let field = GluedField::on_grid(
        initial.kind(),
        *initial.param(),
        g,
        vec![0.0; dim],
        OffsetProfile::Flat,
        w,
        *initial.cutoff(),
    );
    Ok(CrSolution {
        field,
        report: NewtonReport {
            iterations,
            order: order_estimates.last().copied(),
            order_estimates,
            residuals,
            step_lengths: steps,
            kernel_dim,
            free_kernel_dim,
            condition,
            unknowns,
            equations,
        },
    })
}

/// A holomorphic field, the same field plus a bump, and a constraint pinning
/// the asymptotic constant.
#[derive(Debug, Clone)]
pub struct PerturbedSuite {
    pub exact: GluedField,
    pub initial: GluedField,
    pub constraints: Vec<PointConstraint>,
}

/// `w* = c + A e^{−2π(s+it)}` on `[0, R(r)]` with `n_s × n_t` samples, and
/// `w* + ε·bump(s)·(cos 2πt, sin 2πt)` centred in the neck.
pub fn perturbed_holomorphic(r: f64, n_s: usize, n_t: usize, amplitude: f64, epsilon: f64) -> Result<PerturbedSuite> {
    let a = GluingParameter::exponential(r, 0.0)?;
    if n_s < 3 {
        return Err(Error::InvalidGrid("need at least three s samples".into()));
    }
    let grid = FieldGrid {
        s_start: 0.0,
        h_s: a.neck / (n_s - 1) as f64,
        n_s,
        n_t,
    };
    let c = [0.1, -0.05];
    let exact = holomorphic_mode(a, grid, c, amplitude, 1)?;
    let half = 0.5 * a.neck;
    let initial = GluedField::from_fn(a, grid, 2, |comp, s, t| {
        let angle = 2.0 * std::f64::consts::PI * t;
        let b = epsilon * bump((s - half) / (0.4 * a.neck));
        let m = amplitude * (-2.0 * std::f64::consts::PI * s).exp();
        let w = c[comp] + if comp == 0 { m * angle.cos() } else { -m * angle.sin() };
        w + b * if comp == 0 { angle.cos() } else { angle.sin() }
    })?;
    let constraints = vec![PointConstraint::at_node(&exact, n_s / 2, 0)?];
    Ok(PerturbedSuite {
        exact,
        initial,
        constraints,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cr_fredholm::section::field_level_norm;

    fn suite() -> PerturbedSuite {
        perturbed_holomorphic(0.49, 41, 8, 0.2, 1e-2).unwrap()
    }

    #[test]
    fn system_is_square_with_one_constraint() {
        let s = suite();
        let t = AlmostComplexTarget::standard(1).unwrap();
        let sol = cr_newton_solve(&s.initial, &t, &s.constraints, 1e-9).unwrap();
        assert_eq!(sol.report.unknowns, sol.report.equations);
        assert_eq!(sol.report.kernel_dim, 0);
        assert_eq!(sol.report.free_kernel_dim, 2);
    }

    #[test]
    fn holomorphic_start_returns_unchanged() {
        let s = suite();
        let t = AlmostComplexTarget::standard(1).unwrap();
        let first = cr_newton_solve(&s.initial, &t, &s.constraints, 1e-11).unwrap();
        let again = cr_newton_solve(&first.field, &t, &s.constraints, 1e-9).unwrap();
        assert_eq!(again.report.iterations, 0);
        assert_eq!(again.field.values(), first.field.values());
    }

    #[test]
    fn constant_structure_converges_to_holomorphic() {
        let s = suite();
        let t = AlmostComplexTarget::standard(1).unwrap();
        let sol = cr_newton_solve(&s.initial, &t, &s.constraints, 1e-9).unwrap();
        assert!(sol.report.iterations <= 2, "{:?}", sol.report);
        assert!(*sol.report.residuals.last().unwrap() < 1e-9);
        // the bump is removed up to discretization error of the neck grid
        let diff: f64 = sol
            .field
            .values()
            .iter()
            .zip(s.exact.values())
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()));
        assert!(diff < 1e-4, "{diff:e}");
    }

    #[test]
    fn twisted_structure_converges_quadratically() {
        let s = suite();
        let t = AlmostComplexTarget::twisted(0.3).unwrap();
        let sol = cr_newton_solve(&s.initial, &t, &s.constraints, 1e-11).unwrap();
        let order = sol.report.order.expect("order estimate");
        assert!(order >= 1.8, "{:?}", sol.report);
    }

    #[test]
    fn unpinned_kernel_is_rejected() {
        let s = suite();
        let t = AlmostComplexTarget::standard(1).unwrap();
        assert!(matches!(
            cr_newton_solve(&s.initial, &t, &[], 1e-9),
            Err(Error::IllConditioned(_))
        ));
    }

    #[test]
    fn smoothed_forcing_is_solved() {
        let s = suite();
        let t = AlmostComplexTarget::standard(1).unwrap();
        let g = *s.initial.grid().unwrap();
        // a forcing with a kink in t; the mollifier smooths it by one level
        let forcing = GluedField::from_fn(*s.initial.param(), g, 2, |c, sv, tt| {
            0.05 * ((tt - 0.5).abs() - 0.25) * (1.0 + c as f64) * (-sv).exp()
        })
        .unwrap();
        let options = NewtonOptions {
            perturbation: Some(ScPlusPerturbation::new(&forcing, 0.2).unwrap()),
            ..NewtonOptions::default()
        };
        let sol = cr_newton_solve_with(&s.initial, &t, &s.constraints, &options).unwrap();
        assert!(*sol.report.residuals.last().unwrap() < 1e-9);
        let n3 = field_level_norm(&sol.field, 3).unwrap();
        assert!(n3.is_finite() && n3 > 0.0);
    }

    #[test]
    fn mollifier_damps_high_modes() {
        let s = suite();
        let g = *s.initial.grid().unwrap();
        let f = GluedField::from_fn(*s.initial.param(), g, 2, |_, _, t| (6.0 * std::f64::consts::PI * t).cos()).unwrap();
        let m = mollify(&f).unwrap();
        let w = 6.0 * std::f64::consts::PI;
        assert!((m.value(0, 3, 0) - 1.0 / (1.0 + w * w).sqrt()).abs() < 1e-12);
    }
}

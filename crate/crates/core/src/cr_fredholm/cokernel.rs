//! Numerical cokernel of `∂̄` on vector fields of the sphere with `M` marked
//! points.
//!
//! The sphere minus two marked points is the cylinder `ℝ × S¹`. Vector fields
//! vanishing at the two punctures become functions tending to constants at
//! both ends, so the domain is `{c₋(1 − β) + c₊β + r}` with `r` decaying like
//! `e^{−δ|s|}`, and the target is `e^{−δ|s|}`-decaying. The remaining `M − 2`
//! marked points are pointwise zeros. Per Fourier mode `k` the operator is
//! `½(∂_s − 2πk)`, discretized by the box scheme on `[−S, S]`; the mode that
//! grows towards an end vanishes there.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::combinatorics::{deformation_dimension, SurfaceCombinatorics};
use crate::error::{Error, Result};
use crate::gluing::CutoffBeta;
use crate::numerics::numerical_rank;

pub const COKERNEL_RANK_TAU: f64 = 1e-8;
pub const MAX_MARKED: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CokernelSetup {
    pub half_length: f64,
    pub intervals: usize,
    pub modes: usize,
    /// Exponential weight, inside `(0, 2π)`.
    pub delta: f64,
}

impl Default for CokernelSetup {
    fn default() -> Self {
        CokernelSetup {
            half_length: 3.0,
            intervals: 48,
            modes: 8,
            delta: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CokernelReport {
    pub marked: usize,
    /// Complex dimensions of the constrained discrete operator.
    pub rows: usize,
    pub cols: usize,
    pub rank: usize,
    pub kernel_dim: usize,
    pub cokernel_dim: usize,
    /// `3g_a + M − D − 3` for the sphere, when stable.
    pub formula: Option<i64>,
    /// Smallest singular value counted in the rank, relative to the largest.
    pub smallest_relative_singular: f64,
    pub marked_points: Vec<(f64, f64)>,
}

fn signed(bin: usize, n: usize) -> i64 {
    if bin < n / 2 || n % 2 == 1 && bin <= n / 2 {
        bin as i64
    } else {
        bin as i64 - n as i64
    }
}

/// Column layout: for each mode the free node values, then `c₋, c₊`.
struct Layout {
    n: usize,
    modes: usize,
    first: Vec<usize>,
    nodes: Vec<Vec<usize>>,
    c_minus: usize,
}

impl Layout {
    fn new(n: usize, modes: usize) -> Self {
        let mut first = Vec::with_capacity(modes);
        let mut nodes = Vec::with_capacity(modes);
        let mut col = 0;
        for b in 0..modes {
            let k = signed(b, modes);
            let free: Vec<usize> = match k {
                k if k > 0 => (0..n).collect(),
                k if k < 0 => (1..=n).collect(),
                _ => (1..n).collect(),
            };
            first.push(col);
            col += free.len();
            nodes.push(free);
        }
        Layout {
            n,
            modes,
            first,
            nodes,
            c_minus: col,
        }
    }

    fn cols(&self) -> usize {
        self.c_minus + 2
    }

    fn rows(&self) -> usize {
        self.modes * self.n
    }

    fn column(&self, bin: usize, node: usize) -> Option<usize> {
        self.nodes[bin]
            .iter()
            .position(|&j| j == node)
            .map(|p| self.first[bin] + p)
    }
}

/// Node value `v^k_j` of mode `bin` as a combination of columns.
fn node_value(layout: &Layout, setup: &CokernelSetup, beta: &CutoffBeta, bin: usize, j: usize) -> Vec<(usize, f64)> {
    let s = -setup.half_length + j as f64 * 2.0 * setup.half_length / layout.n as f64;
    let weight = (-setup.delta * s.abs()).exp();
    let mut terms = Vec::with_capacity(3);
    if let Some(c) = layout.column(bin, j) {
        terms.push((c, weight));
    }
    if signed(bin, layout.modes) == 0 {
        let b = 1.0 - beta.eval(s);
        terms.push((layout.c_minus, 1.0 - b));
        terms.push((layout.c_minus + 1, b));
    }
    terms
}

fn operator(layout: &Layout, setup: &CokernelSetup) -> DMatrix<Complex64> {
    let beta = CutoffBeta::new();
    let h = 2.0 * setup.half_length / layout.n as f64;
    let mut a = DMatrix::zeros(layout.rows(), layout.cols());
    for bin in 0..layout.modes {
        let k = signed(bin, layout.modes) as f64;
        for j in 0..layout.n {
            let row = bin * layout.n + j;
            let s_mid = -setup.half_length + (j as f64 + 0.5) * h;
            let rho = (setup.delta * s_mid.abs()).exp();
            for (node, coeff) in [(j, -1.0 / h - PI * k), (j + 1, 1.0 / h - PI * k)] {
                for (c, v) in node_value(layout, setup, &beta, bin, node) {
                    a[(row, c)] += Complex64::new(0.5 * rho * coeff * v, 0.0);
                }
            }
        }
    }
    a
}

/// Interior marked points `(s, t)` on nodes, spread along the cylinder.
fn marked_points(marked: usize, setup: &CokernelSetup) -> Vec<(usize, f64)> {
    let inner = marked - 2;
    (0..inner)
        .map(|p| {
            let j = setup.intervals * (p + 1) / (inner + 1);
            let t = (0.2 + 0.37 * p as f64).fract();
            (j, t)
        })
        .collect()
}

pub(crate) fn cokernel_with(marked: usize, setup: &CokernelSetup) -> Result<CokernelReport> {
    if marked < 2 {
        return Err(Error::DomainError("the two punctures are marked points, so M >= 2".into()));
    }
    if !(setup.delta > 0.0 && setup.delta < 2.0 * PI) {
        return Err(Error::DomainError(format!("weight {} outside (0, 2π)", setup.delta)));
    }
    if setup.intervals < 2 * marked || setup.modes < 2 {
        return Err(Error::InvalidGrid("too few intervals or modes for the marked points".into()));
    }
    let layout = Layout::new(setup.intervals, setup.modes);
    let a = operator(&layout, setup);
    let beta = CutoffBeta::new();
    let points = marked_points(marked, setup);
    // eliminate the k = 0 interior value at each marked node
    let zero_bin = (0..layout.modes).find(|&b| signed(b, layout.modes) == 0).expect("mode 0");
    let mut eliminated = Vec::with_capacity(points.len());
    let mut rows_of = Vec::with_capacity(points.len());
    for &(j, t) in &points {
        let pivot_col = layout.column(zero_bin, j).expect("interior node");
        let mut combo = vec![Complex64::new(0.0, 0.0); layout.cols()];
        for bin in 0..layout.modes {
            let phase = Complex64::from_polar(1.0, 2.0 * PI * signed(bin, layout.modes) as f64 * t);
            for (c, v) in node_value(&layout, setup, &beta, bin, j) {
                combo[c] += phase * v;
            }
        }
        eliminated.push(pivot_col);
        rows_of.push(combo);
    }
    let kept: Vec<usize> = (0..layout.cols()).filter(|c| !eliminated.contains(c)).collect();
    // basis of the constraint kernel: x_pivot = −(Σ others)/coefficient
    let mut basis = DMatrix::zeros(layout.cols(), kept.len());
    for (q, &c) in kept.iter().enumerate() {
        basis[(c, q)] = Complex64::new(1.0, 0.0);
        for (p, &pivot) in eliminated.iter().enumerate() {
            basis[(pivot, q)] = -rows_of[p][c] / rows_of[p][pivot];
        }
    }
    let constrained = &a * basis;
    let sv = constrained.clone().svd(false, false).singular_values;
    let rank = numerical_rank(sv.as_slice(), COKERNEL_RANK_TAU)?;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let smallest = sv
        .iter()
        .cloned()
        .filter(|s| *s > COKERNEL_RANK_TAU * smax)
        .fold(f64::INFINITY, f64::min)
        / smax;
    let (rows, cols) = constrained.shape();
    let formula = deformation_dimension(&SurfaceCombinatorics::smooth(0, marked as u32)).ok();
    let h = 2.0 * setup.half_length / setup.intervals as f64;
    Ok(CokernelReport {
        marked,
        rows,
        cols,
        rank,
        kernel_dim: cols - rank,
        cokernel_dim: rows - rank,
        formula,
        smallest_relative_singular: smallest,
        marked_points: points
            .iter()
            .map(|&(j, t)| (-setup.half_length + j as f64 * h, t))
            .collect(),
    })
}

/// Full report for `3 ≤ M ≤ 6` with the default discretization.
pub fn dbar_cokernel_report(marked: usize) -> Result<CokernelReport> {
    if !(3..=MAX_MARKED).contains(&marked) {
        return Err(Error::DomainError(format!("M = {marked} outside 3..={MAX_MARKED}")));
    }
    cokernel_with(marked, &CokernelSetup::default())
}

/// Complex cokernel dimension of the constrained `∂̄`.
pub fn dbar_cokernel_experiment(marked: usize) -> Result<usize> {
    Ok(dbar_cokernel_report(marked)?.cokernel_dim)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cokernel_matches_formula() {
        for m in 3..=6 {
            let rep = dbar_cokernel_report(m).unwrap();
            assert_eq!(rep.kernel_dim, 0, "{rep:?}");
            assert_eq!(rep.cokernel_dim as i64, rep.formula.unwrap(), "{rep:?}");
            assert_eq!(rep.cokernel_dim, m - 3);
        }
    }

    #[test]
    fn two_punctures_leave_the_constants() {
        let rep = cokernel_with(2, &CokernelSetup::default()).unwrap();
        assert_eq!(rep.kernel_dim, 1);
        assert_eq!(rep.cokernel_dim, 0);
        assert_eq!(rep.formula, None);
    }

    #[test]
    fn independent_of_discretization() {
        for setup in [
            CokernelSetup {
                half_length: 4.0,
                intervals: 64,
                modes: 6,
                delta: 2.5,
            },
            CokernelSetup {
                half_length: 2.0,
                intervals: 40,
                modes: 10,
                delta: 0.5,
            },
        ] {
            for m in 3..=5 {
                assert_eq!(cokernel_with(m, &setup).unwrap().cokernel_dim, m - 3);
            }
        }
    }

    #[test]
    fn out_of_range() {
        assert!(dbar_cokernel_experiment(2).is_err());
        assert!(dbar_cokernel_experiment(7).is_err());
        let bad = CokernelSetup {
            delta: 7.0,
            ..CokernelSetup::default()
        };
        assert!(cokernel_with(3, &bad).is_err());
    }
}

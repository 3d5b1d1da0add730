//! Finite-difference and interpolation stencils on uniform grids.
//!
//! All weights come from Fornberg's recursion, so the same code produces
//! Lagrange interpolation weights (derivative order 0) and first/second
//! derivative weights on arbitrary, possibly one-sided, stencils.

/// Weights `w[d][j]` such that `f^(d)(z) ≈ Σ_j w[d][j] f(nodes[j])` for `d ≤ max_deriv`.
pub fn fornberg(z: f64, nodes: &[f64], max_deriv: usize) -> Vec<Vec<f64>> {
    let n = nodes.len();
    let m = max_deriv;
    let mut c = vec![vec![0.0; n]; m + 1];
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - z;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// First-derivative operator along a uniform line of `n` samples with spacing `h`.
///
/// Interior rows use the centered stencil of the requested (even) accuracy
/// order; rows near the ends use a stencil of the same width shifted inward.
#[derive(Debug, Clone)]
pub struct DiffOperator {
    n: usize,
    width: usize,
    starts: Vec<usize>,
    weights: Vec<f64>,
}

impl DiffOperator {
    pub fn new(n: usize, h: f64, order: usize) -> Self {
        assert!(order >= 2 && order.is_multiple_of(2), "accuracy order must be even");
        let width = (order + 1).min(n);
        let half = order / 2;
        let mut starts = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n * width);
        for i in 0..n {
            let start = i.saturating_sub(half).min(n - width);
            let nodes: Vec<f64> = (start..start + width).map(|j| j as f64).collect();
            let w = fornberg(i as f64, &nodes, 1);
            starts.push(start);
            weights.extend(w[1].iter().map(|x| x / h));
        }
        DiffOperator {
            n,
            width,
            starts,
            weights,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Apply to a strided line: `input[offset + k*stride]` for `k < n`.
    pub fn apply_strided(
        &self,
        input: &[f64],
        output: &mut [f64],
        offset: usize,
        stride: usize,
    ) {
        for i in 0..self.n {
            let start = self.starts[i];
            let w = &self.weights[i * self.width..(i + 1) * self.width];
            let mut acc = 0.0;
            for (k, wk) in w.iter().enumerate() {
                acc += wk * input[offset + (start + k) * stride];
            }
            output[offset + i * stride] = acc;
        }
    }

    pub fn apply(&self, input: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.apply_strided(input, &mut out, 0, 1);
        out
    }

    /// Row `i` as (first column, weights).
    pub fn row(&self, i: usize) -> (usize, &[f64]) {
        (
            self.starts[i],
            &self.weights[i * self.width..(i + 1) * self.width],
        )
    }
}

/// Points used by the quintic (six-point) Lagrange interpolant.
pub const INTERP_POINTS: usize = 6;

/// Stencil for evaluating a uniformly sampled function at an arbitrary point.
#[derive(Debug, Clone)]
pub struct InterpStencil {
    pub start: usize,
    pub weights: Vec<f64>,
    /// Weights for the first derivative at the same point (scaled by 1/h).
    pub d_weights: Vec<f64>,
}

/// Six-point Lagrange stencil for abscissa `x` on the grid `x0 + k*h`, `k < n`.
/// The stencil is clamped to the grid, so points near the ends use one-sided
/// interpolation; `x` outside the grid extrapolates.
pub fn interp_stencil(x: f64, x0: f64, h: f64, n: usize) -> InterpStencil {
    let width = INTERP_POINTS.min(n);
    let pos = (x - x0) / h;
    let base = pos.floor() as i64 - (width as i64 / 2 - 1);
    let start = base.clamp(0, (n - width) as i64) as usize;
    let nodes: Vec<f64> = (start..start + width).map(|j| j as f64).collect();
    let w = fornberg(pos, &nodes, 1);
    InterpStencil {
        start,
        weights: w[0].clone(),
        d_weights: w[1].iter().map(|v| v / h).collect(),
    }
}

impl InterpStencil {
    pub fn eval(&self, line: &[f64]) -> f64 {
        self.weights
            .iter()
            .enumerate()
            .map(|(k, w)| w * line[self.start + k])
            .sum()
    }

    pub fn eval_strided(&self, data: &[f64], offset: usize, stride: usize) -> f64 {
        self.weights
            .iter()
            .enumerate()
            .map(|(k, w)| w * data[offset + (self.start + k) * stride])
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centered_fourth_order_weights() {
        let w = fornberg(0.0, &[-2.0, -1.0, 0.0, 1.0, 2.0], 1);
        let expected = [1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0];
        for (a, b) in w[1].iter().zip(expected) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn diff_operator_exact_on_quartics() {
        let h = 0.1;
        let n = 20;
        let f: Vec<f64> = (0..n).map(|i| (i as f64 * h).powi(4) - 2.0 * i as f64 * h).collect();
        let d = DiffOperator::new(n, h, 4).apply(&f);
        for (i, di) in d.iter().enumerate() {
            let x = i as f64 * h;
            assert!((di - (4.0 * x.powi(3) - 2.0)).abs() < 1e-10, "row {i}");
        }
    }

    #[test]
    fn interpolation_reproduces_quintics() {
        let h = 0.25;
        let n = 12;
        let p = |x: f64| 1.0 + x - 0.5 * x.powi(3) + 0.1 * x.powi(5);
        let f: Vec<f64> = (0..n).map(|i| p(i as f64 * h)).collect();
        for x in [0.0, 0.13, 1.37, 2.74, 2.75] {
            let st = interp_stencil(x, 0.0, h, n);
            assert!((st.eval(&f) - p(x)).abs() < 1e-11, "x = {x}");
        }
    }
}

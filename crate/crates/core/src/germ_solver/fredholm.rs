//! Linear sc-Fredholm operators given by a level-0 matrix and splitting data.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::numerical_rank;

/// Relative singular-value threshold for linear index checks.
pub const SVD_RANK_TAU: f64 = 1e-8;

/// `T: ℝ^cols → ℝ^rows` with a kernel basis `K` and a cokernel complement `C`.
#[derive(Debug, Clone)]
pub struct LinearScFredholm {
    pub matrix: DMatrix<f64>,
    pub kernel: Vec<DVector<f64>>,
    pub cokernel: Vec<DVector<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FredholmIndexReport {
    pub rows: usize,
    pub cols: usize,
    pub dim_kernel: usize,
    pub dim_cokernel: usize,
    pub index: i64,
    pub numerical_kernel: usize,
    pub numerical_cokernel: usize,
    /// `σ_max / σ_min` of `T` restricted to the complement of `K`.
    pub complement_condition: f64,
}

fn rank(m: &DMatrix<f64>) -> Result<usize> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(0);
    }
    let sv = m.clone().svd(false, false).singular_values;
    numerical_rank(sv.as_slice(), SVD_RANK_TAU)
}

fn columns(vs: &[DVector<f64>], n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, vs.len());
    for (j, v) in vs.iter().enumerate() {
        m.set_column(j, v);
    }
    m
}

impl LinearScFredholm {
    pub fn new(matrix: DMatrix<f64>, kernel: Vec<DVector<f64>>, cokernel: Vec<DVector<f64>>) -> Result<Self> {
        if kernel.iter().any(|k| k.len() != matrix.ncols()) || cokernel.iter().any(|c| c.len() != matrix.nrows()) {
            return Err(Error::SplittingInvalid("splitting vectors have the wrong length".into()));
        }
        Ok(LinearScFredholm { matrix, kernel, cokernel })
    }

    /// `T = A·Qᵀ: ℝ^n → ℝ^{n−k}` where `Q` is an orthonormal basis of the
    /// complement of `k` smooth cosine modes and `A` is a well-conditioned
    /// random invertible matrix.
    pub fn projection_removal(n: usize, k: usize, seed: u64) -> Result<Self> {
        if k >= n {
            return Err(Error::DomainError(format!("cannot remove {k} modes from R^{n}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let modes: Vec<DVector<f64>> = (0..k)
            .map(|j| {
                DVector::from_fn(n, |i, _| (std::f64::consts::PI * (j + 1) as f64 * (i as f64 + 0.5) / n as f64).cos())
            })
            .collect();
        let mut basis = columns(&modes, n);
        // complete to an orthonormal basis of ℝ^n
        let mut full = DMatrix::zeros(n, n);
        full.view_mut((0, 0), (n, k)).copy_from(&basis);
        for j in k..n {
            full.set_column(j, &DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0)));
        }
        let q = full.qr().q();
        basis = q.columns(k, n - k).into_owned();
        let mut a = DMatrix::<f64>::identity(n - k, n - k);
        let scale = 0.3 / ((n - k) as f64).sqrt();
        for v in a.iter_mut() {
            *v += scale * rng.gen_range(-1.0..1.0);
        }
        let matrix = a * basis.transpose();
        let kernel = modes.into_iter().map(|m| m.normalize()).collect();
        LinearScFredholm::new(matrix, kernel, Vec::new())
    }

    /// `∂_s` on `ℝ^N ⊕ {r : r(S) = 0}` over `points` samples of `[0, S]`,
    /// where the first `N` coordinates are the asymptotic constants. The
    /// target holds the midpoint difference quotients of each component.
    pub fn asymptotic_derivative(dim: usize, points: usize, length: f64) -> Result<Self> {
        if points < 3 || dim == 0 || !(length > 0.0) {
            return Err(Error::InvalidGrid("need dim >= 1, at least 3 points and a positive length".into()));
        }
        let h = length / (points - 1) as f64;
        let free = points - 1;
        let cols = dim * (1 + free);
        let rows = dim * free;
        let mut m = DMatrix::zeros(rows, cols);
        for c in 0..dim {
            let col0 = dim + c * free;
            for i in 0..free {
                let row = c * free + i;
                m[(row, col0 + i)] = -1.0 / h;
                if i + 1 < free {
                    m[(row, col0 + i + 1)] = 1.0 / h;
                }
            }
        }
        let kernel = (0..dim).map(|c| DVector::from_fn(cols, |i, _| if i == c { 1.0 } else { 0.0 })).collect();
        LinearScFredholm::new(m, kernel, Vec::new())
    }

    /// `S·T·R` for invertible `S`, `R`, with the splitting transported.
    pub fn conjugated(&self, left: &DMatrix<f64>, right: &DMatrix<f64>) -> Result<Self> {
        let right_inv = right
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::SplittingInvalid("right factor is singular".into()))?;
        LinearScFredholm::new(
            left * &self.matrix * right,
            self.kernel.iter().map(|k| &right_inv * k).collect(),
            self.cokernel.iter().map(|c| left * c).collect(),
        )
    }
}

/// `dim K − dim C`, validated against an SVD of the matrix.
pub fn fredholm_index(t: &LinearScFredholm) -> Result<FredholmIndexReport> {
    let (rows, cols) = t.matrix.shape();
    let sv = t.matrix.clone().svd(false, false).singular_values;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let r = numerical_rank(sv.as_slice(), SVD_RANK_TAU)?;
    let dk = t.kernel.len();
    let dc = t.cokernel.len();
    for (j, k) in t.kernel.iter().enumerate() {
        if (&t.matrix * k).norm() > SVD_RANK_TAU * smax.max(1.0) * k.norm() {
            return Err(Error::SplittingInvalid(format!("kernel vector {j} is not annihilated")));
        }
    }
    if rank(&columns(&t.kernel, cols))? != dk {
        return Err(Error::SplittingInvalid("kernel basis is degenerate".into()));
    }
    if r != cols - dk {
        return Err(Error::SplittingInvalid(format!(
            "operator is not injective on the complement: rank {r}, expected {}",
            cols - dk
        )));
    }
    let mut aug = DMatrix::zeros(rows, cols + dc);
    aug.view_mut((0, 0), (rows, cols)).copy_from(&t.matrix);
    for (j, c) in t.cokernel.iter().enumerate() {
        aug.set_column(cols + j, c);
    }
    if r + dc != rows || rank(&aug)? != rows {
        return Err(Error::SplittingInvalid("range and cokernel part do not split the target".into()));
    }
    let positive: Vec<f64> = sv.iter().cloned().filter(|s| *s > SVD_RANK_TAU * smax).collect();
    let smin = positive.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(FredholmIndexReport {
        rows,
        cols,
        dim_kernel: dk,
        dim_cokernel: dc,
        index: dk as i64 - dc as i64,
        numerical_kernel: cols - r,
        numerical_cokernel: rows - r,
        complement_condition: if positive.is_empty() { f64::INFINITY } else { smax / smin },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn invertible_has_index_zero() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 3.0]);
        let rep = fredholm_index(&LinearScFredholm::new(m, vec![], vec![]).unwrap()).unwrap();
        assert_eq!(rep.index, 0);
        assert_eq!(rep.numerical_kernel, 0);
    }

    #[test]
    fn projection_removal_index() {
        for k in 1..4 {
            let t = LinearScFredholm::projection_removal(24, k, 7).unwrap();
            let rep = fredholm_index(&t).unwrap();
            assert_eq!(rep.index, k as i64);
            assert_eq!(rep.numerical_kernel, k);
            assert_eq!(rep.numerical_cokernel, 0);
        }
    }

    #[test]
    fn constants_contribute_dimension() {
        for n in 1..4 {
            let t = LinearScFredholm::asymptotic_derivative(n, 40, 5.0).unwrap();
            let rep = fredholm_index(&t).unwrap();
            assert_eq!(rep.index, n as i64);
            assert_eq!(rep.numerical_kernel, n);
        }
    }

    #[test]
    fn cokernel_part_and_invalid_splittings() {
        // embedding ℝ² → ℝ³ with cokernel e_3
        let m = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let e3 = DVector::from_vec(vec![0.0, 0.0, 1.0]);
        let ok = LinearScFredholm::new(m.clone(), vec![], vec![e3]).unwrap();
        assert_eq!(fredholm_index(&ok).unwrap().index, -1);
        let bad = LinearScFredholm::new(m.clone(), vec![], vec![DVector::from_vec(vec![1.0, 0.0, 0.0])]).unwrap();
        assert!(matches!(fredholm_index(&bad), Err(Error::SplittingInvalid(_))));
        let wrong_kernel = LinearScFredholm::new(m, vec![DVector::from_vec(vec![1.0, 0.0])], vec![]).unwrap();
        assert!(matches!(fredholm_index(&wrong_kernel), Err(Error::SplittingInvalid(_))));
    }

    #[test]
    fn index_invariant_under_conjugation() {
        let t = LinearScFredholm::projection_removal(16, 2, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut left = DMatrix::<f64>::identity(14, 14);
        let mut right = DMatrix::<f64>::identity(16, 16);
        left.iter_mut().for_each(|v| *v += 0.05 * rng.gen_range(-1.0..1.0));
        right.iter_mut().for_each(|v| *v += 0.05 * rng.gen_range(-1.0..1.0));
        let c = t.conjugated(&left, &right).unwrap();
        assert_eq!(fredholm_index(&c).unwrap().index, 2);
    }
}

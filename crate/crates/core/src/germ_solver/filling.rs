//! Fillings of sections over linear retracts in finite dimensions.
//!
//! A section `f` over the retract `O = P(ℝ^n)` with values in `K = Φ(ℝ^k)`
//! is paired with a filler `f̄` defined on all of `ℝ^n`. The three filling
//! conditions are checked on samples; no filler is constructed automatically
//! beyond the standard one for `P = Φ`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type VectorMap = Arc<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;

#[derive(Clone)]
pub struct LinearFillingData {
    /// Projection `P` with `P² = P`; `r(y) = P y`.
    pub retraction: DMatrix<f64>,
    /// Fiber projection `Φ`, constant along the base.
    pub fiber: DMatrix<f64>,
    pub section: VectorMap,
    pub filler: VectorMap,
}

impl std::fmt::Debug for LinearFillingData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LinearFillingData")
            .field("retraction", &self.retraction)
            .field("fiber", &self.fiber)
            .finish_non_exhaustive()
    }
}

/// `f̄(y) = f(P y) + (y − P y)` for a section over `P(ℝ^n)` with `Φ = P`.
pub fn standard_filler(projection: DMatrix<f64>, section: VectorMap) -> LinearFillingData {
    let p = projection.clone();
    let s = section.clone();
    LinearFillingData {
        retraction: projection.clone(),
        fiber: projection,
        section,
        filler: Arc::new(move |y| {
            let py = &p * y;
            s(&py) + (y - &py)
        }),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FillingReport {
    /// `max ‖f̄(y) − f(y)‖` over samples `y ∈ O`.
    pub agreement: f64,
    /// `min ‖(I − Φ) f̄(y)‖ / ‖y − P y‖` over samples off `O`; positive means
    /// `f̄(y) = Φ f̄(y)` never happens off the retract.
    pub off_retract_separation: f64,
    /// Smallest singular value of the linearization of `y ↦ (I − Φ) f̄(y)`
    /// restricted to `ker P`, mapped into `ker Φ`.
    pub transverse_min_singular: f64,
    pub transverse_square: bool,
    pub valid: bool,
}

fn kernel_basis(p: &DMatrix<f64>) -> DMatrix<f64> {
    // ker P = range(I − P) for a projection
    let n = p.nrows();
    let q = DMatrix::<f64>::identity(n, n) - p;
    let svd = q.svd(true, false);
    let u = svd.u.expect("left singular vectors");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let cols: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&j| svd.singular_values[j] > 1e-10 * smax.max(1.0))
        .collect();
    DMatrix::from_fn(n, cols.len(), |i, j| u[(i, cols[j])])
}

/// Check the filling conditions at `x ∈ O` on `samples` random points.
pub fn check_filling(data: &LinearFillingData, x: &DVector<f64>, samples: usize, seed: u64) -> Result<FillingReport> {
    let p = &data.retraction;
    let phi = &data.fiber;
    let n = p.nrows();
    let k = phi.nrows();
    if p.ncols() != n || phi.ncols() != k || x.len() != n {
        return Err(Error::DomainError("filling data has inconsistent dimensions".into()));
    }
    if (p * p - p).norm() > 1e-12 * p.norm().max(1.0) || (phi * phi - phi).norm() > 1e-12 * phi.norm().max(1.0) {
        return Err(Error::DomainError("retraction and fiber maps must be projections".into()));
    }
    if (p * x - x).norm() > 1e-12 * x.norm().max(1.0) {
        return Err(Error::NotOnRetract {
            residual: (p * x - x).norm(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let id_k = DMatrix::<f64>::identity(k, k);
    let mut agreement: f64 = 0.0;
    let mut separation = f64::INFINITY;
    for _ in 0..samples {
        let z = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let on = x + 0.1 * (p * &z);
        agreement = agreement.max(((data.filler)(&on) - (data.section)(&on)).norm());
        let off = &on + 0.1 * (&z - p * &z);
        let gap = (&off - p * &off).norm();
        if gap > 1e-12 {
            separation = separation.min(((&id_k - phi) * (data.filler)(&off)).norm() / gap);
        }
    }
    let kp = kernel_basis(p);
    let kphi = kernel_basis(phi);
    let step = 1e-6;
    let transverse = |y: &DVector<f64>| (&id_k - phi) * (data.filler)(y);
    let mut jac = DMatrix::zeros(k, kp.ncols());
    for j in 0..kp.ncols() {
        let e = kp.column(j).into_owned();
        let d = (transverse(&(x + step * &e)) - transverse(&(x - step * &e))) / (2.0 * step);
        jac.set_column(j, &d);
    }
    let restricted = kphi.transpose() * jac;
    let square = kphi.ncols() == kp.ncols();
    let sv = if restricted.is_empty() {
        Vec::new()
    } else {
        restricted.svd(false, false).singular_values.iter().cloned().collect()
    };
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let transverse_ok = square && (sv.is_empty() || smin > 1e-8 * smax.max(1.0));
    Ok(FillingReport {
        agreement,
        off_retract_separation: separation,
        transverse_min_singular: if sv.is_empty() { 0.0 } else { smin },
        transverse_square: square,
        valid: agreement <= 1e-10 && separation > 1e-8 && transverse_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn projection() -> DMatrix<f64> {
        // onto the first two coordinates of ℝ^4
        DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0, 0.0, 0.0]))
    }

    fn section() -> VectorMap {
        Arc::new(|y: &DVector<f64>| DVector::from_vec(vec![y[0].sin() + y[1] * y[1], y[0] * y[1], 0.0, 0.0]))
    }

    #[test]
    fn standard_filler_is_valid() {
        let data = standard_filler(projection(), section());
        let x = DVector::from_vec(vec![0.2, -0.1, 0.0, 0.0]);
        let rep = check_filling(&data, &x, 50, 1).unwrap();
        assert!(rep.valid, "{rep:?}");
        assert!((rep.transverse_min_singular - 1.0).abs() < 1e-8);
    }

    #[test]
    fn filler_ignoring_the_transverse_part_fails() {
        let mut data = standard_filler(projection(), section());
        let p = projection();
        let s = section();
        data.filler = Arc::new(move |y| s(&(&p * y)));
        let x = DVector::zeros(4);
        let rep = check_filling(&data, &x, 20, 2).unwrap();
        assert!(!rep.valid);
        assert!(rep.off_retract_separation < 1e-12);
    }
}

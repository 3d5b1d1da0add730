//! Sc-smooth retractions, membership tests and tangent ranks.

pub mod constraint;
pub mod porkbarrel;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::numerical_rank;

pub use constraint::{constraint_retraction_demo, AffineConstraint, ConstraintRetraction};
pub use porkbarrel::{porkbarrel_retraction, Porkbarrel, PorkPoint};

/// Relative rank threshold for tangent maps of retractions.
pub const TANGENT_RANK_TAU: f64 = 1e-6;

/// Default membership tolerance.
pub const ON_RETRACT_TOL: f64 = 1e-9;

/// An idempotent map `ρ` on an ambient space with a level-0 metric.
pub trait Retraction {
    type Point: Clone;

    fn apply(&self, q: &Self::Point) -> Result<Self::Point>;

    /// Level-0 distance.
    fn distance(&self, p: &Self::Point, q: &Self::Point) -> Result<f64>;

    fn norm(&self, p: &Self::Point) -> Result<f64>;
}

/// Retractions whose derivative can be probed.
pub trait TangentProbing: Retraction {
    /// `Dρ(q)[h]`.
    fn derivative(&self, q: &Self::Point, h: &Self::Point) -> Result<Self::Point>;

    /// Unit input directions spanning the relevant part of the tangent space at `q`.
    fn probe_directions(&self, q: &Self::Point) -> Vec<Self::Point>;

    /// Coordinates in which the level-0 norm is Euclidean.
    fn coordinates(&self, p: &Self::Point) -> Vec<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Membership {
    pub residual: f64,
    pub on_retract: bool,
}

/// `‖ρ(q) − q‖_0` and whether it is within `tol`.
pub fn retract_membership<R: Retraction>(rho: &R, q: &R::Point, tol: f64) -> Result<Membership> {
    if !(tol > 0.0) {
        return Err(Error::DomainError(format!("tolerance {tol} must be positive")));
    }
    let residual = rho.distance(&rho.apply(q)?, q)?;
    Ok(Membership {
        residual,
        on_retract: residual <= tol,
    })
}

/// A point of the ambient space classified against a retraction.
#[derive(Debug, Clone)]
pub struct RetractPoint<P> {
    pub point: P,
    pub on_retract: bool,
    pub residual: f64,
    pub tangent_dimension: Option<usize>,
}

pub fn classify<R: TangentProbing>(rho: &R, q: R::Point) -> Result<RetractPoint<R::Point>> {
    let m = retract_membership(rho, &q, ON_RETRACT_TOL * (1.0 + rho.norm(&q)?))?;
    let tangent_dimension = if m.on_retract {
        Some(tangent_dimension(rho, &q)?)
    } else {
        None
    };
    Ok(RetractPoint {
        point: q,
        on_retract: m.on_retract,
        residual: m.residual,
        tangent_dimension,
    })
}

/// Numerical rank of `Dρ(q)` over the probe directions.
///
/// Each column `Dρ(q)[h]` is divided by `max(‖Dρ(q)[h]‖, ‖h‖)`: directions
/// with a large derivative are equilibrated, while columns that ought to
/// vanish keep their (tiny) size instead of being blown up to unit length.
pub fn tangent_dimension<R: TangentProbing>(rho: &R, q: &R::Point) -> Result<usize> {
    let scale = 1.0 + rho.norm(q)?;
    let residual = rho.distance(&rho.apply(q)?, q)?;
    if residual > ON_RETRACT_TOL * scale {
        return Err(Error::NotOnRetract { residual });
    }
    let probes = rho.probe_directions(q);
    if probes.is_empty() {
        return Ok(0);
    }
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(probes.len());
    for h in &probes {
        let d = rho.coordinates(&rho.derivative(q, h)?);
        let dn = d.iter().map(|x| x * x).sum::<f64>().sqrt();
        let hn = rho.norm(h)?;
        let denom = dn.max(hn);
        columns.push(if denom > 0.0 { d.iter().map(|x| x / denom).collect() } else { d });
    }
    let rows = columns[0].len();
    let flat: Vec<f64> = columns.concat();
    let m = DMatrix::from_column_slice(rows, columns.len(), &flat);
    let sv = m.svd(false, false).singular_values;
    numerical_rank(sv.as_slice(), TANGENT_RANK_TAU)
}

/// `max ‖Dρ(q)[Dρ(q)h] − Dρ(q)h‖ / max(‖Dρ(q)h‖, ‖h‖)` over the probe directions.
pub fn tangent_idempotence<R: TangentProbing>(rho: &R, q: &R::Point) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for h in rho.probe_directions(q) {
        let d1 = rho.derivative(q, &h)?;
        let d2 = rho.derivative(q, &d1)?;
        let n = rho.norm(&d1)?.max(rho.norm(&h)?);
        if n > 0.0 {
            worst = worst.max(rho.distance(&d2, &d1)? / n);
        }
    }
    Ok(worst)
}

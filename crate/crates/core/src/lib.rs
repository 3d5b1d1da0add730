//! Desk-scale numerical laboratory for scale calculus.
//!
//! Weighted Sobolev scales on cylinders, the gluing and anti-gluing calculus
//! on necks, sc-differentiability testing, sc-smooth retractions of varying
//! dimension, contraction solving of basic germs, and Cauchy–Riemann index
//! computations.

pub mod cr_fredholm;
pub mod error;
pub mod experiments;
pub mod germ_solver;
pub mod gluing;
pub mod numerics;
pub mod retracts;
pub mod runtime;
pub mod sc_check;
pub mod scale_space;

pub use error::{Error, Result};

//! The Cauchy–Riemann section on glued cylinders, its linearization and
//! Newton solving, and the dimension formulas for nodal surfaces.

pub mod cokernel;
pub mod combinatorics;
pub mod newton;
pub mod section;
pub mod target;

pub use cokernel::{dbar_cokernel_experiment, dbar_cokernel_report, CokernelReport, CokernelSetup};
pub use combinatorics::{arithmetic_genus, deformation_dimension, ComponentData, SurfaceCombinatorics};
pub use newton::{
    cr_newton_solve, cr_newton_solve_with, mollify, perturbed_holomorphic, CrSolution, NewtonOptions, NewtonReport,
    PerturbedSuite, PointConstraint, ScPlusPerturbation,
};
pub use section::{
    cr_evaluate, cr_linearize, field_level_norm, gluing_compatibility_sweep, holomorphic_mode, sup_norm,
    GluingCompatibilityReport, GluingCompatibilityRow,
};
pub use target::{AlmostComplexTarget, StructureDerivativeFn, StructureFn, TargetSpec};

//! Gluing profiles, glued and anti-glued cylinders, `⊕_a`, `⊖_a`, `⊡_a`,
//! the projections `π_a`, and nodal disk-pair coordinates.

pub mod continuity;
pub mod cutoff;
pub mod field;
pub mod ops;
pub mod param;
pub mod profile;
pub mod transport;

pub use continuity::{dyadic_sequence, oscillatory_probes, pi_continuity_experiment, PiContinuityReport, PiContinuityRow};
pub use cutoff::CutoffBeta;
pub use field::{DomainKind, FieldGrid, FieldSample, GluedField, GluedFieldRecord, OffsetProfile};
pub use ops::{antiglue, average, glue, pi_projection, total_glue, unglue};
pub use param::{disk_to_cylinder, DecoratedNodalPair, DiskCylinderMaps, GluingParameter, DEFAULT_R_MIN};
pub use profile::{annulus_modulus, profile_eval, GluingProfile, ProfileKind};
pub use transport::{reparametrization_transport, transport_continuity_sweep, CollarDiffeo, TransportSweep};

//! Exact recursive uncertainty-set propagation for linear SISO plants with a
//! lag, driven by bounded-noise measurements.
//!
//! The fast path keeps each set as vertices, facet directions with offsets,
//! and a vertex-facet incidence matrix ([`polytope::Polytope`]) and updates
//! all three per step ([`recursion`]). The [`oracle`] module recomputes the
//! same sets by Fourier-Motzkin projection for checking.

pub mod linalg;
pub mod estimator;
pub mod golden;
pub mod harness;
pub mod lp;
pub mod oracle;
pub mod plant;
pub mod polytope;
pub mod recursion;
pub mod scalar;

pub use oracle::{HRep, HalfSpace};
pub use plant::{parse_plant, PlantModel};
pub use polytope::Polytope;
pub use recursion::{step, StepMode, StepReport};
pub use scalar::{Rational, Scalar, TolFloat};

//! Structure-preserving simulation of the macroscopic Maxwell equations.
//!
//! The discretization keeps the two halves of the theory strictly apart:
//!
//! * [`complex`] carries everything metric-free — cochains on a periodic
//!   staggered grid, signed-integer incidence operators realizing the
//!   exterior derivative, and the Poincaré pairing (a plain dot product).
//! * [`metric_ops`] quarantines all metric dependence in diagonal Hodge
//!   stars, the discrete L2 inner product, and the codifferential.
//!
//! On top of that, [`constitutive`] defines matter functionals `K[e, b]`
//! whose *exact* coefficient gradients produce the polarization and
//! magnetization, and [`dynamics`] evolves the state `(d̃², b²)` with the
//! metric-free Poisson bracket, preserving its Casimirs exactly.
//!
//! [`exterior3`] is a small pointwise exterior-algebra kernel used both to
//! build Hodge coefficients and as an independent oracle in the tests.

pub mod complex;
pub mod constitutive;
pub mod dynamics;
pub mod error;
pub mod exterior3;
pub mod metric_ops;
pub mod snapshot;

pub use complex::{Cochain, ComplexId, DoubleComplex, GridSpec, IncidenceOperator};
pub use constitutive::{Constitutive, ModelSpec, ModelVariant, Units};
pub use dynamics::{FunctionalGradient, SimState, System};
pub use error::CoreError;
pub use exterior3::{Form, Metric3, Vec3};
pub use metric_ops::{HodgeOperator, HodgeSuite, MaterialMetric};

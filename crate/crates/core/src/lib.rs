//! Exact small-lattice algebra, duality checks, closed-form current moments and
//! kinetic Monte Carlo for the asymmetric exclusion process ASEP(q, j), in which
//! each site holds at most `2j` particles.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algebra;
pub mod analytics;
pub mod error;
pub mod generator;
pub mod lattice;
pub mod linalg;
pub mod qcalc;
pub mod simulate;

pub use algebra::{ChainKind, ChainOps, ExpKind, LocalOps, OperatorMatrix, Symmetry};
pub use analytics::{DualityKind, FiniteDeviation, Kernel, StepSign, WalkerLaw};
pub use error::{Error, Result};
pub use generator::{BoundaryKind, Configuration, Direction};
pub use lattice::{Lattice, DEFAULT_DIMENSION_CAP};
pub use qcalc::QParams;
pub use simulate::{CurrentRecord, Evolution, InitialCondition, MomentEstimate, MomentJob, RngStream, Trajectory};

pub mod bessel;
pub mod duality;
pub mod ldp;
pub mod moments;
pub mod walker;

pub use duality::DualityKind;
pub use moments::{FiniteDeviation, StepSign};
pub use walker::{Kernel, WalkerLaw};

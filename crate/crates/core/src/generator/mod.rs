//! The Liouvillian superoperator and the reservoir-coefficient synthesis.

mod liouvillian;
mod reservoir;
pub mod superop;

pub use liouvillian::{build_liouvillian, Liouvillian};
pub use reservoir::{coefficients_from_couplings, ReservoirMode, ReservoirSpectrum};

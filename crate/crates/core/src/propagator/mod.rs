//! Exact analytic evolution.
//!
//! The one-photon amplitudes obey a linear 2×2 system whose solution is the
//! transfer matrix `[[F1, L1], [L2, F2]]`. From those four functions the full
//! superoperator exponential `e^{Lt}` factorises into twelve exponentials of
//! single generators, each of which acts on a truncated state by a
//! terminating series.

mod analytic;
mod coefficients;
mod schedule;

pub use analytic::{
    apply_schedule, propagate_analytic, single_photon_evolution, single_photon_state, substeps, MAX_GROWTH_EXPONENT,
};
pub use coefficients::{compute_coefficients, compute_coefficients_on_branch, PropagatorCoefficients, RootBranch, Spectrum};
pub use schedule::{factorization_params, ode_residuals, FactorizationSchedule, OdeResiduals, SINGULAR_F1};

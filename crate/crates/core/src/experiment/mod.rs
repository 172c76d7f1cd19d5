//! The two-atom fringe experiment.
//!
//! A source atom leaves one photon shared between the modes, the field decays
//! for a time τ, and a probe atom maps the inter-mode phase onto its
//! excitation probability `P_e(T)`. All formulas here are evaluated in the
//! rotating frame in which mode 1 turns at the splitting `δ` and mode 2 is at
//! rest, so only `δ`, `τ`, the rates and the shifts enter.

mod fringe;
mod protocol;
mod pulse;

pub use fringe::{effective_decay, pe_diagonal, pe_dissipative, pe_ideal, ExperimentConfig};
pub use protocol::{prepared_field, probe_excitation, run_protocol, run_protocol_with, Propagation, ProtocolSettings};
pub use pulse::{pulse_unitary, rabi_pulse, Atom, AtomFieldState, Mode, PulsePhaseConvention};

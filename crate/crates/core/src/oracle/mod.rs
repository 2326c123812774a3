//! Reference computations that do not share code with the closed forms.
//!
//! [`evolve_single_photon_pair`] propagates the two single-photon qubits through
//! loss and the relay beam splitters in Fock space and reads off the exact
//! click statistics. [`mc_coherent_estimate`] averages exact per-phase
//! detection probabilities of coherent states over randomly drawn phases.

mod fock;
mod monte_carlo;

pub use fock::{evolve_single_photon_pair, oracle_yield_and_error, relay_unitary, ClickPattern, FockState, Occupation};
pub use monte_carlo::{mc_coherent_estimate, per_phase_rates, phase_samples, McEstimate, BATCH_SIZE};

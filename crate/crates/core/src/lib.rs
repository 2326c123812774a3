//! Secret-key-rate engines for phase/path/time-encoded measurement-device-independent
//! QKD, together with an independent Fock-space and Monte Carlo oracle used to check them.
//!
//! The crate is organised bottom-up:
//!
//! * [`numerics`]: binary entropy, the modified Bessel function `I0`, adaptive
//!   quadrature and a bracketing scalar maximizer.
//! * [`params`]: experimental constants, the dB channel model and the derived
//!   intensity notation `(mu', x, y)`.
//! * [`single_photon`]: yields, error rates and key rate with ideal single-photon sources.
//! * [`decoy`]: coherent-state gains and QBERs (full phase randomization, equal phase,
//!   and the X-Z encoded variant).
//! * [`postselect`]: overall-phase postselection with `N` phase bands.
//! * [`oracle`]: truncated Fock-space simulation of the relay and Monte Carlo phase averaging.
//! * [`sweep`]: scheme dispatch, intensity optimization, loss sweeps and the verification report.

pub mod decoy;
mod error;
pub mod numerics;
pub mod oracle;
pub mod params;
pub mod postselect;
pub mod single_photon;
pub mod sweep;

pub use decoy::{DetectionProbs, RatePoint, RectGain};
pub use error::{Error, Result};
pub use numerics::QuadratureSpec;
pub use oracle::{ClickPattern, FockState};
pub use params::{DerivedIntensity, ExperimentParams, Reconciliation, SourceIntensities, E0};
pub use postselect::{ConditionalQber, ConditionalRates, PhasePartition};
pub use single_photon::PairYields;
pub use sweep::{MuChoice, Scheme, SweepRow, SweepSpec};

//! Infrared soft-photon dressing of charged-particle scattering.
//!
//! * [`kinematics`]: four-vectors, elastic two-body events, classical emission currents.
//! * [`radiation`]: photon spectrum, mean photon number, `V(J)`, overlap magnitudes.
//! * [`fockspace`]: truncated multi-mode Fock space used as a brute-force check.
//! * [`branches`]: scattering branches dressed with photon clouds and their decoherence.

pub mod branches;
pub mod error;
pub mod fockspace;
pub mod kinematics;
pub mod numeric;
pub mod radiation;
pub mod rng;

pub use error::{Error, Result};

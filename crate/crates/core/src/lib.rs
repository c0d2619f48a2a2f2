//! Twin-photon ellipsometry.
//!
//! Forward models for coincidence counting with polarization-correlated
//! photon pairs reflected off a sample, an independent Fock-space oracle
//! that recomputes the same rates from a discretized two-photon state, and
//! estimators that recover the ellipsometric parameters (psi, delta) from
//! counts.
//!
//! Modules, bottom up:
//!
//! - [`polarization`]: Jones calculus and its twin-photon block extension.
//! - [`source`]: pair-source polarization states, spectra, compensator delay.
//! - [`coincidence`]: closed-form and field-pipeline coincidence rates.
//! - [`oracle`]: discretized Fock-space recomputation of the rates.
//! - [`estimation`]: three-point inversion, sweep fitting, shot-noise Monte Carlo.
//!
//! All angles are radians. Degrees appear only in the command-line front end.

pub mod coincidence;
pub mod error;
pub mod estimation;
pub mod oracle;
pub mod polarization;
pub mod source;

pub use error::{Error, Result};

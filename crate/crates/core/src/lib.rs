//! Propagation of a single-photon polarization qubit through a cold Rydberg
//! gas under double Rydberg-EIT, conditioned on a stored gate excitation.
//!
//! The crate evaluates the linear dispersion relations of the medium, the
//! induced defect potential, frequency-domain transfer integrals (attenuation
//! and phase of each polarization component), full spectral wavepacket
//! propagation and a Monte Carlo average over gate-atom delocalization.

pub mod cli;
pub mod error;
pub mod medium;
pub mod params;
pub mod potential;
pub mod quadrature;
pub mod stochastic;
pub mod transfer;
pub mod units;
pub mod wavepacket;

pub use error::{Error, Result};
pub use medium::{Branch, ComplexDetunings, ComplexDispersion, DispersionKernel};
pub use params::{default_rb85_params, Coupling, ParamInputs, PhysicalParams};

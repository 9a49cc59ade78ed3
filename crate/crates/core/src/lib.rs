//! Exact diagonalization of the one-dimensional Jaynes-Cummings-Hubbard
//! chain.
//!
//! The crate is organized bottom-up:
//!
//! - [`basis`]: product states at fixed excitation number and
//!   momentum/parity sector bases
//! - [`model`]: sector Hamiltonians, dressed-state energies, chiral operator
//! - [`eigen`]: dense spectra and Krylov ground states
//! - [`spectral`]: scaled energies, spacing ratios, binning, density of states
//! - [`multifractal`]: generalized fractal dimensions and GOE references
//! - [`eth`]: diagonal and off-diagonal matrix-element statistics
//! - [`groundstate`]: ground-state GFD sweeps and critical-point brackets
//! - [`runner`]: sweep configuration, caching and figure-data emission
//!
//! Energies are measured in units of the atom-photon coupling `g`.

pub mod basis;
pub mod eigen;
pub mod error;
pub mod eth;
pub mod groundstate;
pub mod model;
pub mod multifractal;
pub mod runner;
pub mod scalar;
pub mod sparse;
pub mod spectral;

pub use error::{Error, Result};

/// Version string folded into cache keys and manifests.
pub const CODE_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), "/", env!("CARGO_PKG_VERSION"));

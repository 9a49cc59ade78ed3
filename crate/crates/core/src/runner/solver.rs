//! Solver injection point for the pipeline.

use num_complex::Complex64;

use crate::eigen::{extremal_eigenpair, full_spectrum, Eigenpair, LanczosOptions, Method, SpectrumResult};
use crate::error::Result;
use crate::model::{Hamiltonian, HamiltonianBlock};

/// A solved sector spectrum of either scalar type.
#[derive(Clone, Debug)]
pub enum Spectrum {
    Real(SpectrumResult<f64>),
    Complex(SpectrumResult<Complex64>),
}

impl Spectrum {
    pub fn eigenvalues(&self) -> &[f64] {
        match self {
            Spectrum::Real(s) => &s.eigenvalues,
            Spectrum::Complex(s) => &s.eigenvalues,
        }
    }

    pub fn has_vectors(&self) -> bool {
        match self {
            Spectrum::Real(s) => s.eigenvectors.is_some(),
            Spectrum::Complex(s) => s.eigenvectors.is_some(),
        }
    }

    pub fn residual_max(&self) -> Option<f64> {
        match self {
            Spectrum::Real(s) => s.residual_max,
            Spectrum::Complex(s) => s.residual_max,
        }
    }

    pub fn method(&self) -> Method {
        match self {
            Spectrum::Real(s) => s.method,
            Spectrum::Complex(s) => s.method,
        }
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues().len()
    }

    pub fn drop_vectors(&mut self) {
        match self {
            Spectrum::Real(s) => s.eigenvectors = None,
            Spectrum::Complex(s) => s.eigenvectors = None,
        }
    }
}

pub trait SpectrumSolver: Sync {
    fn spectrum(&self, hamiltonian: &Hamiltonian, want_vectors: bool, dense_threshold: usize) -> Result<Spectrum>;

    fn ground_state(&self, block: &HamiltonianBlock<f64>, opts: &LanczosOptions) -> Result<Eigenpair<f64>>;
}

/// Dense spectra and Lanczos ground states from [`crate::eigen`].
#[derive(Clone, Copy, Debug, Default)]
pub struct ExactSolver;

impl SpectrumSolver for ExactSolver {
    fn spectrum(&self, hamiltonian: &Hamiltonian, want_vectors: bool, dense_threshold: usize) -> Result<Spectrum> {
        Ok(match hamiltonian {
            Hamiltonian::Real(b) => Spectrum::Real(full_spectrum(b, want_vectors, dense_threshold)?),
            Hamiltonian::Complex(b) => Spectrum::Complex(full_spectrum(b, want_vectors, dense_threshold)?),
        })
    }

    fn ground_state(&self, block: &HamiltonianBlock<f64>, opts: &LanczosOptions) -> Result<Eigenpair<f64>> {
        extremal_eigenpair(block, opts)
    }
}

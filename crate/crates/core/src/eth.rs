//! Eigenstate-thermalization diagnostics for an observable given as a sparse
//! block in the same basis as the eigenvectors (normally `H_tun`).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigen::{column, SpectrumResult};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sparse::CsrMatrix;
use crate::spectral::{scale_energies, ScaledSpectrum, Window};

pub const DEFAULT_PAIR_WINDOW: f64 = 0.01;
pub const DEFAULT_RUNNING_LENGTH: usize = 100;

#[derive(Clone, Debug, PartialEq)]
pub struct EthDiagonal {
    /// Mean scaled eigenvalue of the whole sector.
    pub eps_av: f64,
    /// Level indices in the window, ascending in energy.
    pub indices: Vec<usize>,
    pub eps: Vec<f64>,
    /// `<a|O|a>` for each index.
    pub values: Vec<f64>,
}

impl EthDiagonal {
    pub fn eps_over_eps_av(&self) -> impl Iterator<Item = f64> + '_ {
        self.eps.iter().map(move |e| e / self.eps_av)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OffdiagPair {
    pub alpha: usize,
    pub beta: usize,
    /// `ε_α - ε_β >= 0` (pairs are unordered, `α > β`).
    pub omega: f64,
    pub abs_value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EthOffdiag {
    pub eps_av: f64,
    pub delta: f64,
    /// Open bounds on the pair mean energy `(ε_α + ε_β) / 2`.
    pub lower: f64,
    pub upper: f64,
    /// Sorted by `(ω, α, β)`.
    pub pairs: Vec<OffdiagPair>,
    /// Trailing mean of `abs_value` over up to `running_length` points.
    pub running: Vec<f64>,
    pub running_length: usize,
    pub mean_abs: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EthSummary {
    pub eps_av: f64,
    pub z_mean: f64,
    pub offdiag_mean: f64,
    pub diagonal_count: usize,
    pub pair_count: usize,
}

fn check_dims<T: Scalar>(spectrum: &SpectrumResult<T>, observable: &CsrMatrix<T>) -> Result<()> {
    let v = spectrum.vectors()?;
    if observable.dim() != v.nrows() {
        return Err(Error::DimensionMismatch {
            expected: v.nrows(),
            actual: observable.dim(),
        });
    }
    Ok(())
}

fn scaled_with_average(eigenvalues: &[f64]) -> Result<(ScaledSpectrum, f64)> {
    let scaled = scale_energies(eigenvalues)?;
    let eps_av = scaled.mean();
    Ok((scaled, eps_av))
}

/// Expectation values `<a|O|a>` for the levels inside `window`.
pub fn diagonal_elements<T: Scalar>(
    spectrum: &SpectrumResult<T>,
    observable: &CsrMatrix<T>,
    window: &Window,
) -> Result<EthDiagonal> {
    check_dims(spectrum, observable)?;
    let vectors = spectrum.vectors()?;
    let (scaled, eps_av) = scaled_with_average(&spectrum.eigenvalues)?;
    let indices = window.select(&scaled);
    let values = indices
        .par_iter()
        .map(|&a| {
            let v = column(vectors, a);
            observable.quadratic_form(v, v).re()
        })
        .collect();
    Ok(EthDiagonal {
        eps_av,
        eps: indices.iter().map(|&a| scaled.epsilons[a]).collect(),
        indices,
        values,
    })
}

/// Mean absolute difference between energetically consecutive diagonal
/// elements.
pub fn z_statistic(values: &[f64]) -> Result<f64> {
    if values.len() < 2 {
        return Err(Error::TooFewLevels {
            needed: 2,
            got: values.len(),
        });
    }
    let sum: f64 = values.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    Ok(sum / (values.len() - 1) as f64)
}

/// `|<a|O|b>|` for every unordered pair whose mean scaled energy satisfies
/// `1 - δ/2 < ε̄/ε_av < 1 + δ/2`.
pub fn offdiagonal_elements<T: Scalar>(
    spectrum: &SpectrumResult<T>,
    observable: &CsrMatrix<T>,
    delta: f64,
    running_length: usize,
) -> Result<EthOffdiag> {
    if !(delta > 0.0) || running_length == 0 {
        return Err(Error::InvalidParameter(format!(
            "pair window {delta} and running length {running_length} must be positive"
        )));
    }
    check_dims(spectrum, observable)?;
    let vectors = spectrum.vectors()?;
    let (scaled, eps_av) = scaled_with_average(&spectrum.eigenvalues)?;
    let eps = &scaled.epsilons;
    let lower = 1.0 - delta / 2.0;
    let upper = 1.0 + delta / 2.0;
    let inside = |a: usize, b: usize| {
        let ratio = 0.5 * (eps[a] + eps[b]) / eps_av;
        lower < ratio && ratio < upper
    };

    let dim = spectrum.dim();
    let mut pairs: Vec<OffdiagPair> = (0..dim)
        .into_par_iter()
        .flat_map_iter(|a| {
            // eps is ascending, so partners of `a` form a contiguous run
            let partners: Vec<usize> = (0..a).filter(|&b| inside(a, b)).collect();
            let mut out = Vec::with_capacity(partners.len());
            if !partners.is_empty() {
                let ov = observable.mul_vec(column(vectors, a));
                for b in partners {
                    let element = crate::scalar::dot(column(vectors, b), &ov);
                    out.push(OffdiagPair {
                        alpha: a,
                        beta: b,
                        omega: eps[a] - eps[b],
                        abs_value: element.abs(),
                    });
                }
            }
            out
        })
        .collect();
    if pairs.is_empty() {
        return Err(Error::EmptyWindow(format!(
            "no level pairs with {:.6} < mean eps / eps_av < {:.6} (eps_av = {eps_av:.6})",
            lower, upper
        )));
    }
    pairs.sort_by(|x, y| {
        x.omega
            .total_cmp(&y.omega)
            .then(x.alpha.cmp(&y.alpha))
            .then(x.beta.cmp(&y.beta))
    });

    let mut running = Vec::with_capacity(pairs.len());
    let mut acc = 0.0;
    for (i, p) in pairs.iter().enumerate() {
        acc += p.abs_value;
        if i >= running_length {
            acc -= pairs[i - running_length].abs_value;
        }
        running.push(acc / (i + 1).min(running_length) as f64);
    }
    let mean_abs = pairs.iter().map(|p| p.abs_value).sum::<f64>() / pairs.len() as f64;
    Ok(EthOffdiag {
        eps_av,
        delta,
        lower,
        upper,
        pairs,
        running,
        running_length,
        mean_abs,
    })
}

/// Diagonal `<Z>` over `window` and off-diagonal mean in one pass.
pub fn summary<T: Scalar>(
    spectrum: &SpectrumResult<T>,
    observable: &CsrMatrix<T>,
    window: &Window,
    delta: f64,
) -> Result<(EthDiagonal, EthOffdiag, EthSummary)> {
    let diag = diagonal_elements(spectrum, observable, window)?;
    let z_mean = z_statistic(&diag.values)?;
    let off = offdiagonal_elements(spectrum, observable, delta, DEFAULT_RUNNING_LENGTH)?;
    let s = EthSummary {
        eps_av: diag.eps_av,
        z_mean,
        offdiag_mean: off.mean_abs,
        diagonal_count: diag.values.len(),
        pair_count: off.pairs.len(),
    };
    Ok((diag, off, s))
}

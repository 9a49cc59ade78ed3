//! Diagonalization façade: full dense spectra for statistics, Krylov
//! extremal pairs for ground states.

mod lanczos;

use faer::Mat;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::Sector;
use crate::error::{Error, Result};
use crate::model::{HamiltonianBlock, ModelParams};
use crate::scalar::{self, Scalar};
use crate::sparse::CsrMatrix;

pub use lanczos::{lowest_eigenpair, LanczosOptions};

/// Largest block diagonalized densely unless overridden.
pub const DEFAULT_DENSE_THRESHOLD: usize = 12_000;

/// Relative residual bound for dense eigenpairs.
pub const DENSE_RESIDUAL_TOL: f64 = 1e-9;

/// Relative residual bound for iterative ground states.
pub const ITERATIVE_RESIDUAL_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Dense,
    Iterative,
}

#[derive(Clone, Debug)]
pub struct SpectrumResult<T> {
    /// Ascending; degenerate levels are kept as separate entries.
    pub eigenvalues: Vec<f64>,
    /// Column `k` belongs to `eigenvalues[k]`.
    pub eigenvectors: Option<Mat<T>>,
    /// `max_k ||H v_k - E_k v_k||`, when vectors were computed.
    pub residual_max: Option<f64>,
    pub params: ModelParams,
    pub sector: Option<Sector>,
    pub method: Method,
}

impl<T: Scalar> SpectrumResult<T> {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn vectors(&self) -> Result<&Mat<T>> {
        self.eigenvectors.as_ref().ok_or(Error::MissingEigenvectors)
    }

    /// Eigenvector `k` as a contiguous slice.
    pub fn vector(&self, k: usize) -> Result<&[T]> {
        let v = self.vectors()?;
        Ok(column(v, k))
    }

    pub fn spectral_range(&self) -> f64 {
        match (self.eigenvalues.first(), self.eigenvalues.last()) {
            (Some(lo), Some(hi)) => hi - lo,
            _ => 0.0,
        }
    }
}

pub(crate) fn column<T: Scalar>(m: &Mat<T>, k: usize) -> &[T] {
    m.col(k)
        .try_as_col_major()
        .expect("owned matrices are column-major")
        .as_slice()
}

fn column_mut<T: Scalar>(m: &mut Mat<T>, k: usize) -> &mut [T] {
    m.col_mut(k)
        .try_as_col_major_mut()
        .expect("owned matrices are column-major")
        .as_slice_mut()
}

/// Rotates `v` so its first nonzero component is real and positive.
pub fn fix_phase<T: Scalar>(v: &mut [T]) {
    let Some(&pivot) = v.iter().find(|x| x.abs() > 1e-12) else {
        return;
    };
    let z = pivot.to_complex();
    let phase = T::from_complex(z.conj() / z.norm());
    if phase != T::ONE {
        for x in v.iter_mut() {
            *x = *x * phase;
        }
    }
}

pub fn residual_norm<T: Scalar>(op: &CsrMatrix<T>, value: f64, v: &[T]) -> f64 {
    let hv = op.mul_vec(v);
    hv.iter()
        .zip(v)
        .map(|(&a, &b)| (a - b.scale(value)).abs_sqr())
        .sum::<f64>()
        .sqrt()
}

fn residual_scale(values: &[f64]) -> f64 {
    let range = match (values.first(), values.last()) {
        (Some(lo), Some(hi)) => hi - lo,
        _ => 0.0,
    };
    let magnitude = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if range > 0.0 {
        range
    } else {
        magnitude.max(1.0)
    }
}

/// All eigenvalues (and optionally eigenvectors) of a block.
pub fn full_spectrum<T: Scalar>(
    block: &HamiltonianBlock<T>,
    want_vectors: bool,
    dense_threshold: usize,
) -> Result<SpectrumResult<T>> {
    let (eigenvalues, eigenvectors, residual_max) = dense_eigensystem(&block.total, want_vectors, dense_threshold)?;
    Ok(SpectrumResult {
        eigenvalues,
        eigenvectors,
        residual_max,
        params: block.params,
        sector: block.sector,
        method: Method::Dense,
    })
}

/// Dense diagonalization of a sparse Hermitian operator, with the residual
/// contract checked on every eigenpair.
pub fn dense_eigensystem<T: Scalar>(
    op: &CsrMatrix<T>,
    want_vectors: bool,
    dense_threshold: usize,
) -> Result<(Vec<f64>, Option<Mat<T>>, Option<f64>)> {
    let n = op.dim();
    if n > dense_threshold {
        return Err(Error::Capacity {
            what: "dense diagonalization",
            required: n as u128,
            limit: dense_threshold as u128,
        });
    }
    if n == 0 {
        return Ok((Vec::new(), want_vectors.then(|| Mat::zeros(0, 0)), None));
    }
    let (values, vectors) = {
        let dense = op.to_dense();
        T::dense_eigh(&dense, want_vectors)?
    };
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Eigensolver("non-finite eigenvalue".into()));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let sorted_values: Vec<f64> = order.iter().map(|&k| values[k]).collect();
    let identity = order.iter().enumerate().all(|(i, &k)| i == k);

    let Some(vectors) = vectors else {
        return Ok((sorted_values, None, None));
    };
    let mut vectors = if identity {
        vectors
    } else {
        Mat::from_fn(n, n, |i, j| vectors[(i, order[j])])
    };
    for k in 0..n {
        fix_phase(column_mut(&mut vectors, k));
    }

    let residual = (0..n)
        .into_par_iter()
        .map(|k| residual_norm(op, sorted_values[k], column(&vectors, k)))
        .reduce(|| 0.0, f64::max);
    let tolerance = DENSE_RESIDUAL_TOL * residual_scale(&sorted_values);
    if residual > tolerance {
        return Err(Error::Residual { residual, tolerance });
    }
    Ok((sorted_values, Some(vectors), Some(residual)))
}

#[derive(Clone, Debug)]
pub struct Eigenpair<T> {
    pub value: f64,
    pub vector: Vec<T>,
    pub residual: f64,
    pub matvecs: usize,
    pub method: Method,
}

/// Lowest eigenpair. Small blocks are solved densely; larger ones with
/// thick-restart Lanczos from the normalized all-equal vector.
pub fn extremal_eigenpair<T: Scalar>(block: &HamiltonianBlock<T>, opts: &LanczosOptions) -> Result<Eigenpair<T>> {
    lowest_of(&block.total, opts)
}

pub fn lowest_of<T: Scalar>(op: &CsrMatrix<T>, opts: &LanczosOptions) -> Result<Eigenpair<T>> {
    let n = op.dim();
    if n == 0 {
        return Err(Error::Eigensolver("empty block".into()));
    }
    if n <= opts.dense_cutoff {
        let (values, vectors, residual) = dense_eigensystem(op, true, usize::MAX)?;
        let vectors = vectors.expect("vectors requested");
        return Ok(Eigenpair {
            value: values[0],
            vector: column(&vectors, 0).to_vec(),
            residual: residual.unwrap_or(0.0),
            matvecs: 0,
            method: Method::Dense,
        });
    }
    lowest_eigenpair(op, opts)
}

/// Largest deviation of `V^H V` from the identity.
pub fn orthonormality_defect<T: Scalar>(vectors: &Mat<T>) -> f64 {
    let n = vectors.ncols();
    let mut worst = 0.0f64;
    for i in 0..n {
        let vi = column(vectors, i);
        for j in i..n {
            let ip = scalar::dot(vi, column(vectors, j));
            let target = if i == j { T::ONE } else { T::ZERO };
            worst = worst.max((ip - target).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{build_sector_basis, Boundary, Parity, SymBasis};
    use crate::model::{build_block, build_hamiltonian, Hamiltonian};
    use num_complex::Complex64;

    fn block_from_dense(rows: &[&[f64]]) -> HamiltonianBlock<f64> {
        let n = rows.len();
        let csr = CsrMatrix::from_rows(
            n,
            rows.iter()
                .map(|r| r.iter().copied().enumerate().filter(|&(_, v)| v != 0.0).collect())
                .collect(),
        );
        HamiltonianBlock {
            params: ModelParams::new(0.0, 0.0, Boundary::Pbc),
            sector: None,
            interaction: csr.clone(),
            tunneling: CsrMatrix::zeros(n),
            total: csr,
        }
    }

    #[test]
    fn two_by_two() {
        let b = block_from_dense(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let s = full_spectrum(&b, true, 10).unwrap();
        assert!((s.eigenvalues[0] + 1.0).abs() < 1e-14);
        assert!((s.eigenvalues[1] - 1.0).abs() < 1e-14);
        let gs = extremal_eigenpair(&b, &LanczosOptions::default()).unwrap();
        assert!((gs.value + 1.0).abs() < 1e-14);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((gs.vector[0] - h).abs() < 1e-12 && (gs.vector[1] + h).abs() < 1e-12);
    }

    #[test]
    fn ascending_order() {
        let b = block_from_dense(&[&[3.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 2.0]]);
        let s = full_spectrum(&b, true, 10).unwrap();
        assert_eq!(s.eigenvalues, vec![1.0, 2.0, 3.0]);
        let v = s.vectors().unwrap();
        assert_eq!(v[(1, 0)], 1.0);
        assert_eq!(v[(2, 1)], 1.0);
        assert_eq!(v[(0, 2)], 1.0);
    }

    #[test]
    fn capacity_error_above_threshold() {
        let b = block_from_dense(&[&[1.0, 0.0], &[0.0, 1.0]]);
        assert!(matches!(full_spectrum(&b, false, 1), Err(Error::Capacity { .. })));
    }

    #[test]
    fn complex_sector_vectors_orthonormal_with_phase_convention() {
        let sector = Sector::new(5, 5, Boundary::Pbc, Some(1), None).unwrap();
        let basis = build_sector_basis(&sector).unwrap();
        let b = build_block::<Complex64>(&ModelParams::new(0.3, 0.6, Boundary::Pbc), &basis).unwrap();
        let s = full_spectrum(&b, true, 10_000).unwrap();
        let v = s.vectors().unwrap();
        assert!(orthonormality_defect(v) < 1e-10);
        for k in 0..s.dim() {
            let first = column(v, k).iter().find(|z| z.norm() > 1e-12).unwrap();
            assert!(first.im.abs() < 1e-15 && first.re > 0.0);
        }
        assert!(s.residual_max.unwrap() < 1e-9 * s.spectral_range());
    }

    #[test]
    fn lanczos_matches_dense_ground_energy() {
        for (l, boundary, parity, delta, t) in [
            (6, Boundary::Pbc, Some(Parity::Even), 0.0, 0.3),
            (6, Boundary::Hwbc, Some(Parity::Even), -1.0, 0.15),
            (5, Boundary::Hwbc, None, 2.0, 0.05),
            (6, Boundary::Pbc, Some(Parity::Odd), 5.0, 1.0),
        ] {
            let momentum = (boundary == Boundary::Pbc).then_some(0);
            let sector = Sector::new(l, l, boundary, momentum, parity).unwrap();
            let basis = build_sector_basis(&sector).unwrap();
            let b = build_block::<f64>(&ModelParams::new(delta, t, boundary), &basis).unwrap();
            let dense = full_spectrum(&b, false, 10_000).unwrap();
            let opts = LanczosOptions {
                dense_cutoff: 0,
                ..LanczosOptions::default()
            };
            let gs = extremal_eigenpair(&b, &opts).unwrap();
            let e0 = dense.eigenvalues[0];
            assert!((gs.value - e0).abs() <= 1e-8 * e0.abs().max(1.0), "{sector}: {} vs {e0}", gs.value);
            assert!(gs.residual <= 1e-8 * dense.spectral_range());
            assert_eq!(gs.method, Method::Iterative);
        }
    }

    #[test]
    fn lanczos_is_deterministic() {
        let sector = Sector::new(6, 6, Boundary::Pbc, Some(0), Some(Parity::Even)).unwrap();
        let basis = build_sector_basis(&sector).unwrap();
        let b = build_block::<f64>(&ModelParams::new(0.0, 0.2, Boundary::Pbc), &basis).unwrap();
        let opts = LanczosOptions {
            dense_cutoff: 0,
            ..LanczosOptions::default()
        };
        let a = extremal_eigenpair(&b, &opts).unwrap();
        let c = extremal_eigenpair(&b, &opts).unwrap();
        assert_eq!(a.value.to_bits(), c.value.to_bits());
        assert_eq!(a.vector, c.vector);
    }

    #[test]
    fn resonant_atomic_limit_ground_energy() {
        // t = 0, Δ = 0, ν = 1: every site sits in |−,1> with energy −g
        let l = 6;
        let sector = Sector::new(l, l, Boundary::Pbc, Some(0), Some(Parity::Even)).unwrap();
        let basis = build_sector_basis(&sector).unwrap();
        let b = build_block::<f64>(&ModelParams::new(0.0, 0.0, Boundary::Pbc), &basis).unwrap();
        let opts = LanczosOptions {
            dense_cutoff: 0,
            ..LanczosOptions::default()
        };
        let gs = extremal_eigenpair(&b, &opts).unwrap();
        assert!((gs.value + l as f64).abs() < 1e-9);
    }

    #[test]
    fn unreduced_vs_sector_ground_state() {
        // ground state lives in Q = 0, p = +1
        for boundary in [Boundary::Pbc, Boundary::Hwbc] {
            for l in 2..=4 {
                let full = SymBasis::unreduced(l, l).unwrap();
                let params = ModelParams::new(0.4, 0.3, boundary);
                let Hamiltonian::Real(hf) = build_hamiltonian(&params, &full).unwrap() else {
                    unreachable!()
                };
                let e_full = full_spectrum(&hf, false, 10_000).unwrap().eigenvalues[0];
                let momentum = (boundary == Boundary::Pbc).then_some(0);
                let sector = Sector::new(l, l, boundary, momentum, Some(Parity::Even)).unwrap();
                let hs = build_block::<f64>(&params, &build_sector_basis(&sector).unwrap()).unwrap();
                let e_sec = full_spectrum(&hs, false, 10_000).unwrap().eigenvalues[0];
                assert!((e_full - e_sec).abs() < 1e-10, "{boundary} L={l}");
            }
        }
    }
}

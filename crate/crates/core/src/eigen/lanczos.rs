//! Thick-restart Lanczos for the lowest eigenpair.
//!
//! The projected matrix is accumulated explicitly from fully
//! reorthogonalized Krylov vectors, so after a restart the kept Ritz vectors
//! and the residual direction continue the same Krylov relation
//! `A V = V T + f e_last^H` without any special bookkeeping.

use faer::Mat;

use super::{fix_phase, residual_norm, Eigenpair, Method, ITERATIVE_RESIDUAL_TOL};
use crate::error::{Error, Result};
use crate::scalar::{axpy, dot, norm, Scalar};
use crate::sparse::CsrMatrix;

#[derive(Clone, Debug, PartialEq)]
pub struct LanczosOptions {
    /// Maximum Krylov basis size before a restart.
    pub krylov_dim: usize,
    /// Ritz vectors retained across a restart.
    pub keep: usize,
    /// Target residual relative to the spectral-range estimate.
    pub tolerance: f64,
    pub max_matvecs: usize,
    /// Blocks up to this size are diagonalized densely instead.
    pub dense_cutoff: usize,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            krylov_dim: 64,
            keep: 16,
            tolerance: 1e-11,
            max_matvecs: 30_000,
            dense_cutoff: 64,
        }
    }
}

pub fn lowest_eigenpair<T: Scalar>(op: &CsrMatrix<T>, opts: &LanczosOptions) -> Result<Eigenpair<T>> {
    let n = op.dim();
    if n == 0 {
        return Err(Error::Eigensolver("empty block".into()));
    }
    let m = opts.krylov_dim.clamp(2, n.max(2)).min(n);
    let keep = opts.keep.clamp(1, m.saturating_sub(1).max(1));
    let contract = ITERATIVE_RESIDUAL_TOL;

    let start = T::from_re(1.0 / (n as f64).sqrt());
    let mut basis: Vec<Vec<T>> = vec![vec![start; n]];
    let mut projected = Mat::<T>::zeros(m, m);
    let mut expand = 0usize;
    let mut matvecs = 0usize;
    let mut range_estimate = 0.0f64;
    let mut last_residual;
    let mut w = vec![T::ZERO; n];

    loop {
        op.mul_vec_into(&basis[expand], &mut w);
        matvecs += 1;

        let k = basis.len();
        let mut coeffs = vec![T::ZERO; k];
        for _ in 0..2 {
            for (i, v) in basis.iter().enumerate() {
                let h = dot(v, &w);
                coeffs[i] += h;
                axpy(-h, v, &mut w);
            }
        }
        for (i, &h) in coeffs.iter().enumerate() {
            projected[(i, expand)] = h;
            projected[(expand, i)] = h.conj();
        }
        // diagonal entries of a Hermitian projection are real
        projected[(expand, expand)] = T::from_re(projected[(expand, expand)].re());
        let beta = norm(&w);
        let exhausted = beta <= 1e-13 * range_estimate.max(projected[(expand, expand)].abs()).max(1e-300);

        if k < m && !exhausted {
            basis.push(w.iter().map(|&x| x.scale(1.0 / beta)).collect());
            expand = k;
            continue;
        }

        // Rayleigh-Ritz on the current basis
        let sub = Mat::from_fn(k, k, |i, j| projected[(i, j)]);
        let (theta, s) = T::dense_eigh(&sub, true)?;
        let s = s.expect("vectors requested");
        range_estimate = range_estimate.max(theta[k - 1] - theta[0]);
        let scale = range_estimate.max(theta[0].abs()).max(f64::MIN_POSITIVE);
        let estimate = if exhausted { 0.0 } else { beta * s[(k - 1, 0)].abs() };

        if estimate <= opts.tolerance * scale || exhausted {
            let mut y = ritz_vector(&basis, &s, 0);
            let ny = norm(&y);
            y.iter_mut().for_each(|x| *x = x.scale(1.0 / ny));
            let true_residual = residual_norm(op, theta[0], &y);
            matvecs += 1;
            last_residual = true_residual;
            if true_residual <= contract * scale {
                fix_phase(&mut y);
                return Ok(Eigenpair {
                    value: theta[0],
                    vector: y,
                    residual: true_residual,
                    matvecs,
                    method: Method::Iterative,
                });
            }
        } else {
            last_residual = estimate;
        }

        if matvecs >= opts.max_matvecs {
            return Err(Error::NoConvergence {
                iterations: matvecs,
                residual: last_residual,
                target: contract * scale,
            });
        }
        if exhausted {
            // the start vector spans an invariant subspace that does not
            // satisfy the residual contract; nothing left to explore
            return Err(Error::NoConvergence {
                iterations: matvecs,
                residual: last_residual,
                target: contract * scale,
            });
        }

        // thick restart: lowest Ritz vectors plus the residual direction
        let retained = keep.min(k - 1);
        let mut next: Vec<Vec<T>> = (0..retained).map(|j| ritz_vector(&basis, &s, j)).collect();
        reorthonormalize(&mut next);
        next.push(w.iter().map(|&x| x.scale(1.0 / beta)).collect());
        projected = Mat::zeros(m, m);
        for (j, &t) in theta.iter().take(retained).enumerate() {
            projected[(j, j)] = T::from_re(t);
        }
        basis = next;
        expand = retained;
    }
}

fn ritz_vector<T: Scalar>(basis: &[Vec<T>], s: &Mat<T>, col: usize) -> Vec<T> {
    let mut y = vec![T::ZERO; basis[0].len()];
    for (i, v) in basis.iter().enumerate() {
        axpy(s[(i, col)], v, &mut y);
    }
    y
}

/// Modified Gram-Schmidt; Ritz vectors are orthonormal up to rounding.
fn reorthonormalize<T: Scalar>(vs: &mut [Vec<T>]) {
    for j in 0..vs.len() {
        let (done, rest) = vs.split_at_mut(j);
        let v = &mut rest[0];
        for u in done.iter() {
            let h = dot(u, v);
            axpy(-h, u, v);
        }
        let nv = norm(v);
        v.iter_mut().for_each(|x| *x = x.scale(1.0 / nv));
    }
}

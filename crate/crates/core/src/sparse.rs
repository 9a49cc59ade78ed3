//! Compressed-sparse-row storage for sector Hamiltonians.

use std::io::Write;

use faer::Mat;
use rayon::prelude::*;

use crate::scalar::Scalar;

/// Rows below this count are multiplied serially.
const PAR_ROWS: usize = 4096;

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix<T> {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> CsrMatrix<T> {
    /// Builds a square matrix from per-row `(column, value)` lists. Duplicate
    /// columns are summed and exact zeros dropped.
    pub fn from_rows(dim: usize, rows: Vec<Vec<(usize, T)>>) -> Self {
        assert_eq!(rows.len(), dim, "row count must equal dimension");
        let mut row_ptr = Vec::with_capacity(dim + 1);
        row_ptr.push(0);
        let nnz: usize = rows.iter().map(Vec::len).sum();
        let mut cols = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            let mut iter = row.into_iter().peekable();
            while let Some((c, mut v)) = iter.next() {
                assert!(c < dim, "column {c} out of range for dimension {dim}");
                while let Some(&(c2, v2)) = iter.peek() {
                    if c2 != c {
                        break;
                    }
                    v += v2;
                    iter.next();
                }
                if v != T::ZERO {
                    cols.push(c);
                    values.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Self {
            dim,
            row_ptr,
            cols,
            values,
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            row_ptr: vec![0; dim + 1],
            cols: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[range.clone()].binary_search(&j) {
            Ok(k) => self.values[range.start + k],
            Err(_) => T::ZERO,
        }
    }

    /// `y = A x`; rows are independent so the result is deterministic.
    pub fn mul_vec_into(&self, x: &[T], y: &mut [T]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        let row_dot = |i: usize| {
            let mut acc = T::ZERO;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.cols[k]];
            }
            acc
        };
        if self.dim >= PAR_ROWS {
            y.par_iter_mut()
                .enumerate()
                .with_min_len(1024)
                .for_each(|(i, yi)| *yi = row_dot(i));
        } else {
            for (i, yi) in y.iter_mut().enumerate() {
                *yi = row_dot(i);
            }
        }
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::ZERO; self.dim];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// `<x|A|y>`
    pub fn quadratic_form(&self, x: &[T], y: &[T]) -> T {
        let mut acc = T::ZERO;
        for (i, &xi) in x.iter().enumerate() {
            let mut row = T::ZERO;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                row += self.values[k] * y[self.cols[k]];
            }
            acc += xi.conj() * row;
        }
        acc
    }

    pub fn trace(&self) -> T {
        (0..self.dim).fold(T::ZERO, |acc, i| acc + self.get(i, i))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    /// Largest `|A_ij - conj(A_ji)|` over stored entries.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i).conj()).abs());
            }
        }
        worst
    }

    /// Entry-wise sum of two matrices of equal dimension.
    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let rows = (0..self.dim)
            .map(|i| self.row(i).chain(other.row(i)).collect())
            .collect();
        Self::from_rows(self.dim, rows)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            row_ptr: self.row_ptr.clone(),
            cols: self.cols.clone(),
            values: self.values.iter().map(|v| v.scale(s)).collect(),
        }
    }

    pub fn to_dense(&self) -> Mat<T> {
        let mut m = Mat::<T>::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for (j, v) in self.row(i) {
                m[(i, j)] = v;
            }
        }
        m
    }

    /// Gershgorin bounds `(lower, upper)` on the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..self.dim {
            let mut diag = 0.0;
            let mut radius = 0.0;
            for (j, v) in self.row(i) {
                if j == i {
                    diag = v.re();
                } else {
                    radius += v.abs();
                }
            }
            lo = lo.min(diag - radius);
            hi = hi.max(diag + radius);
        }
        if self.dim == 0 {
            (0.0, 0.0)
        } else {
            (lo, hi)
        }
    }

    /// Writes `row col value` triplets, one per line, 17 significant digits.
    /// Complex entries carry an extra imaginary column.
    pub fn write_triplets<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for i in 0..self.dim {
            for (j, v) in self.row(i) {
                if T::IS_COMPLEX {
                    let z = v.to_complex();
                    writeln!(out, "{i} {j} {:.16e} {:.16e}", z.re, z.im)?;
                } else {
                    writeln!(out, "{i} {j} {:.16e}", v.re())?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn duplicates_are_summed() {
        let m = CsrMatrix::from_rows(2, vec![vec![(1, 1.0), (0, 2.0), (1, 0.5)], vec![]]);
        assert_eq!(m.get(0, 1), 1.5);
        assert_eq!(m.get(0, 0), 2.0);
        assert_eq!(m.nnz(), 2);
    }

    #[test]
    fn matvec_and_quadratic_form() {
        let m = CsrMatrix::from_rows(2, vec![vec![(1, 1.0)], vec![(0, 1.0)]]);
        assert_eq!(m.mul_vec(&[1.0, 2.0]), vec![2.0, 1.0]);
        assert_eq!(m.quadratic_form(&[1.0, 1.0], &[1.0, 1.0]), 2.0);
    }

    #[test]
    fn hermiticity_defect_detects_asymmetry() {
        let i = Complex64::new(0.0, 1.0);
        let herm = CsrMatrix::from_rows(2, vec![vec![(1, i)], vec![(0, -i)]]);
        assert_eq!(herm.hermiticity_defect(), 0.0);
        let bad = CsrMatrix::from_rows(2, vec![vec![(1, i)], vec![(0, i)]]);
        assert!((bad.hermiticity_defect() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn triplet_dump_format() {
        let m = CsrMatrix::from_rows(2, vec![vec![(1, 0.1)], vec![(0, 0.1)]]);
        let mut buf = Vec::new();
        m.write_triplets(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "0 1 1.0000000000000001e-1\n1 0 1.0000000000000001e-1\n"
        );
    }
}

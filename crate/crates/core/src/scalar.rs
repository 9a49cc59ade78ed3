//! Field abstraction shared by the real (Q = 0, L/2) and complex sectors.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use faer::{Mat, Side};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub trait Scalar:
    Copy
    + Send
    + Sync
    + Debug
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + faer::traits::ComplexField
    + 'static
{
    const ZERO: Self;
    const ONE: Self;
    const IS_COMPLEX: bool;

    fn conj(self) -> Self;
    fn abs_sqr(self) -> f64;
    fn re(self) -> f64;
    fn from_re(x: f64) -> Self;
    fn scale(self, x: f64) -> Self;
    /// Drops the imaginary part for real scalars.
    fn from_complex(c: Complex64) -> Self;
    fn to_complex(self) -> Complex64;

    fn abs(self) -> f64 {
        self.abs_sqr().sqrt()
    }

    /// Dense Hermitian eigendecomposition; eigenvalues are returned ascending.
    fn dense_eigh(matrix: &Mat<Self>, vectors: bool) -> Result<(Vec<f64>, Option<Mat<Self>>)>;
}

impl Scalar for f64 {
    const ZERO: Self = 0.0;
    const ONE: Self = 1.0;
    const IS_COMPLEX: bool = false;

    #[inline]
    fn conj(self) -> Self {
        self
    }
    #[inline]
    fn abs_sqr(self) -> f64 {
        self * self
    }
    #[inline]
    fn re(self) -> f64 {
        self
    }
    #[inline]
    fn from_re(x: f64) -> Self {
        x
    }
    #[inline]
    fn scale(self, x: f64) -> Self {
        self * x
    }
    #[inline]
    fn from_complex(c: Complex64) -> Self {
        c.re
    }
    #[inline]
    fn to_complex(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }

    fn dense_eigh(matrix: &Mat<Self>, vectors: bool) -> Result<(Vec<f64>, Option<Mat<Self>>)> {
        if vectors {
            let evd = matrix
                .self_adjoint_eigen(Side::Lower)
                .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
            let values = evd.S().column_vector().iter().copied().collect();
            Ok((values, Some(evd.U().to_owned())))
        } else {
            let values = matrix
                .self_adjoint_eigenvalues(Side::Lower)
                .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
            Ok((values, None))
        }
    }
}

impl Scalar for Complex64 {
    const ZERO: Self = Complex64::new(0.0, 0.0);
    const ONE: Self = Complex64::new(1.0, 0.0);
    const IS_COMPLEX: bool = true;

    #[inline]
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
    #[inline]
    fn abs_sqr(self) -> f64 {
        self.norm_sqr()
    }
    #[inline]
    fn re(self) -> f64 {
        self.re
    }
    #[inline]
    fn from_re(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    #[inline]
    fn scale(self, x: f64) -> Self {
        self * x
    }
    #[inline]
    fn from_complex(c: Complex64) -> Self {
        c
    }
    #[inline]
    fn to_complex(self) -> Complex64 {
        self
    }

    fn dense_eigh(matrix: &Mat<Self>, vectors: bool) -> Result<(Vec<f64>, Option<Mat<Self>>)> {
        if vectors {
            let evd = matrix
                .self_adjoint_eigen(Side::Lower)
                .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
            let values = evd.S().column_vector().iter().map(|z| z.re).collect();
            Ok((values, Some(evd.U().to_owned())))
        } else {
            let values = matrix
                .self_adjoint_eigenvalues(Side::Lower)
                .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
            Ok((values, None))
        }
    }
}

/// `<x|y>` with the conjugate on the left.
pub fn dot<T: Scalar>(x: &[T], y: &[T]) -> T {
    x.iter()
        .zip(y)
        .fold(T::ZERO, |acc, (&a, &b)| acc + a.conj() * b)
}

pub fn norm<T: Scalar>(x: &[T]) -> f64 {
    x.iter().map(|v| v.abs_sqr()).sum::<f64>().sqrt()
}

/// `y += a * x`
pub fn axpy<T: Scalar>(a: T, x: &[T], y: &mut [T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

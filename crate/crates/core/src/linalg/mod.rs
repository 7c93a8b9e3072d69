//! Complex sparse and dense kernels.

mod dense;
mod sparse;

pub use dense::{DenseLu, DenseMatrix};
pub use sparse::{triple_product, CsrMatrix};

use num_complex::Complex64;
use std::ops::{Add, AddAssign, Mul, Sub};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Sparse complex matrix; home of the Galerkin matrices and the restrictions.
pub type SparseComplexMatrix = CsrMatrix<C64>;

/// Field scalars the kernels operate on.
pub trait Scalar:
    Copy
    + std::fmt::Debug
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + AddAssign
    + Send
    + Sync
    + 'static
{
    fn zero() -> Self;
    fn one() -> Self;
    fn conj(self) -> Self;
    fn to_complex(self) -> C64;
    fn abs(self) -> f64;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn conj(self) -> Self {
        self
    }
    fn to_complex(self) -> C64 {
        C64::new(self, 0.0)
    }
    fn abs(self) -> f64 {
        f64::abs(self)
    }
}

impl Scalar for C64 {
    fn zero() -> Self {
        C64::new(0.0, 0.0)
    }
    fn one() -> Self {
        C64::new(1.0, 0.0)
    }
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
    fn to_complex(self) -> C64 {
        self
    }
    fn abs(self) -> f64 {
        self.norm()
    }
}

/// A square linear map on `C^n`.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[C64]) -> Result<Vec<C64>>;
}

impl LinearOperator for CsrMatrix<C64> {
    fn dim(&self) -> usize {
        self.nrows()
    }
    fn apply(&self, x: &[C64]) -> Result<Vec<C64>> {
        self.mul_vec(x)
    }
}

impl LinearOperator for DenseMatrix<C64> {
    fn dim(&self) -> usize {
        self.nrows()
    }
    fn apply(&self, x: &[C64]) -> Result<Vec<C64>> {
        self.mul_vec(x)
    }
}

/// `y* x`, conjugate-linear in the second argument.
pub fn inner(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).fold(C64::new(0.0, 0.0), |acc, (a, b)| acc + a * b.conj())
}

pub fn norm2(x: &[C64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// `y += alpha * x`
pub fn axpy(alpha: C64, x: &[C64], y: &mut [C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// `⟨x, y⟩_D = y* D x`
pub fn weighted_dot(d: &CsrMatrix<f64>, x: &[C64], y: &[C64]) -> Result<C64> {
    if y.len() != d.nrows() {
        return Err(Error::DimensionMismatch { op: "weighted_dot", expected: d.nrows(), got: y.len() });
    }
    let dx = d.mul_vec(x)?;
    Ok(inner(&dx, y))
}

pub fn weighted_norm(d: &CsrMatrix<f64>, x: &[C64]) -> Result<f64> {
    let sq = weighted_dot(d, x, x)?.re;
    if sq < 0.0 {
        return Err(Error::NotPositiveDefinite(format!("negative squared norm {sq:e}")));
    }
    Ok(sq.sqrt())
}

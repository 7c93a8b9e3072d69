use std::ops::{Index, IndexMut, Mul};

use super::{Scalar, C64};
use crate::error::{Error, Result};

/// Column-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix<T> {
    nrows: usize,
    ncols: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, data: vec![T::zero(); nrows * ncols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    /// Builds a matrix from its columns.
    pub fn from_columns(nrows: usize, columns: &[Vec<T>]) -> Result<Self> {
        let mut data = Vec::with_capacity(nrows * columns.len());
        for col in columns {
            if col.len() != nrows {
                return Err(Error::DimensionMismatch { op: "from_columns", expected: nrows, got: col.len() });
            }
            data.extend_from_slice(col);
        }
        Ok(Self { nrows, ncols: columns.len(), data })
    }

    pub fn from_fn(nrows: usize, ncols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(nrows * ncols);
        for j in 0..ncols {
            for i in 0..nrows {
                data.push(f(i, j));
            }
        }
        Self { nrows, ncols, data }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn column(&self, j: usize) -> &[T] {
        &self.data[j * self.nrows..(j + 1) * self.nrows]
    }

    pub fn mul_vec<X>(&self, x: &[X]) -> Result<Vec<X>>
    where
        X: Scalar + Mul<T, Output = X>,
    {
        if x.len() != self.ncols {
            return Err(Error::DimensionMismatch { op: "dense mul_vec", expected: self.ncols, got: x.len() });
        }
        let mut y = vec![X::zero(); self.nrows];
        for (j, &xj) in x.iter().enumerate() {
            for (yi, &a) in y.iter_mut().zip(self.column(j)) {
                *yi += xj * a;
            }
        }
        Ok(y)
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.ncols != other.nrows {
            return Err(Error::DimensionMismatch { op: "dense matmul", expected: self.ncols, got: other.nrows });
        }
        let mut out = Self::zeros(self.nrows, other.ncols);
        for j in 0..other.ncols {
            let oc = &mut out.data[j * self.nrows..(j + 1) * self.nrows];
            for (p, &b) in other.column(j).iter().enumerate() {
                for (o, &a) in oc.iter_mut().zip(self.column(p)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.ncols, self.nrows, |i, j| self[(j, i)])
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.ncols, self.nrows, |i, j| self[(j, i)].conj())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> DenseMatrix<U> {
        DenseMatrix { nrows: self.nrows, ncols: self.ncols, data: self.data.iter().map(|&v| f(v)).collect() }
    }
}

impl<T> Index<(usize, usize)> for DenseMatrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i + j * self.nrows]
    }
}

impl<T> IndexMut<(usize, usize)> for DenseMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i + j * self.nrows]
    }
}

const PANEL: usize = 32;

/// LU factors `P A = L U` of a complex square matrix, partial pivoting.
#[derive(Clone, Debug)]
pub struct DenseLu {
    n: usize,
    /// Unit-lower `L` below the diagonal, `U` on and above it; column-major.
    lu: Vec<C64>,
    /// Row interchanged with row `k` at step `k`.
    pivots: Vec<usize>,
}

impl DenseLu {
    /// Factors `a`. `context` names the matrix in singularity reports.
    pub fn factor(a: DenseMatrix<C64>, context: &str) -> Result<Self> {
        if a.nrows != a.ncols {
            return Err(Error::DimensionMismatch { op: "lu_factor", expected: a.nrows, got: a.ncols });
        }
        let n = a.nrows;
        let tol = f64::EPSILON * a.data.iter().fold(0.0f64, |m, v| m.max(v.norm()));
        let mut lu = a.data;
        let mut pivots = vec![0usize; n];

        let mut kb = 0;
        while kb < n {
            let pend = (kb + PANEL).min(n);
            // unblocked factorization of columns kb..pend
            for j in kb..pend {
                let col = &lu[j * n..(j + 1) * n];
                let (p, mag) = (j..n)
                    .map(|i| (i, col[i].norm()))
                    .fold((j, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
                if !(mag > tol) || n == 0 {
                    return Err(Error::Singular { context: context.to_string(), pivot: j, magnitude: mag.max(0.0) });
                }
                pivots[j] = p;
                if p != j {
                    for c in 0..n {
                        lu.swap(j + c * n, p + c * n);
                    }
                }
                let inv = lu[j + j * n].inv();
                for v in &mut lu[j * n + j + 1..(j + 1) * n] {
                    *v *= inv;
                }
                let (left, right) = lu.split_at_mut((j + 1) * n);
                let lcol = &left[j * n + j + 1..j * n + n];
                for c in j + 1..pend {
                    let cc = &mut right[(c - j - 1) * n..(c - j) * n];
                    let u = cc[j];
                    if u != C64::new(0.0, 0.0) {
                        for (y, &l) in cc[j + 1..].iter_mut().zip(lcol) {
                            *y -= u * l;
                        }
                    }
                }
            }
            if pend < n {
                let (panel, trailing) = lu.split_at_mut(pend * n);
                for c in 0..(n - pend) {
                    let col = &mut trailing[c * n..(c + 1) * n];
                    // U12: unit lower triangular solve with L11
                    for j in kb..pend {
                        let u = col[j];
                        if u != C64::new(0.0, 0.0) {
                            let l = &panel[j * n + j + 1..j * n + pend];
                            for (y, &lv) in col[j + 1..pend].iter_mut().zip(l) {
                                *y -= u * lv;
                            }
                        }
                    }
                    // A22 -= L21 U12, four panel columns at a time
                    let (head, tail) = col.split_at_mut(pend);
                    let mut j = kb;
                    while j + 4 <= pend {
                        let (u0, u1, u2, u3) = (head[j], head[j + 1], head[j + 2], head[j + 3]);
                        let l0 = &panel[j * n + pend..(j + 1) * n];
                        let l1 = &panel[(j + 1) * n + pend..(j + 2) * n];
                        let l2 = &panel[(j + 2) * n + pend..(j + 3) * n];
                        let l3 = &panel[(j + 3) * n + pend..(j + 4) * n];
                        for i in 0..tail.len() {
                            tail[i] -= u0 * l0[i] + u1 * l1[i] + u2 * l2[i] + u3 * l3[i];
                        }
                        j += 4;
                    }
                    while j < pend {
                        let u = head[j];
                        let l = &panel[j * n + pend..(j + 1) * n];
                        for (y, &lv) in tail.iter_mut().zip(l) {
                            *y -= u * lv;
                        }
                        j += 1;
                    }
                }
            }
            kb = pend;
        }
        Ok(Self { n, lu, pivots })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[C64]) -> Result<Vec<C64>> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x)?;
        Ok(x)
    }

    pub fn solve_in_place(&self, x: &mut [C64]) -> Result<()> {
        let n = self.n;
        if x.len() != n {
            return Err(Error::DimensionMismatch { op: "lu_solve", expected: n, got: x.len() });
        }
        for (k, &p) in self.pivots.iter().enumerate() {
            x.swap(k, p);
        }
        for j in 0..n {
            let xj = x[j];
            if xj != C64::new(0.0, 0.0) {
                let l = &self.lu[j * n + j + 1..(j + 1) * n];
                for (y, &lv) in x[j + 1..].iter_mut().zip(l) {
                    *y -= xj * lv;
                }
            }
        }
        for j in (0..n).rev() {
            x[j] /= self.lu[j + j * n];
            let xj = x[j];
            if xj != C64::new(0.0, 0.0) {
                let u = &self.lu[j * n..j * n + j];
                for (y, &uv) in x[..j].iter_mut().zip(u) {
                    *y -= xj * uv;
                }
            }
        }
        Ok(())
    }

    /// Reconstructs `P A` from the factors (testing aid).
    pub fn reconstruct_pa(&self) -> DenseMatrix<C64> {
        let n = self.n;
        let l = DenseMatrix::from_fn(n, n, |i, j| match i.cmp(&j) {
            std::cmp::Ordering::Greater => self.lu[i + j * n],
            std::cmp::Ordering::Equal => C64::new(1.0, 0.0),
            std::cmp::Ordering::Less => C64::new(0.0, 0.0),
        });
        let u = DenseMatrix::from_fn(n, n, |i, j| if i <= j { self.lu[i + j * n] } else { C64::new(0.0, 0.0) });
        l.matmul(&u).expect("square factors")
    }

    /// Applies the recorded row interchanges to the rows of `a`.
    pub fn permute_rows(&self, a: &DenseMatrix<C64>) -> DenseMatrix<C64> {
        let mut out = a.clone();
        for (k, &p) in self.pivots.iter().enumerate() {
            if p != k {
                for c in 0..out.ncols {
                    let n = out.nrows;
                    out.data.swap(k + c * n, p + c * n);
                }
            }
        }
        out
    }
}

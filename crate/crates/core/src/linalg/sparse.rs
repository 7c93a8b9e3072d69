use std::ops::Mul;

use super::{DenseMatrix, Scalar, C64};
use crate::error::{Error, Result};

/// Compressed sparse row matrix with strictly increasing column indices per row.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix<T> {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> CsrMatrix<T> {
    /// Builds a matrix from `(row, col, value)` triplets. Duplicates are summed in
    /// the order they appear, so the result only depends on the triplet sequence.
    /// Explicit zeros are kept.
    pub fn from_triplets(nrows: usize, ncols: usize, mut triplets: Vec<(usize, usize, T)>) -> Result<Self> {
        if let Some(&(r, c, _)) = triplets.iter().find(|&&(r, c, _)| r >= nrows || c >= ncols) {
            return Err(Error::InvalidArgument(format!(
                "triplet ({r}, {c}) outside a {nrows}x{ncols} matrix"
            )));
        }
        // stable: equal keys keep insertion order
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<T> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self { nrows, ncols, row_ptr, col_idx, values })
    }

    pub(crate) fn from_parts(
        nrows: usize,
        ncols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<T>,
    ) -> Self {
        debug_assert_eq!(row_ptr.len(), nrows + 1);
        debug_assert_eq!(col_idx.len(), values.len());
        Self { nrows, ncols, row_ptr, col_idx, values }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![T::one(); n],
        }
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, row_ptr: vec![0; nrows + 1], col_idx: Vec::new(), values: Vec::new() }
    }

    /// Boolean selection matrix with a single unit entry per row at `indices[row]`.
    pub fn selection(indices: &[usize], ncols: usize) -> Result<Self> {
        if let Some(&j) = indices.iter().find(|&&j| j >= ncols) {
            return Err(Error::InvalidArgument(format!("selection index {j} >= {ncols}")));
        }
        Ok(Self {
            nrows: indices.len(),
            ncols,
            row_ptr: (0..=indices.len()).collect(),
            col_idx: indices.to_vec(),
            values: vec![T::one(); indices.len()],
        })
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Column indices and values of one row.
    pub fn row(&self, i: usize) -> (&[usize], &[T]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(p) => vals[p],
            Err(_) => T::zero(),
        }
    }

    pub fn same_pattern(&self, other: &CsrMatrix<impl Scalar>) -> bool {
        self.nrows == other.nrows
            && self.ncols == other.ncols
            && self.row_ptr == other.row_ptr
            && self.col_idx == other.col_idx
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> CsrMatrix<U> {
        CsrMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            row_ptr: self.row_ptr.clone(),
            col_idx: self.col_idx.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn to_complex(&self) -> CsrMatrix<C64> {
        self.map(|v| v.to_complex())
    }

    /// `y = A x`, summing each row in storage order.
    pub fn mul_vec<X>(&self, x: &[X]) -> Result<Vec<X>>
    where
        X: Scalar + Mul<T, Output = X>,
    {
        if x.len() != self.ncols {
            return Err(Error::DimensionMismatch { op: "spmv", expected: self.ncols, got: x.len() });
        }
        Ok((0..self.nrows)
            .map(|i| {
                let mut acc = X::zero();
                for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                    acc += x[self.col_idx[k]] * self.values[k];
                }
                acc
            })
            .collect())
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.ncols + 1];
        for &c in &self.col_idx {
            counts[c + 1] += 1;
        }
        for j in 0..self.ncols {
            counts[j + 1] += counts[j];
        }
        let row_ptr = counts.clone();
        let mut next = counts;
        let mut col_idx = vec![0usize; self.nnz()];
        let mut values = vec![T::zero(); self.nnz()];
        for i in 0..self.nrows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let c = self.col_idx[k];
                let dst = next[c];
                col_idx[dst] = i;
                values[dst] = self.values[k];
                next[c] += 1;
            }
        }
        Self { nrows: self.ncols, ncols: self.nrows, row_ptr, col_idx, values }
    }

    /// Sparse product `self · other` (row-wise Gustavson with a dense accumulator).
    pub fn matmul(&self, other: &CsrMatrix<T>) -> Result<Self> {
        if self.ncols != other.nrows {
            return Err(Error::DimensionMismatch { op: "matmul", expected: self.ncols, got: other.nrows });
        }
        let mut acc = vec![T::zero(); other.ncols];
        let mut mark = vec![usize::MAX; other.ncols];
        let mut row_ptr = vec![0usize; self.nrows + 1];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        let mut touched: Vec<usize> = Vec::new();
        for i in 0..self.nrows {
            touched.clear();
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let (a, av) = (self.col_idx[k], self.values[k]);
                for kk in other.row_ptr[a]..other.row_ptr[a + 1] {
                    let c = other.col_idx[kk];
                    if mark[c] != i {
                        mark[c] = i;
                        acc[c] = T::zero();
                        touched.push(c);
                    }
                    acc[c] += av * other.values[kk];
                }
            }
            touched.sort_unstable();
            for &c in &touched {
                col_idx.push(c);
                values.push(acc[c]);
            }
            row_ptr[i + 1] = col_idx.len();
        }
        Ok(Self { nrows: self.nrows, ncols: other.ncols, row_ptr, col_idx, values })
    }

    /// Principal submatrix on `indices` (in the given order).
    pub fn minor(&self, indices: &[usize]) -> Result<Self> {
        if self.nrows != self.ncols {
            return Err(Error::DimensionMismatch { op: "minor", expected: self.nrows, got: self.ncols });
        }
        let mut local = vec![usize::MAX; self.ncols];
        for (l, &g) in indices.iter().enumerate() {
            if g >= self.ncols {
                return Err(Error::InvalidArgument(format!("minor index {g} >= {}", self.ncols)));
            }
            local[g] = l;
        }
        let mut row_ptr = Vec::with_capacity(indices.len() + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        let mut row: Vec<(usize, T)> = Vec::new();
        for &g in indices {
            row.clear();
            let (cols, vals) = self.row(g);
            for (&c, &v) in cols.iter().zip(vals) {
                if local[c] != usize::MAX {
                    row.push((local[c], v));
                }
            }
            row.sort_unstable_by_key(|&(c, _)| c);
            for &(c, v) in &row {
                col_idx.push(c);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        Ok(Self { nrows: indices.len(), ncols: indices.len(), row_ptr, col_idx, values })
    }

    pub fn to_dense(&self) -> DenseMatrix<T> {
        let mut d = DenseMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                d[(i, self.col_idx[k])] += self.values[k];
            }
        }
        d
    }

    /// True if `Aᵀ = A` with identical pattern and bitwise identical values.
    pub fn is_symmetric(&self) -> bool {
        self.nrows == self.ncols && self.transpose() == *self
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// `R A Rᵀ` for a (possibly rectangular) `R`.
pub fn triple_product<T: Scalar>(r: &CsrMatrix<T>, a: &CsrMatrix<T>) -> Result<CsrMatrix<T>> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch { op: "triple_product", expected: a.nrows(), got: a.ncols() });
    }
    let ra = r.matmul(a)?;
    ra.matmul(&r.transpose())
}

impl CsrMatrix<C64> {
    /// Triple product with a real restriction, `R A Rᵀ`.
    pub fn galerkin(&self, r: &CsrMatrix<f64>) -> Result<CsrMatrix<C64>> {
        triple_product(&r.to_complex(), self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn triplets_sum_duplicates_and_sort() {
        let m = CsrMatrix::from_triplets(2, 3, vec![(1, 2, 1.0), (0, 1, 2.0), (1, 0, 3.0), (1, 2, 0.5)]).unwrap();
        assert_eq!(m.row(1), (&[0usize, 2][..], &[3.0, 1.5][..]));
        assert_eq!(m.get(0, 1), 2.0);
        assert_eq!(m.get(0, 0), 0.0);
    }

    #[test]
    fn out_of_range_triplet_rejected() {
        assert!(CsrMatrix::from_triplets(2, 2, vec![(2, 0, 1.0)]).is_err());
    }

    #[test]
    fn identity_and_zero_products() {
        let x = vec![c(1.0, -1.0), c(0.5, 2.0), c(-3.0, 0.0)];
        assert_eq!(CsrMatrix::<C64>::identity(3).mul_vec(&x).unwrap(), x);
        let z = CsrMatrix::<C64>::zeros(3, 3).mul_vec(&x).unwrap();
        assert!(z.iter().all(|v| *v == c(0.0, 0.0)));
        assert!(CsrMatrix::<C64>::identity(2).mul_vec(&x).is_err());
    }

    #[test]
    fn minor_selects_rows_and_columns() {
        let a = CsrMatrix::from_triplets(
            3,
            3,
            (0..3).flat_map(|i| (0..3).map(move |j| (i, j, (3 * i + j) as f64))).collect(),
        )
        .unwrap();
        let m = a.minor(&[0, 2]).unwrap();
        assert_eq!(m.to_dense().as_slice(), &[0.0, 6.0, 2.0, 8.0]);
        let r = CsrMatrix::selection(&[0, 2], 3).unwrap();
        assert_eq!(triple_product(&r, &a).unwrap(), m);
    }

    #[test]
    fn identity_restriction_reproduces_matrix() {
        let a = CsrMatrix::from_triplets(2, 2, vec![(0, 0, c(1.0, 1.0)), (1, 0, c(2.0, 0.0)), (1, 1, c(0.0, 3.0))])
            .unwrap();
        let r = CsrMatrix::<C64>::identity(2);
        assert_eq!(triple_product(&r, &a).unwrap(), a);
    }

    #[test]
    fn transpose_twice_is_identity() {
        let a = CsrMatrix::from_triplets(2, 3, vec![(0, 2, 1.0), (1, 0, 2.0), (1, 1, -1.0)]).unwrap();
        assert_eq!(a.transpose().transpose(), a);
        assert_eq!(a.transpose().get(2, 0), 1.0);
    }
}

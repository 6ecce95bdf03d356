//! Small dense linear algebra: row-major matrices and a Cholesky solver.
//!
//! The systems solved here are the `Omega`-block of the discrete operator
//! plus a diagonal potential, a few hundred unknowns at most.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch { expected: self.cols, got: x.len() });
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), x)).collect())
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Cholesky factorization `A = L Lᵀ` of a symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    inner: nalgebra::Cholesky<f64, nalgebra::Dyn>,
}

impl Cholesky {
    /// Factors the symmetric matrix `a + diag(shift)`; only the lower triangle
    /// of `a` is read.
    pub fn factor_shifted(a: &DenseMatrix, shift: &[f64]) -> Result<Self> {
        let n = a.rows();
        if a.cols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: a.cols() });
        }
        if shift.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: shift.len() });
        }
        let mut m = nalgebra::DMatrix::from_row_slice(n, n, a.as_slice());
        for (i, d) in shift.iter().enumerate() {
            m[(i, i)] += d;
        }
        nalgebra::Cholesky::new(m)
            .map(|inner| Self { inner })
            .ok_or(Error::Factorization { dim: n, kind: "Cholesky" })
    }

    pub fn factor(a: &DenseMatrix) -> Result<Self> {
        Self::factor_shifted(a, &vec![0.0; a.rows()])
    }

    pub fn dim(&self) -> usize {
        self.inner.l_dirty().nrows()
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        if b.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: b.len() });
        }
        let x = self.inner.solve(&nalgebra::DVector::from_column_slice(b));
        Ok(x.as_slice().to_vec())
    }
}

/// Solves the square system `a x = b` by LU decomposition with partial
/// pivoting.
pub fn lu_solve(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.rows();
    if a.cols() != n || b.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: if a.cols() != n { a.cols() } else { b.len() } });
    }
    let m = nalgebra::DMatrix::from_row_slice(n, n, a.as_slice());
    m.lu()
        .solve(&nalgebra::DVector::from_column_slice(b))
        .map(|x| x.as_slice().to_vec())
        .ok_or(Error::Factorization { dim: n, kind: "LU" })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_spd_system() {
        let a = DenseMatrix::from_fn(3, 3, |i, j| [[4.0, 1.0, 0.5], [1.0, 3.0, 0.2], [0.5, 0.2, 2.0]][i][j]);
        let chol = Cholesky::factor(&a).unwrap();
        let x = chol.solve(&[1.0, 2.0, 3.0]).unwrap();
        let r = a.matvec(&x).unwrap();
        for (ri, bi) in r.iter().zip([1.0, 2.0, 3.0]) {
            assert!((ri - bi).abs() < 1e-14);
        }
    }

    #[test]
    fn shift_is_added_to_diagonal() {
        let a = DenseMatrix::from_fn(2, 2, |i, j| if i == j { 1.0 } else { 0.5 });
        let chol = Cholesky::factor_shifted(&a, &[1.0, 2.0]).unwrap();
        let x = chol.solve(&[2.5, 3.5]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn indefinite_matrix_is_rejected() {
        let a = DenseMatrix::from_fn(2, 2, |i, j| if i == j { 1.0 } else { 2.0 });
        assert!(matches!(Cholesky::factor(&a), Err(Error::Factorization { dim: 2, .. })));
    }

    #[test]
    fn lu_handles_zero_leading_entry() {
        let a = DenseMatrix::from_fn(3, 3, |r, c| [[0.0, 2.0, 1.0], [1.0, 1.0, 0.0], [3.0, 0.0, 1.0]][r][c]);
        let x = lu_solve(&a, &[5.0, 3.0, 4.0]).unwrap();
        for (xi, e) in x.iter().zip([1.0, 2.0, 1.0]) {
            assert!((xi - e).abs() < 1e-14);
        }
        assert!(lu_solve(&DenseMatrix::zeros(2, 2), &[1.0, 1.0]).is_err());
    }

    #[test]
    fn dimension_checks() {
        let a = DenseMatrix::zeros(2, 3);
        assert!(Cholesky::factor(&a).is_err());
        assert!(a.matvec(&[1.0, 2.0]).is_err());
    }
}

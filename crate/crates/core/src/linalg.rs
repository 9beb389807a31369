//! Small dense helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Column `j` of a column-major matrix as a contiguous slice.
#[inline]
pub fn col(m: &Matrix, j: usize) -> &[f64] {
    let n = m.nrows();
    &m.as_slice()[j * n..(j + 1) * n]
}

/// `[a | b]`
pub fn hstack(a: &Matrix, b: &Matrix) -> Matrix {
    assert_eq!(a.nrows(), b.nrows());
    let mut data = Vec::with_capacity(a.len() + b.len());
    data.extend_from_slice(a.as_slice());
    data.extend_from_slice(b.as_slice());
    Matrix::from_vec(a.nrows(), a.ncols() + b.ncols(), data)
}

/// Prepends a single column.
pub fn prepend_column(c: &[f64], m: &Matrix) -> Matrix {
    assert_eq!(c.len(), m.nrows());
    let mut data = Vec::with_capacity(c.len() + m.len());
    data.extend_from_slice(c);
    data.extend_from_slice(m.as_slice());
    Matrix::from_vec(m.nrows(), m.ncols() + 1, data)
}

/// Multiplies row `i` of `m` by `w[i]`.
pub fn scale_rows(m: &Matrix, w: &[f64]) -> Matrix {
    let mut out = m.clone();
    for j in 0..m.ncols() {
        for (v, wi) in out.column_mut(j).iter_mut().zip(w) {
            *v *= wi;
        }
    }
    out
}

/// Multiplies column `j` of `m` by `s[j]`.
pub fn scale_cols(m: &Matrix, s: &[f64]) -> Matrix {
    let mut out = m.clone();
    for (j, sj) in s.iter().enumerate() {
        out.column_mut(j).scale_mut(*sj);
    }
    out
}

/// `m * b` written to a fresh vector, skipping zero coefficients.
pub fn mat_vec_sparse(m: &Matrix, b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; m.nrows()];
    for (j, &bj) in b.iter().enumerate() {
        if bj != 0.0 {
            axpy(bj, col(m, j), &mut out);
        }
    }
    out
}

pub fn l1(b: &[f64]) -> f64 {
    b.iter().map(|v| v.abs()).sum()
}

/// Symmetric inverse via Cholesky, falling back to LU.
pub fn inverse_spd(m: &Matrix) -> Option<Matrix> {
    if let Some(ch) = m.clone().cholesky() {
        return Some(ch.inverse());
    }
    m.clone().try_inverse()
}

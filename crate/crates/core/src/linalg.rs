//! Small dense linear-algebra helpers shared by the estimators.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::{lit, Error, Result, Scalar};

/// Maximum number of jitter doublings attempted by [`repaired_cholesky`].
pub const MAX_JITTER_DOUBLINGS: usize = 8;
/// Initial jitter, relative to the trace.
pub const JITTER_REL: f64 = 1e-12;

/// Replaces `m` with `(m + mᵀ) / 2`. Afterwards `m == mᵀ` bit for bit.
pub fn symmetrize<T: Scalar>(m: &mut DMatrix<T>) {
    let n = m.nrows();
    let half = lit::<T>(0.5);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = (m[(i, j)] + m[(j, i)]) * half;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Cholesky factor of a covariance, repairing mild loss of definiteness.
///
/// The matrix is symmetrized first. If it is not numerically positive
/// definite, `1e-12·trace·I` is added and doubled up to
/// [`MAX_JITTER_DOUBLINGS`] times.
pub fn repaired_cholesky<T: Scalar>(cov: &DMatrix<T>) -> Result<Cholesky<T, Dyn>> {
    let mut sym = cov.clone();
    symmetrize(&mut sym);
    if !sym.iter().all(|v| v.is_finite()) {
        return Err(Error::CovarianceNotRepairable);
    }
    if let Some(ch) = sym.clone().cholesky() {
        return Ok(ch);
    }
    let trace = sym.trace();
    if trace <= T::zero() {
        return Err(Error::CovarianceNotRepairable);
    }
    let mut jitter = trace * lit(JITTER_REL);
    for _ in 0..=MAX_JITTER_DOUBLINGS {
        let mut attempt = sym.clone();
        for i in 0..attempt.nrows() {
            attempt[(i, i)] += jitter;
        }
        if let Some(ch) = attempt.cholesky() {
            return Ok(ch);
        }
        jitter *= lit(2.0);
    }
    Err(Error::CovarianceNotRepairable)
}

/// Solves `A X = B` for symmetric positive definite `A`.
pub fn spd_solve<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>) -> Option<DMatrix<T>> {
    let ch = a.clone().cholesky()?;
    let x = ch.solve(b);
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Inverse of a symmetric positive definite matrix, symmetrized.
pub fn spd_inverse<T: Scalar>(a: &DMatrix<T>) -> Option<DMatrix<T>> {
    if a.nrows() == 0 {
        return Some(DMatrix::zeros(0, 0));
    }
    let ch = a.clone().cholesky()?;
    let mut inv = ch.inverse();
    symmetrize(&mut inv);
    inv.iter().all(|v| v.is_finite()).then_some(inv)
}

/// General inverse via LU, used where symmetry is not guaranteed.
pub fn inverse<T: Scalar>(a: &DMatrix<T>) -> Option<DMatrix<T>> {
    let inv = a.clone().try_inverse()?;
    inv.iter().all(|v| v.is_finite()).then_some(inv)
}

/// Extracts the principal submatrix on `idx`.
pub fn submatrix<T: Scalar>(m: &DMatrix<T>, idx: &[usize]) -> DMatrix<T> {
    DMatrix::from_fn(idx.len(), idx.len(), |r, c| m[(idx[r], idx[c])])
}

/// Extracts rows `rows` and columns `cols`.
pub fn block<T: Scalar>(m: &DMatrix<T>, rows: &[usize], cols: &[usize]) -> DMatrix<T> {
    DMatrix::from_fn(rows.len(), cols.len(), |r, c| m[(rows[r], cols[c])])
}

pub fn subvector<T: Scalar>(v: &DVector<T>, idx: &[usize]) -> DVector<T> {
    DVector::from_fn(idx.len(), |r, _| v[idx[r]])
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue<T: Scalar>(m: &DMatrix<T>) -> T {
    let mut sym = m.clone();
    symmetrize(&mut sym);
    sym.symmetric_eigenvalues().min()
}

/// `trace(A·B)` in `O(n²)`.
pub fn trace_of_product<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>) -> T {
    debug_assert_eq!(a.ncols(), b.nrows());
    debug_assert_eq!(a.nrows(), b.ncols());
    let mut acc = T::zero();
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

pub(crate) fn all_finite<T: Scalar>(v: &DVector<T>) -> bool {
    v.iter().all(|x| x.is_finite())
}

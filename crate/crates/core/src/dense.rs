//! Small dense solves shared by the local projector construction.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Result, VemError};

/// Matrices whose (diagonally scaled) reciprocal condition falls below this
/// are treated as singular.
pub(crate) const RCOND_MIN: f64 = 1e-14;

/// Reciprocal 2-norm condition of `a` after symmetric Jacobi scaling.
pub(crate) fn scaled_rcond(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    if n == 0 {
        return 1.0;
    }
    let d: Vec<f64> = (0..n)
        .map(|i| {
            let r = a.row(i).iter().map(|v| v * v).sum::<f64>().sqrt();
            if r > 0.0 {
                1.0 / r
            } else {
                1.0
            }
        })
        .collect();
    let scaled = DMatrix::from_fn(n, n, |i, j| a[(i, j)] * d[i]);
    let sv = scaled.singular_values();
    let max = sv.max();
    let min = sv.min();
    if max == 0.0 {
        0.0
    } else {
        min / max
    }
}

/// Solves `a x = b` by LU with partial pivoting, refusing near-singular `a`.
pub(crate) fn lu_solve(
    a: DMatrix<f64>,
    b: &DMatrix<f64>,
    cell: usize,
    what: &'static str,
) -> Result<DMatrix<f64>> {
    let rcond = scaled_rcond(&a);
    if !(rcond >= RCOND_MIN) {
        return Err(VemError::SingularLocal { cell, what, rcond });
    }
    a.lu()
        .solve(b)
        .ok_or(VemError::SingularLocal { cell, what, rcond })
}

/// Solves `h x = b` for a symmetric positive definite Gram matrix.
pub(crate) fn spd_solve(
    h: &DMatrix<f64>,
    b: &DMatrix<f64>,
    cell: usize,
    what: &'static str,
) -> Result<DMatrix<f64>> {
    let rcond = spd_rcond(h);
    if !(rcond >= RCOND_MIN) {
        return Err(VemError::SingularLocal { cell, what, rcond });
    }
    match h.clone().cholesky() {
        Some(ch) => Ok(ch.solve(b)),
        None => Err(VemError::SingularLocal { cell, what, rcond }),
    }
}

/// Reciprocal condition of the Jacobi-scaled SPD matrix `h`.
pub(crate) fn spd_rcond(h: &DMatrix<f64>) -> f64 {
    let n = h.nrows();
    if n == 0 {
        return 1.0;
    }
    if h.diagonal().iter().any(|&v| !(v > 0.0)) {
        return 0.0;
    }
    let d: Vec<f64> = h.diagonal().iter().map(|v| 1.0 / v.sqrt()).collect();
    let scaled = DMatrix::from_fn(n, n, |i, j| h[(i, j)] * d[i] * d[j]);
    let eig = SymmetricEigen::new(scaled).eigenvalues;
    let max = eig.max();
    let min = eig.min();
    if max <= 0.0 {
        0.0
    } else {
        (min / max).max(0.0)
    }
}

/// Eigenvalues of a symmetric matrix in ascending order.
pub(crate) fn sorted_eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
    let sym = (a + a.transpose()) * 0.5;
    let mut ev: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
    ev.sort_by(|x, y| x.total_cmp(y));
    ev
}

/// Block-diagonal `diag(h, h)`.
pub(crate) fn block_diag2(h: &DMatrix<f64>) -> DMatrix<f64> {
    let n = h.nrows();
    let mut out = DMatrix::zeros(2 * n, 2 * n);
    out.view_mut((0, 0), (n, n)).copy_from(h);
    out.view_mut((n, n), (n, n)).copy_from(h);
    out
}

//! Small dense helpers on top of nalgebra. Everything here is sized for the
//! `d <= 10` systems this crate targets.

use num_traits::Float;

use crate::{Error, Mat, Result};

/// Largest eigenvalue modulus.
pub fn spectral_radius(m: &Mat) -> f64 {
    debug_assert!(m.is_square());
    if m.nrows() == 0 {
        return 0.0;
    }
    if m.nrows() == 1 {
        return m[(0, 0)].abs();
    }
    m.complex_eigenvalues()
        .iter()
        .map(|c| Float::hypot(c.re, c.im))
        .fold(0.0, f64::max)
}

pub fn symmetrize(m: &Mat) -> Mat {
    (m + m.transpose()) * 0.5
}

/// Smallest eigenvalue of the symmetric part `(M + M^T) / 2`.
pub fn min_sym_eigenvalue(m: &Mat) -> f64 {
    symmetrize(m)
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

pub fn is_positive_definite(m: &Mat, floor: f64) -> bool {
    m.is_square() && m.iter().all(|v| v.is_finite()) && min_sym_eigenvalue(m) > floor
}

pub fn all_finite(m: &Mat) -> bool {
    m.iter().all(|v| v.is_finite())
}

/// Column-stacking vectorization. nalgebra is column-major, so this is the
/// storage order.
pub fn vec(m: &Mat) -> Mat {
    Mat::from_column_slice(m.len(), 1, m.as_slice())
}

pub fn unvec(v: &Mat, rows: usize, cols: usize) -> Mat {
    Mat::from_column_slice(rows, cols, v.as_slice())
}

/// `ln det(M)` for symmetric positive definite `M`.
pub fn log_det_spd(m: &Mat) -> Result<f64> {
    let chol = m.clone().cholesky().ok_or(Error::SingularDesign)?;
    Ok(chol.l().diagonal().iter().map(|v| 2.0 * v.ln()).sum())
}

/// `Tr(M^T S^{-1} M)` for symmetric positive definite `S`.
pub fn inv_weighted_sq_norm(s: &Mat, m: &Mat) -> Result<f64> {
    if s.nrows() != m.nrows() {
        return Err(Error::IncompatibleShapes("weight and argument row counts differ"));
    }
    let chol = s.clone().cholesky().ok_or(Error::SingularDesign)?;
    let y = chol.l().solve_lower_triangular(m).ok_or(Error::SingularDesign)?;
    Ok(y.norm_squared())
}

/// `Tr(M^T S M)`.
pub fn weighted_sq_norm(s: &Mat, m: &Mat) -> f64 {
    (m.transpose() * s * m).trace()
}

pub fn max_abs(m: &Mat) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

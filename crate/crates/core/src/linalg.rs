//! Dense complex helpers shared by every module.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{CdareError, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

/// Entrywise complex conjugate.
pub fn conj(m: &CMat) -> CMat {
    m.map(|z| z.conj())
}

/// `(M + Mᴴ) / 2`.
pub fn symmetrize(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

/// Largest singular value.
pub fn spectral_norm(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().max()
}

/// Eigenvalues of the Hermitian part of `m`, ascending.
pub fn hermitian_eigenvalues(m: &CMat) -> DVector<f64> {
    let mut ev = symmetrize(m).symmetric_eigenvalues();
    ev.as_mut_slice().sort_by(|a, b| a.total_cmp(b));
    ev
}

pub fn lambda_min(m: &CMat) -> f64 {
    hermitian_eigenvalues(m).min()
}

pub fn lambda_max(m: &CMat) -> f64 {
    hermitian_eigenvalues(m).max()
}

/// Reciprocal 2-norm condition number `σ_min / σ_max`; zero for the zero matrix.
pub fn rcond(m: &CMat) -> f64 {
    let sv = m.singular_values();
    let smax = sv.max();
    if smax == 0.0 || !smax.is_finite() {
        return 0.0;
    }
    sv.min() / smax
}

/// Relative deviation from Hermiticity, `‖M − Mᴴ‖_max / (1 + ‖M‖_max)`.
pub fn hermitian_deviation(m: &CMat) -> f64 {
    let diff = (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    diff / (1.0 + scale)
}

/// Solve `M Z = rhs` by partial-pivot LU.
pub fn solve(m: &CMat, rhs: &CMat) -> Result<CMat> {
    m.clone()
        .lu()
        .solve(rhs)
        .ok_or_else(|| CdareError::Numerical("LU solve hit an exact zero pivot".into()))
}

pub fn require_square(what: &'static str, m: &CMat) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(CdareError::Dimension {
            what,
            expected: "square matrix".into(),
            found: format!("{}x{}", m.nrows(), m.ncols()),
        });
    }
    Ok(m.nrows())
}

pub fn require_shape(what: &'static str, m: &CMat, rows: usize, cols: usize) -> Result<()> {
    if m.shape() != (rows, cols) {
        return Err(CdareError::Dimension {
            what,
            expected: format!("{rows}x{cols}"),
            found: format!("{}x{}", m.nrows(), m.ncols()),
        });
    }
    Ok(())
}

/// Lift a real matrix given row-major.
pub fn from_real_rows(rows: usize, cols: usize, data: &[f64]) -> CMat {
    CMat::from_row_iterator(rows, cols, data.iter().map(|&x| Complex64::new(x, 0.0)))
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigenvalues_of_complex_hermitian() {
        // [[2, i], [-i, 2]] has eigenvalues 1 and 3
        let m = CMat::from_row_slice(2, 2, &[c(2.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(2.0, 0.0)]);
        let ev = hermitian_eigenvalues(&m);
        assert!((ev[0] - 1.0).abs() < 1e-14);
        assert!((ev[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn rcond_of_zero_and_identity() {
        assert_eq!(rcond(&CMat::zeros(2, 2)), 0.0);
        assert!((rcond(&CMat::identity(3, 3)) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn deviation_detects_non_hermitian() {
        let m = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        assert!(hermitian_deviation(&m) > 0.1);
        assert_eq!(hermitian_deviation(&symmetrize(&m)), 0.0);
    }
}

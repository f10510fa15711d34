//! Conjugate Stein operator `𝒞_A(X) = X − Aᴴ X̄ A` and its inverse.
//!
//! `𝒞_A` is real-linear but not complex-linear in `X`. Conjugating
//! `X = Q + Aᴴ X̄ A` and substituting it back gives the standard Stein
//! equation
//!
//! ```text
//! X − Mᴴ X M = Q + Aᴴ Q̄ A,    M = Ā A,
//! ```
//!
//! which *is* complex-linear and has a unique solution when `ρ(M) < 1`.
//! That solution is the unique Hermitian solution of `𝒞_A(X) = Q`.

use nalgebra::Schur;

use crate::error::{CdareError, Result};
use crate::linalg::{self, CMat, CVec};
use crate::riccati::HermitianMatrix;

/// `ρ(ĀA)` at or above `1 − STEIN_MARGIN` is rejected by [`stein_solve`].
pub const STEIN_MARGIN: f64 = 1e-8;

/// Pivot estimate below which a solve carries a conditioning warning.
pub const ILL_CONDITIONED: f64 = 1e-10;

/// A conjugate Stein equation `𝒞_A(X) = Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct SteinProblem {
    pub a: CMat,
    pub q: HermitianMatrix,
}

impl SteinProblem {
    pub fn new(a: CMat, q: HermitianMatrix) -> Result<Self> {
        let n = linalg::require_square("A", &a)?;
        linalg::require_shape("Q", q.as_matrix(), n, n)?;
        Ok(Self { a, q })
    }

    pub fn solve(&self) -> Result<SteinSolution> {
        stein_solve(&self.a, &self.q)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteinSolution {
    pub x: HermitianMatrix,
    /// `ρ(ĀA)` of the coefficient matrix.
    pub rho: f64,
    /// Smallest LU pivot modulus of the vectorized system, over `max(1, largest)`.
    pub rcond_estimate: f64,
    pub warning: Option<String>,
}

fn check_pair(a: &CMat, x: &HermitianMatrix) -> Result<()> {
    let n = linalg::require_square("A", a)?;
    linalg::require_shape("X", x.as_matrix(), n, n)
}

/// `X − Aᴴ X̄ A`.
pub fn stein_apply(a: &CMat, x: &HermitianMatrix) -> Result<HermitianMatrix> {
    check_pair(a, x)?;
    let value = x.as_matrix() - a.adjoint() * linalg::conj(x.as_matrix()) * a;
    Ok(HermitianMatrix::symmetrized(&value))
}

/// `Y − Mᴴ Y M`.
pub fn standard_stein_apply(m: &CMat, y: &HermitianMatrix) -> Result<HermitianMatrix> {
    check_pair(m, y)?;
    let value = y.as_matrix() - m.adjoint() * y.as_matrix() * m;
    Ok(HermitianMatrix::symmetrized(&value))
}

/// Solve `𝒞_A(X) = Q` for Hermitian `X`. Requires `ρ(ĀA) < 1`.
pub fn stein_solve(a: &CMat, q: &HermitianMatrix) -> Result<SteinSolution> {
    check_pair(a, q)?;
    let n = a.nrows();
    let m = linalg::conj(a) * a;
    let rho = spectral_radius(&m)?;
    if !(rho < 1.0 - STEIN_MARGIN) {
        return Err(CdareError::Precondition(format!(
            "rho(conj(A)A) = {rho:e} >= 1 - {STEIN_MARGIN:e}: conjugate Stein operator not invertible by this method"
        )));
    }
    let rhs = q.as_matrix() + a.adjoint() * linalg::conj(q.as_matrix()) * a;

    // vec is column-major: entry (i, j) sits at i + j n.
    let nn = n * n;
    let mut k = CMat::zeros(nn, nn);
    for j in 0..n {
        for i in 0..n {
            let row = i + j * n;
            for l in 0..n {
                for kk in 0..n {
                    k[(row, kk + l * n)] = -m[(kk, i)].conj() * m[(l, j)];
                }
            }
            k[(row, row)] += linalg::c(1.0, 0.0);
        }
    }
    let b = CVec::from_iterator(nn, rhs.iter().copied());
    let lu = k.lu();
    let u = lu.u();
    let pivots = u.diagonal().map(|z| z.norm());
    // K = I − Mᵀ⊗Mᴴ is O(1) in norm, so small pivots mean amplification.
    let rcond_estimate = pivots.min() / pivots.max().max(1.0);
    let sol = lu
        .solve(&b)
        .ok_or_else(|| CdareError::Numerical("vectorized Stein system is singular".into()))?;
    let x = CMat::from_column_slice(n, n, sol.as_slice());
    let warning = (rcond_estimate < ILL_CONDITIONED)
        .then(|| format!("ill-conditioned Stein system: pivot ratio {rcond_estimate:e}, rho(conj(A)A) = {rho:e}"));
    Ok(SteinSolution {
        x: HermitianMatrix::symmetrized(&x),
        rho,
        rcond_estimate,
        warning,
    })
}

/// Largest eigenvalue modulus, via a complex Schur decomposition.
pub fn spectral_radius(m: &CMat) -> Result<f64> {
    linalg::require_square("spectral radius argument", m)?;
    if m.is_empty() {
        return Ok(0.0);
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(CdareError::Numerical("spectral radius of a non-finite matrix".into()));
    }
    let schur = Schur::try_new(m.clone(), f64::EPSILON, 100_000).ok_or_else(|| {
        CdareError::Numerical(format!(
            "Schur iteration did not converge ({}x{}, max entry {:e})",
            m.nrows(),
            m.ncols(),
            m.iter().map(|z| z.norm()).fold(0.0, f64::max)
        ))
    })?;
    let (_, t) = schur.unpack();
    Ok(t.diagonal().iter().map(|z| z.norm()).fold(0.0, f64::max))
}

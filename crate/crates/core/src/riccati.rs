//! Problem data and the Riccati map.
//!
//! For `X ∈ ℍ_n` write `R_X = R + Bᴴ X̄ B`. Whenever `R_X` is nonsingular the
//! Riccati map is
//!
//! ```text
//! ℛ(X) = Aᴴ X̄ A − Aᴴ X̄ B R_X⁻¹ Bᴴ X̄ A + H
//! ```
//!
//! together with the feedback gain `F_X = R_X⁻¹ Bᴴ X̄ A`, the closed-loop
//! matrix `T_X = A − B F_X` and its hat `T̂_X = T̄_X T_X`. Everything here is
//! a pure function of its arguments.

use std::fmt;

use crate::error::{CdareError, Result};
use crate::linalg::{self, CMat};
use crate::stein;

/// Numerical tolerances shared by every order comparison and domain test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative semidefinite tolerance: `M ≥ N` is accepted when
    /// `λ_min(M − N) ≥ −psd_rel · (1 + ‖M‖ + ‖N‖)`.
    pub psd_rel: f64,
    /// Reciprocal condition number below which `R_X` counts as singular.
    pub singular_rcond: f64,
    /// Relative deviation from Hermiticity accepted on input matrices.
    pub hermitian: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            psd_rel: 1e-9,
            singular_rcond: 1e-12,
            hermitian: 1e-10,
        }
    }
}

impl Tolerances {
    /// Absolute semidefinite tolerance for a comparison between matrices of
    /// the given spectral norms.
    pub fn psd_tol(&self, norm_lhs: f64, norm_rhs: f64) -> f64 {
        self.psd_rel * (1.0 + norm_lhs + norm_rhs)
    }

    /// Margin `λ_min(lhs − rhs)` and the tolerance to compare it against.
    pub fn order_margin(&self, lhs: &HermitianMatrix, rhs: &HermitianMatrix) -> (f64, f64) {
        let margin = linalg::lambda_min(&(lhs.as_matrix() - rhs.as_matrix()));
        (margin, self.psd_tol(lhs.norm(), rhs.norm()))
    }

    /// `lhs ≥ rhs` in the Loewner order, up to `psd_tol`.
    pub fn geq(&self, lhs: &HermitianMatrix, rhs: &HermitianMatrix) -> bool {
        let (margin, tol) = self.order_margin(lhs, rhs);
        margin >= -tol
    }
}

/// A Hermitian matrix. Every constructor symmetrizes its input.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(CMat);

impl HermitianMatrix {
    /// Accepts `m` if it is Hermitian within `tol` (relative), then symmetrizes.
    pub fn new(m: CMat, tol: f64) -> Result<Self> {
        Self::named("matrix", m, tol)
    }

    pub(crate) fn named(name: &'static str, m: CMat, tol: f64) -> Result<Self> {
        linalg::require_square(name, &m)?;
        let deviation = linalg::hermitian_deviation(&m);
        if !(deviation <= tol) {
            return Err(CdareError::NotHermitian { name, deviation });
        }
        Ok(Self(linalg::symmetrize(&m)))
    }

    /// Symmetrizes without checking; use for nominally Hermitian results.
    pub fn symmetrized(m: &CMat) -> Self {
        Self(linalg::symmetrize(m))
    }

    pub fn zeros(n: usize) -> Self {
        Self(CMat::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        Self(CMat::identity(n, n))
    }

    pub fn scaled_identity(n: usize, tau: f64) -> Self {
        Self(CMat::identity(n, n).scale(tau))
    }

    /// Real symmetric matrix from row-major data.
    pub fn from_real_rows(n: usize, data: &[f64]) -> Result<Self> {
        if data.len() != n * n {
            return Err(CdareError::Dimension {
                what: "real matrix data",
                expected: format!("{}", n * n),
                found: format!("{}", data.len()),
            });
        }
        Self::new(linalg::from_real_rows(n, n, data), 1e-12)
    }

    /// The 1×1 matrix `[x]`.
    pub fn scalar(x: f64) -> Self {
        Self(CMat::from_element(1, 1, linalg::c(x, 0.0)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &CMat {
        &self.0
    }

    pub fn into_inner(self) -> CMat {
        self.0
    }

    /// Spectral norm.
    pub fn norm(&self) -> f64 {
        linalg::spectral_norm(&self.0)
    }

    /// Eigenvalues, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::hermitian_eigenvalues(&self.0).iter().copied().collect()
    }

    pub fn lambda_min(&self) -> f64 {
        linalg::lambda_min(&self.0)
    }

    pub fn lambda_max(&self) -> f64 {
        linalg::lambda_max(&self.0)
    }

    /// Real part of the `(0, 0)` entry; the value of a 1×1 matrix.
    pub fn first(&self) -> f64 {
        self.0[(0, 0)].re
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::symmetrized(&(&self.0 - &other.0))
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::symmetrized(&(&self.0 + &other.0))
    }

    pub fn scale(&self, alpha: f64) -> Self {
        Self(self.0.scale(alpha))
    }
}

impl fmt::Display for HermitianMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.0.nrows() {
            let row: Vec<String> = (0..self.0.ncols())
                .map(|j| {
                    let z = self.0[(i, j)];
                    format!("{:e}{:+e}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

/// The data `(A, B, R, H)` together with `G = B R⁻¹ Bᴴ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    a: CMat,
    b: CMat,
    r: HermitianMatrix,
    h: HermitianMatrix,
    g: HermitianMatrix,
    tol: Tolerances,
}

impl ProblemInstance {
    pub fn new(a: CMat, b: CMat, r: CMat, h: CMat) -> Result<Self> {
        Self::with_tolerances(a, b, r, h, Tolerances::default())
    }

    pub fn with_tolerances(a: CMat, b: CMat, r: CMat, h: CMat, tol: Tolerances) -> Result<Self> {
        let n = linalg::require_square("A", &a)?;
        if n == 0 {
            return Err(CdareError::Dimension {
                what: "A",
                expected: "n >= 1".into(),
                found: "0x0".into(),
            });
        }
        if b.nrows() != n || b.ncols() == 0 {
            return Err(CdareError::Dimension {
                what: "B",
                expected: format!("{n}xm with m >= 1"),
                found: format!("{}x{}", b.nrows(), b.ncols()),
            });
        }
        let m = b.ncols();
        linalg::require_shape("R", &r, m, m)?;
        linalg::require_shape("H", &h, n, n)?;
        let r = HermitianMatrix::named("R", r, tol.hermitian)?;
        let h = HermitianMatrix::named("H", h, tol.hermitian)?;
        let rcond = linalg::rcond(r.as_matrix());
        if !(rcond >= tol.singular_rcond) {
            return Err(CdareError::Singular { name: "R", rcond });
        }
        let r_inv_bh = linalg::solve(r.as_matrix(), &b.adjoint())?;
        let g = HermitianMatrix::symmetrized(&(&b * r_inv_bh));
        Ok(Self { a, b, r, h, g, tol })
    }

    /// Scalar instance `a, b ∈ ℂ`, `r, h ∈ ℝ`.
    pub fn scalar(a: num_complex::Complex64, b: num_complex::Complex64, r: f64, h: f64) -> Result<Self> {
        let one = |z| CMat::from_element(1, 1, z);
        Self::new(one(a), one(b), one(linalg::c(r, 0.0)), one(linalg::c(h, 0.0)))
    }

    pub fn a(&self) -> &CMat {
        &self.a
    }
    pub fn b(&self) -> &CMat {
        &self.b
    }
    pub fn r(&self) -> &HermitianMatrix {
        &self.r
    }
    pub fn h(&self) -> &HermitianMatrix {
        &self.h
    }
    pub fn g(&self) -> &HermitianMatrix {
        &self.g
    }
    pub fn n(&self) -> usize {
        self.a.nrows()
    }
    pub fn m(&self) -> usize {
        self.b.ncols()
    }
    pub fn tolerances(&self) -> &Tolerances {
        &self.tol
    }

    pub fn set_tolerances(&mut self, tol: Tolerances) {
        self.tol = tol;
    }

    fn check_dim(&self, x: &HermitianMatrix) -> Result<()> {
        if x.dim() != self.n() {
            return Err(CdareError::Dimension {
                what: "X",
                expected: format!("{0}x{0}", self.n()),
                found: format!("{0}x{0}", x.dim()),
            });
        }
        Ok(())
    }

    /// `R_X = R + Bᴴ X̄ B` and `F_X = R_X⁻¹ Bᴴ X̄ A`, or a domain error.
    fn gain(&self, x: &HermitianMatrix) -> Result<(HermitianMatrix, CMat)> {
        self.check_dim(x)?;
        let xbar = linalg::conj(x.as_matrix());
        let bh_xbar = self.b.adjoint() * &xbar;
        let r_x = HermitianMatrix::symmetrized(&(self.r.as_matrix() + &bh_xbar * &self.b));
        let rcond = linalg::rcond(r_x.as_matrix());
        if !(rcond >= self.tol.singular_rcond) {
            return Err(CdareError::OutsideDomain { rcond });
        }
        let f = linalg::solve(r_x.as_matrix(), &(bh_xbar * &self.a))?;
        Ok((r_x, f))
    }

    /// `R_X`, or a domain error when it is numerically singular.
    pub fn r_x(&self, x: &HermitianMatrix) -> Result<HermitianMatrix> {
        self.gain(x).map(|(r_x, _)| r_x)
    }

    /// Feedback gain `F_X`.
    pub fn feedback_gain(&self, x: &HermitianMatrix) -> Result<CMat> {
        self.gain(x).map(|(_, f)| f)
    }
}

/// Quantities derived from the problem at a given `X`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoop {
    /// `F_X = R_X⁻¹ Bᴴ X̄ A` (m×n).
    pub f: CMat,
    /// `T_X = A − B F_X`.
    pub t: CMat,
    /// `T̂_X = T̄_X T_X`.
    pub t_hat: CMat,
    /// `R_X = R + Bᴴ X̄ B`.
    pub r_x: HermitianMatrix,
    /// `ρ(T̂_X)`.
    pub rho_t_hat: f64,
}

/// `M̂ = M̄ M`.
pub fn hat(m: &CMat) -> Result<CMat> {
    linalg::require_square("hat argument", m)?;
    Ok(linalg::conj(m) * m)
}

/// The Riccati map `ℛ(X)`, evaluated through `R_X`.
pub fn riccati_op(p: &ProblemInstance, x: &HermitianMatrix) -> Result<HermitianMatrix> {
    let (_, f) = p.gain(x)?;
    let ah_xbar = p.a.adjoint() * linalg::conj(x.as_matrix());
    let value = &ah_xbar * &p.a - &ah_xbar * &p.b * f + p.h.as_matrix();
    Ok(HermitianMatrix::symmetrized(&value))
}

/// The compact form `Aᴴ X̄ (I + G X̄)⁻¹ A + H`. Only defined when `I + G X̄`
/// is invertible; kept as a cross-check for [`riccati_op`].
pub fn riccati_op_compact(p: &ProblemInstance, x: &HermitianMatrix) -> Result<HermitianMatrix> {
    p.check_dim(x)?;
    let n = p.n();
    let xbar = linalg::conj(x.as_matrix());
    let m = CMat::identity(n, n) + p.g.as_matrix() * &xbar;
    let rcond = linalg::rcond(&m);
    if !(rcond >= p.tol.singular_rcond) {
        return Err(CdareError::Singular {
            name: "I + G X̄", rcond
        });
    }
    let value = p.a.adjoint() * xbar * linalg::solve(&m, &p.a)? + p.h.as_matrix();
    Ok(HermitianMatrix::symmetrized(&value))
}

/// `F_X`, `T_X`, `T̂_X`, `R_X` and `ρ(T̂_X)`.
pub fn closed_loop(p: &ProblemInstance, x: &HermitianMatrix) -> Result<ClosedLoop> {
    let (r_x, f) = p.gain(x)?;
    let t = &p.a - &p.b * &f;
    let t_hat = hat(&t)?;
    let rho_t_hat = stein::spectral_radius(&t_hat)?;
    Ok(ClosedLoop {
        f,
        t,
        t_hat,
        r_x,
        rho_t_hat,
    })
}

/// `K(Y, X) = (F_Y − F_X)ᴴ R_X (F_Y − F_X)`.
pub fn weighted_gap(p: &ProblemInstance, y: &HermitianMatrix, x: &HermitianMatrix) -> Result<HermitianMatrix> {
    let f_y = p.feedback_gain(y)?;
    let (r_x, f_x) = p.gain(x)?;
    let d = f_y - f_x;
    Ok(HermitianMatrix::symmetrized(&(d.adjoint() * r_x.as_matrix() * d)))
}

/// `H_Y = H + F_Yᴴ R F_Y`.
pub fn shifted_h(p: &ProblemInstance, y: &HermitianMatrix) -> Result<HermitianMatrix> {
    let f_y = p.feedback_gain(y)?;
    let value = p.h.as_matrix() + f_y.adjoint() * p.r.as_matrix() * f_y;
    Ok(HermitianMatrix::symmetrized(&value))
}

/// Spectral norm of
/// `(X − ℛ(X)) − (𝒞_{T_Y}(X) − H_Y + K(Y, X))`.
///
/// The two sides agree exactly in exact arithmetic, so the result is pure
/// rounding error.
pub fn identity_residual(p: &ProblemInstance, x: &HermitianMatrix, y: &HermitianMatrix) -> Result<f64> {
    let lhs = x.as_matrix() - riccati_op(p, x)?.as_matrix();
    let t_y = closed_loop(p, y)?.t;
    let rhs =
        stein::stein_apply(&t_y, x)?.as_matrix() - shifted_h(p, y)?.as_matrix() + weighted_gap(p, y, x)?.as_matrix();
    Ok(linalg::spectral_norm(&(lhs - rhs)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    fn scalar_case_one() -> ProblemInstance {
        ProblemInstance::scalar(c(2.0, 0.0), c(1.0, 0.0), 1.0, 2.0).unwrap()
    }

    fn x_max() -> f64 {
        (5.0 + 33f64.sqrt()) / 2.0
    }

    #[test]
    fn hat_examples() {
        let eye = CMat::identity(3, 3);
        assert_eq!(hat(&eye).unwrap(), eye);
        let i = CMat::from_element(1, 1, c(0.0, 1.0));
        assert_eq!(hat(&i).unwrap()[(0, 0)], c(1.0, 0.0));
        // (i·P)‾(i·P) = (−i)(i) P·P = P² = I for the swap P
        let m = CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, 1.0), c(0.0, 1.0), c(0.0, 0.0)]);
        assert_eq!(hat(&m).unwrap(), CMat::identity(2, 2));
        assert!(matches!(hat(&CMat::zeros(2, 3)), Err(CdareError::Dimension { .. })));
    }

    #[test]
    fn riccati_with_zero_a_is_h() {
        let p = ProblemInstance::scalar(c(0.0, 0.0), c(1.0, 0.5), 1.0, 3.0).unwrap();
        let y = riccati_op(&p, &HermitianMatrix::scalar(7.0)).unwrap();
        assert_eq!(y.first(), 3.0);
    }

    #[test]
    fn riccati_at_zero_is_h() {
        let p = scalar_case_one();
        assert_eq!(riccati_op(&p, &HermitianMatrix::zeros(1)).unwrap().first(), 2.0);
    }

    #[test]
    fn scalar_maximal_root_is_fixed_point() {
        let p = scalar_case_one();
        let xm = x_max();
        let y = riccati_op(&p, &HermitianMatrix::scalar(xm)).unwrap();
        assert!((y.first() - xm).abs() < 1e-13);
    }

    #[test]
    fn closed_loop_examples() {
        let p = scalar_case_one();
        let cl = closed_loop(&p, &HermitianMatrix::zeros(1)).unwrap();
        assert_eq!(cl.f[(0, 0)], c(0.0, 0.0));
        assert_eq!(cl.t, *p.a());
        assert_eq!(cl.r_x, *p.r());

        let xm = x_max();
        let cl = closed_loop(&p, &HermitianMatrix::scalar(xm)).unwrap();
        let expected = 4.0 / (1.0 + xm).powi(2);
        assert!((cl.rho_t_hat - expected).abs() < 1e-14);
        assert!((cl.rho_t_hat - 0.0985).abs() < 1e-4);
    }

    #[test]
    fn no_control_channel_gives_open_loop() {
        let a = CMat::from_row_slice(2, 2, &[c(0.3, 0.1), c(0.0, 1.0), c(0.2, 0.0), c(-0.5, 0.2)]);
        let p = ProblemInstance::new(a.clone(), CMat::zeros(2, 1), CMat::identity(1, 1), CMat::identity(2, 2)).unwrap();
        let x = HermitianMatrix::from_real_rows(2, &[2.0, 1.0, 1.0, 3.0]).unwrap();
        let cl = closed_loop(&p, &x).unwrap();
        assert_eq!(cl.f, CMat::zeros(1, 2));
        assert_eq!(cl.t, a);
        assert_eq!(
            weighted_gap(&p, &HermitianMatrix::zeros(2), &x).unwrap(),
            HermitianMatrix::zeros(2)
        );
        assert_eq!(shifted_h(&p, &x).unwrap(), *p.h());
    }

    #[test]
    fn weighted_gap_and_shifted_h_scalar() {
        let p = scalar_case_one();
        let k = weighted_gap(&p, &HermitianMatrix::zeros(1), &HermitianMatrix::scalar(1.0)).unwrap();
        assert!((k.first() - 2.0).abs() < 1e-15);
        let x = HermitianMatrix::scalar(4.0);
        assert_eq!(weighted_gap(&p, &x, &x).unwrap(), HermitianMatrix::zeros(1));
        assert_eq!(shifted_h(&p, &HermitianMatrix::zeros(1)).unwrap(), *p.h());
        assert!((shifted_h(&p, &HermitianMatrix::scalar(1.0)).unwrap().first() - 3.0).abs() < 1e-15);
    }

    #[test]
    fn identity_residual_scalar() {
        let p = scalar_case_one();
        let zero = HermitianMatrix::zeros(1);
        assert_eq!(identity_residual(&p, &zero, &zero).unwrap(), 0.0);
        let r = identity_residual(&p, &HermitianMatrix::scalar(5.0), &HermitianMatrix::scalar(1.0)).unwrap();
        assert!(r <= 1e-12, "{r}");
    }

    #[test]
    fn singular_r_x_is_a_domain_error() {
        // r + |b|² x = 1 + x vanishes at x = −1
        let p = scalar_case_one();
        let x = HermitianMatrix::scalar(-1.0);
        assert!(matches!(riccati_op(&p, &x), Err(CdareError::OutsideDomain { .. })));
        assert!(matches!(closed_loop(&p, &x), Err(CdareError::OutsideDomain { .. })));
    }

    #[test]
    fn instance_validation() {
        let one = CMat::identity(1, 1);
        let err = ProblemInstance::new(one.clone(), one.clone(), CMat::zeros(1, 1), one.clone()).unwrap_err();
        assert!(matches!(err, CdareError::Singular { name: "R", .. }));
        let h = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 1.0), c(1.0, 1.0), c(1.0, 0.0)]);
        let err = ProblemInstance::new(CMat::identity(2, 2), CMat::zeros(2, 1), one.clone(), h).unwrap_err();
        assert!(matches!(err, CdareError::NotHermitian { name: "H", .. }));
        let err = ProblemInstance::new(
            CMat::identity(2, 2),
            CMat::zeros(3, 1),
            one.clone(),
            CMat::identity(2, 2),
        );
        assert!(matches!(err, Err(CdareError::Dimension { what: "B", .. })));
    }

    #[test]
    fn g_matches_definition() {
        let p = ProblemInstance::scalar(c(1.0, 0.0), c(1.0, 1.0), 4.0, 0.0).unwrap();
        assert!((p.g().first() - 0.5).abs() < 1e-15);
    }
}

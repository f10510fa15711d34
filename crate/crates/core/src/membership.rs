//! Membership tests for the sets used by the fixed-point theory:
//!
//! * `ℙ = {X : R_X > 0}`
//! * `𝕋 = {X : ρ(T̂_X) < 1}`
//! * `ℛ≤ = {X : X ≤ ℛ(X)}` and `ℛ≥ = {X : X ≥ ℛ(X)}`
//! * `𝒮≥`, the set of `X` with `𝒞_{T_W}(X) ≥ H_W` for some `W ∈ 𝕋`.
//!
//! `𝒮≥` is a union over all of `𝕋`, which cannot be decided in general.
//! Here it is only ever certified relative to one concrete witness `W`.

use serde::Serialize;

use crate::error::{CdareError, Result};
use crate::riccati::{self, HermitianMatrix, ProblemInstance};
use crate::stein;

/// Slack on `ρ(T̂_X) < 1` used when cross-checking certificates.
pub const RHO_TOL: f64 = 1e-8;

/// A semidefinite margin and the verdict it implies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Margin {
    pub holds: bool,
    /// Smallest eigenvalue of the matrix whose semidefiniteness is tested.
    pub margin: f64,
    pub tolerance: f64,
}

impl Margin {
    /// `margin ≥ −tol`.
    fn semidefinite(margin: f64, tolerance: f64) -> Self {
        Self {
            holds: margin >= -tolerance,
            margin,
            tolerance,
        }
    }

    /// `margin > tol`.
    fn definite(margin: f64, tolerance: f64) -> Self {
        Self {
            holds: margin > tolerance,
            margin,
            tolerance,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stability {
    pub holds: bool,
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SGeqCertificate {
    Checked {
        holds: bool,
        margin: f64,
        tolerance: f64,
        witness: HermitianMatrix,
    },
    /// The supplied witness is not in `𝕋`.
    WitnessInvalid { witness: HermitianMatrix, rho: f64 },
}

impl SGeqCertificate {
    pub fn holds(&self) -> bool {
        matches!(self, Self::Checked { holds: true, .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MembershipReport {
    /// `λ_min(R_X)`.
    pub in_p: Margin,
    /// `ρ(T̂_X)`.
    pub in_t: Stability,
    /// `λ_min(ℛ(X) − X)`.
    pub in_r_leq: Margin,
    /// `λ_min(X − ℛ(X))`.
    pub in_r_geq: Margin,
    /// `λ_min(𝒞_{T_W}(X) − H_W)` for the witness `W`, if one was given.
    pub in_s_geq: Option<SGeqCertificate>,
    /// `‖X − ℛ(X)‖`.
    pub residual: f64,
}

impl MembershipReport {
    pub fn is_fixed_point(&self) -> bool {
        self.in_r_leq.holds && self.in_r_geq.holds
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    /// The `𝕋` witness, present only if it validated.
    pub t_nonempty_witness: Option<HermitianMatrix>,
    /// The `ℛ≤ ∩ ℙ` witness, present only if it validated.
    pub rleq_p_nonempty_witness: Option<HermitianMatrix>,
    pub satisfied: bool,
    /// Why a candidate was rejected.
    pub notes: Vec<String>,
}

/// `𝒮≥` test of `x` against the witness `w`.
pub fn s_geq_certificate(p: &ProblemInstance, x: &HermitianMatrix, w: &HermitianMatrix) -> Result<SGeqCertificate> {
    let cl = riccati::closed_loop(p, w)?;
    if !(cl.rho_t_hat < 1.0) {
        return Ok(SGeqCertificate::WitnessInvalid {
            witness: w.clone(),
            rho: cl.rho_t_hat,
        });
    }
    let lhs = stein::stein_apply(&cl.t, x)?;
    let h_w = riccati::shifted_h(p, w)?;
    let (margin, tolerance) = p.tolerances().order_margin(&lhs, &h_w);
    Ok(SGeqCertificate::Checked {
        holds: margin >= -tolerance,
        margin,
        tolerance,
        witness: w.clone(),
    })
}

/// Classify `x` against every set; `𝒮≥` only when a witness is given.
pub fn classify(
    p: &ProblemInstance,
    x: &HermitianMatrix,
    witness: Option<&HermitianMatrix>,
) -> Result<MembershipReport> {
    let tol = p.tolerances();
    let cl = riccati::closed_loop(p, x)?;
    let rx = riccati::riccati_op(p, x)?;

    let in_p = Margin::definite(cl.r_x.lambda_min(), tol.psd_tol(cl.r_x.norm(), 0.0));
    let in_t = Stability {
        holds: cl.rho_t_hat < 1.0,
        rho: cl.rho_t_hat,
    };
    let (leq, leq_tol) = tol.order_margin(&rx, x);
    let (geq, geq_tol) = tol.order_margin(x, &rx);
    let in_s_geq = witness.map(|w| s_geq_certificate(p, x, w)).transpose()?;
    Ok(MembershipReport {
        in_p,
        in_t,
        in_r_leq: Margin::semidefinite(leq, leq_tol),
        in_r_geq: Margin::semidefinite(geq, geq_tol),
        in_s_geq,
        residual: x.sub(&rx).norm(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityCertificate {
    pub holds: bool,
    /// `λ_min(𝒞_{T_X}(Y) − K(X_T, X))`.
    pub margin: f64,
    /// Directly computed `ρ(T̂_X)`.
    pub measured_rho: f64,
    /// Set when `holds` but `measured_rho ≥ 1 + RHO_TOL`.
    pub warning: Option<String>,
}

/// Sufficient condition for `X ∈ 𝕋`: with `X ∈ ℙ`, `Y ≥ 0` and `X_T ∈ 𝕋`,
/// `𝒞_{T_X}(Y) ≥ K(X_T, X)` implies `ρ(T̂_X) < 1`.
pub fn stability_certificate(
    p: &ProblemInstance,
    x: &HermitianMatrix,
    x_t: &HermitianMatrix,
    y: &HermitianMatrix,
) -> Result<StabilityCertificate> {
    let tol = p.tolerances();
    let cl = riccati::closed_loop(p, x)?;
    let p_margin = cl.r_x.lambda_min();
    if !(p_margin > tol.psd_tol(cl.r_x.norm(), 0.0)) {
        return Err(CdareError::Argument(format!(
            "X not in P: lambda_min(R_X) = {p_margin:e}"
        )));
    }
    let y_margin = y.lambda_min();
    if !(y_margin >= -tol.psd_tol(y.norm(), 0.0)) {
        return Err(CdareError::Argument(format!(
            "Y not positive semidefinite: lambda_min(Y) = {y_margin:e}"
        )));
    }
    let witness_rho = riccati::closed_loop(p, x_t)?.rho_t_hat;
    if !(witness_rho < 1.0) {
        return Err(CdareError::Argument(format!(
            "X_T not in T: rho(T_hat) = {witness_rho:e}"
        )));
    }
    let lhs = stein::stein_apply(&cl.t, y)?;
    let k = riccati::weighted_gap(p, x_t, x)?;
    let (margin, mtol) = tol.order_margin(&lhs, &k);
    let holds = margin >= -mtol;
    let warning = (holds && cl.rho_t_hat >= 1.0 + RHO_TOL).then(|| {
        format!(
            "numerical inconsistency: certificate holds but rho(T_hat_X) = {:e}",
            cl.rho_t_hat
        )
    });
    Ok(StabilityCertificate {
        holds,
        margin,
        measured_rho: cl.rho_t_hat,
        warning,
    })
}

/// Validate `X_T ∈ 𝕋` and `X_P ∈ ℛ≤ ∩ ℙ`. Failures are reported, not raised.
pub fn check_assumptions(p: &ProblemInstance, x_t: &HermitianMatrix, x_p: &HermitianMatrix) -> AssumptionReport {
    let mut notes = Vec::new();
    let t_ok = match riccati::closed_loop(p, x_t) {
        Ok(cl) if cl.rho_t_hat < 1.0 => true,
        Ok(cl) => {
            notes.push(format!("X_T rejected: rho(T_hat) = {:e}", cl.rho_t_hat));
            false
        }
        Err(e) => {
            notes.push(format!("X_T rejected: {e}"));
            false
        }
    };
    let p_ok = match classify(p, x_p, None) {
        Ok(rep) if rep.in_p.holds && rep.in_r_leq.holds => true,
        Ok(rep) => {
            notes.push(format!(
                "X_P rejected: lambda_min(R_X) = {:e}, lambda_min(R(X) - X) = {:e}",
                rep.in_p.margin, rep.in_r_leq.margin
            ));
            false
        }
        Err(e) => {
            notes.push(format!("X_P rejected: {e}"));
            false
        }
    };
    AssumptionReport {
        t_nonempty_witness: t_ok.then(|| x_t.clone()),
        rleq_p_nonempty_witness: p_ok.then(|| x_p.clone()),
        satisfied: t_ok && p_ok,
        notes,
    }
}

/// Heuristic candidate list: `0` and `±10^j I` for `j = −3..=6`.
pub fn witness_grid(n: usize) -> Vec<HermitianMatrix> {
    let mut grid = vec![HermitianMatrix::zeros(n)];
    for j in -3..=6 {
        let tau = 10f64.powi(j);
        grid.push(HermitianMatrix::scaled_identity(n, tau));
        grid.push(HermitianMatrix::scaled_identity(n, -tau));
    }
    grid
}

/// Heuristic: the first of `extra` followed by [`witness_grid`] that lies in
/// `𝕋`. No guarantee of success even when `𝕋` is nonempty.
pub fn heuristic_witness_search(p: &ProblemInstance, extra: &[HermitianMatrix]) -> Option<HermitianMatrix> {
    extra
        .iter()
        .cloned()
        .chain(witness_grid(p.n()))
        .find(|w| matches!(riccati::closed_loop(p, w), Ok(cl) if cl.rho_t_hat < 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, CMat};

    fn case_one() -> ProblemInstance {
        ProblemInstance::scalar(c(2.0, 0.0), c(1.0, 0.0), 1.0, 2.0).unwrap()
    }

    const X_MAX: f64 = 5.372281323269014;
    const X_MIN: f64 = -0.3722813232690143;

    #[test]
    fn classify_maximal_root() {
        let p = case_one();
        let rep = classify(&p, &HermitianMatrix::scalar(X_MAX), None).unwrap();
        assert!(rep.in_t.holds);
        assert!((rep.in_t.rho - 0.0985).abs() < 1e-4);
        assert!(rep.in_p.holds);
        assert!(rep.is_fixed_point());
        assert!(rep.in_s_geq.is_none());
    }

    #[test]
    fn classify_zero_and_minimal_root() {
        let p = case_one();
        let rep = classify(&p, &HermitianMatrix::zeros(1), None).unwrap();
        assert!(rep.in_r_leq.holds && rep.in_p.holds);
        assert!(!rep.in_r_geq.holds);

        let rep = classify(&p, &HermitianMatrix::scalar(X_MIN), None).unwrap();
        assert!(!rep.in_t.holds);
        // t̂ at x_m is the reciprocal of t̂ at x_M
        let t_max = 4.0 / (1.0 + X_MAX).powi(2);
        assert!((rep.in_t.rho * t_max - 1.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_witness_is_flagged() {
        let p = case_one();
        let rep = classify(
            &p,
            &HermitianMatrix::scalar(10.0),
            Some(&HermitianMatrix::scalar(X_MIN)),
        )
        .unwrap();
        assert!(matches!(rep.in_s_geq, Some(SGeqCertificate::WitnessInvalid { .. })));
    }

    #[test]
    fn self_witness_certificate() {
        let p = case_one();
        let x = HermitianMatrix::scalar(X_MAX);
        let cert = stability_certificate(&p, &x, &x, &HermitianMatrix::zeros(1)).unwrap();
        assert!(cert.holds && cert.warning.is_none());
        let cert = stability_certificate(&p, &x, &x, &HermitianMatrix::scalar(1.0)).unwrap();
        let t_hat = 4.0 / (1.0 + X_MAX).powi(2);
        assert!((cert.margin - (1.0 - t_hat)).abs() < 1e-12);
        assert!((cert.margin - 0.9015).abs() < 1e-4);
    }

    #[test]
    fn certificate_preconditions() {
        let p = case_one();
        let x = HermitianMatrix::scalar(X_MAX);
        let bad_y = stability_certificate(&p, &x, &x, &HermitianMatrix::scalar(-1.0));
        assert!(matches!(bad_y, Err(CdareError::Argument(msg)) if msg.contains("Y")));
        let bad_t = stability_certificate(&p, &x, &HermitianMatrix::scalar(X_MIN), &HermitianMatrix::zeros(1));
        assert!(matches!(bad_t, Err(CdareError::Argument(msg)) if msg.contains("X_T")));
        let bad_p = stability_certificate(&p, &HermitianMatrix::scalar(-3.0), &x, &HermitianMatrix::zeros(1));
        assert!(matches!(bad_p, Err(CdareError::Argument(msg)) if msg.contains("P")));
    }

    #[test]
    fn certificate_without_control() {
        let a = CMat::from_row_slice(2, 2, &[c(0.5, 0.2), c(0.1, 0.0), c(0.0, -0.3), c(0.4, 0.0)]);
        let p = ProblemInstance::new(a.clone(), CMat::zeros(2, 1), CMat::identity(1, 1), CMat::identity(2, 2)).unwrap();
        let zero = HermitianMatrix::zeros(2);
        let cert = stability_certificate(&p, &zero, &zero, &zero).unwrap();
        assert!(cert.holds);
        let expected = stein::spectral_radius(&riccati::hat(&a).unwrap()).unwrap();
        assert!((cert.measured_rho - expected).abs() < 1e-15);
    }

    #[test]
    fn assumptions_examples() {
        let p = case_one();
        let rep = check_assumptions(&p, &HermitianMatrix::scalar(X_MAX), &HermitianMatrix::zeros(1));
        assert!(rep.satisfied);

        let p = ProblemInstance::new(
            CMat::zeros(2, 2),
            CMat::zeros(2, 1),
            CMat::identity(1, 1),
            CMat::zeros(2, 2),
        )
        .unwrap();
        let zero = HermitianMatrix::zeros(2);
        assert!(check_assumptions(&p, &zero, &zero).satisfied);
    }

    #[test]
    fn assumptions_fail_in_case_three() {
        let p = ProblemInstance::scalar(c(2.0, 0.0), c(1.0, 0.0), 1.0, -10.0).unwrap();
        let x_t = HermitianMatrix::scalar(3.0);
        for x_p in witness_grid(1) {
            let rep = check_assumptions(&p, &x_t, &x_p);
            assert!(rep.t_nonempty_witness.is_some());
            assert!(!rep.satisfied);
        }
    }

    #[test]
    fn heuristic_finds_a_witness() {
        let p = case_one();
        let w = heuristic_witness_search(&p, &[]).unwrap();
        assert!(riccati::closed_loop(&p, &w).unwrap().rho_t_hat < 1.0);
        let w = heuristic_witness_search(&p, &[HermitianMatrix::scalar(X_MAX)]).unwrap();
        assert_eq!(w.first(), X_MAX);
    }
}

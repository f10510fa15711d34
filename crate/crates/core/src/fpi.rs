//! Fixed-point iteration `X_{k+1} = ℛ(X_k)`.
//!
//! Started from a matrix certified in `𝒮≥` (see [`initial_matrix`]) and under
//! the standing assumptions `𝕋 ≠ ∅`, `ℛ≤ ∩ ℙ ≠ ∅`, the iterates are
//! nonincreasing, stay in `ℙ ∩ 𝕋`, are bounded below by every element of
//! `ℛ≤ ∩ ℙ`, and converge at least linearly to the maximal solution `X_M`
//! with `limsup ‖X_k − X_M‖^{1/k} ≤ ρ(T̂_{X_M})`.
//!
//! The solver also runs from arbitrary starts. It then makes no promise and
//! only records what happens.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{CdareError, Result};
use crate::membership::{self, SGeqCertificate, RHO_TOL};
use crate::riccati::{self, HermitianMatrix, ProblemInstance};
use crate::stein;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverOptions {
    /// Stop when `‖X_k − ℛ(X_k)‖ ≤ tol_residual · (1 + ‖X_k‖)`.
    pub tol_residual: f64,
    pub max_iter: usize,
    /// Relative tolerance for the monotonicity test
    /// `λ_max(X_{k+1} − X_k) ≤ psd_tol · (1 + ‖X_k‖ + ‖X_{k+1}‖)`.
    pub psd_tol: f64,
    pub check_monotone: bool,
    pub check_stability: bool,
    pub record_trace: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol_residual: 1e-12,
            max_iter: 10_000,
            psd_tol: 1e-9,
            check_monotone: true,
            check_stability: true,
            record_trace: false,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol_residual > 0.0) {
            return Err(CdareError::Argument(format!(
                "tol_residual must be positive, got {:e}",
                self.tol_residual
            )));
        }
        if self.max_iter == 0 {
            return Err(CdareError::Argument("max_iter must be at least 1".into()));
        }
        if !(self.psd_tol >= 0.0) {
            return Err(CdareError::Argument(format!(
                "psd_tol must be nonnegative, got {:e}",
                self.psd_tol
            )));
        }
        Ok(())
    }
}

/// One row per iterate `X_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub k: usize,
    /// `‖X_k − ℛ(X_k)‖`.
    pub residual: f64,
    /// `λ_max(X_{k+1} − X_k)`.
    pub monotone_gap: f64,
    /// `ρ(T̂_{X_k})`.
    pub rho: f64,
    /// `λ_min(R_{X_k})`.
    pub lambda_min_rx: f64,
    /// `‖X_{k+1} − X_k‖`.
    pub step_norm: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct IterationTrace {
    pub rows: Vec<TraceRow>,
    /// `X_0, X_1, …`, aligned with `rows`.
    pub iterates: Vec<HermitianMatrix>,
}

impl IterationTrace {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub const CSV_HEADER: &'static str = "k,residual,monotone_gap,rho,lambda_min_RX,step_norm";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{:e},{:e},{:e},{:e},{:e}",
                r.k, r.residual, r.monotone_gap, r.rho, r.lambda_min_rx, r.step_norm
            );
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Status {
    Converged,
    MaxIterExceeded,
    LeftDomain,
    MonotonicityViolated,
}

/// Whether the run carries the convergence guarantees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Regime {
    /// `X_0` verified in `𝒮≥` against a witness.
    Certified,
    Uncertified,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionReport {
    pub x: HermitianMatrix,
    /// Number of FPI steps applied to reach `x`.
    pub iterations: usize,
    /// `‖x − ℛ(x)‖`.
    pub residual: f64,
    /// `ρ(T̂_x)`; NaN when `x` left the domain.
    pub rho_final: f64,
    /// Empirical `max ‖X_k − x‖^{1/k}` over the last third of the trace.
    pub rate_estimate: Option<f64>,
    /// `‖X_{k+1} − X_k‖ / ‖X_k − X_{k−1}‖` at the last step; close to one
    /// signals sublinear convergence.
    pub contraction_ratio: Option<f64>,
    pub status: Status,
    pub regime: Regime,
    /// Step at which the domain was left or monotonicity failed.
    pub failed_step: Option<usize>,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub trace: Option<IterationTrace>,
}

/// A starting matrix in `𝒮≥` built from a `𝕋` witness.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialMatrix {
    pub x0: HermitianMatrix,
    pub witness: HermitianMatrix,
    pub certificate: SGeqCertificate,
    pub warning: Option<String>,
}

/// `X_0 = 𝒞_{T_W}⁻¹(H_W)` for a witness `W ∈ 𝕋`, so that `𝒞_{T_W}(X_0) = H_W`
/// holds with equality and `X_0 ∈ 𝒮≥`.
pub fn initial_matrix(p: &ProblemInstance, x_t: &HermitianMatrix) -> Result<InitialMatrix> {
    let cl = riccati::closed_loop(p, x_t)?;
    if !(cl.rho_t_hat < 1.0) {
        return Err(CdareError::Argument(format!(
            "witness not in T: rho(T_hat) = {:e}",
            cl.rho_t_hat
        )));
    }
    let h_w = riccati::shifted_h(p, x_t)?;
    let sol = stein::stein_solve(&cl.t, &h_w)?;
    let certificate = membership::s_geq_certificate(p, &sol.x, x_t)?;
    let mut warning = sol.warning;
    if !certificate.holds() {
        warning.get_or_insert_with(|| "initial matrix failed its own S>= check".into());
    }
    Ok(InitialMatrix {
        x0: sol.x,
        witness: x_t.clone(),
        certificate,
        warning,
    })
}

/// Empirical rate `max_{k in last third} ‖X_k − X★‖^{1/k}`.
///
/// Uses iterates with `k ≥ 1` and nonzero error; at least five are required.
pub fn rate_estimate(trace: &IterationTrace, x_star: &HermitianMatrix) -> Result<f64> {
    let errors: Vec<(usize, f64)> = trace
        .iterates
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, x)| (k, x.sub(x_star).norm()))
        .filter(|&(_, e)| e > 0.0)
        .collect();
    if errors.len() < 5 {
        return Err(CdareError::Argument(format!(
            "rate estimate needs at least 5 iterates away from X*, trace has {}",
            errors.len()
        )));
    }
    let tail = errors.len().div_ceil(3);
    Ok(errors[errors.len() - tail..]
        .iter()
        .map(|&(k, e)| e.powf(1.0 / k as f64))
        .fold(0.0, f64::max))
}

/// Run the fixed-point iteration from `x0`. When `witness` is supplied and
/// certifies `x0 ∈ 𝒮≥`, the run is [`Regime::Certified`]: monotonicity
/// violations stop it and leaving `ℙ` counts as leaving the domain.
pub fn fpi_solve(
    p: &ProblemInstance,
    x0: &HermitianMatrix,
    witness: Option<&HermitianMatrix>,
    opts: &SolverOptions,
) -> Result<SolutionReport> {
    opts.validate()?;
    if x0.dim() != p.n() {
        return Err(CdareError::Dimension {
            what: "X0",
            expected: format!("{0}x{0}", p.n()),
            found: format!("{0}x{0}", x0.dim()),
        });
    }
    let mut warnings = Vec::new();
    let regime = match witness {
        None => Regime::Uncertified,
        Some(w) => match membership::s_geq_certificate(p, x0, w) {
            Ok(cert) if cert.holds() => Regime::Certified,
            Ok(_) => {
                warnings.push("X0 not certified in S>= by the supplied witness".into());
                Regime::Uncertified
            }
            Err(e) => {
                warnings.push(format!("witness check failed: {e}"));
                Regime::Uncertified
            }
        },
    };
    let certified = regime == Regime::Certified;

    let mut trace = opts.record_trace.then(IterationTrace::default);
    let mut x = x0.clone();
    let mut prev_step: Option<f64> = None;
    let mut contraction_ratio = None;
    let mut warned_monotone = false;
    let mut warned_stability = false;

    let finish =
        |x: HermitianMatrix, k, residual, rho_final, status, failed_step, contraction_ratio, warnings, trace| {
            SolutionReport {
                x,
                iterations: k,
                residual,
                rho_final,
                rate_estimate: None,
                contraction_ratio,
                status,
                regime,
                failed_step,
                warnings,
                trace,
            }
        };

    let mut k = 0;
    let mut report = loop {
        let cl = match riccati::closed_loop(p, &x) {
            Ok(cl) => cl,
            Err(CdareError::OutsideDomain { rcond }) => {
                warnings.push(format!("R_X singular at step {k} (rcond {rcond:e})"));
                break finish(
                    x,
                    k,
                    f64::NAN,
                    f64::NAN,
                    Status::LeftDomain,
                    Some(k),
                    contraction_ratio,
                    warnings,
                    trace,
                );
            }
            Err(e) => return Err(e),
        };
        let lambda_min_rx = cl.r_x.lambda_min();
        if certified && !(lambda_min_rx > 0.0) {
            warnings.push(format!(
                "R_X lost positivity at step {k}: lambda_min = {lambda_min_rx:e}"
            ));
            let residual = riccati::riccati_op(p, &x)
                .map(|rx| x.sub(&rx).norm())
                .unwrap_or(f64::NAN);
            break finish(
                x,
                k,
                residual,
                cl.rho_t_hat,
                Status::LeftDomain,
                Some(k),
                contraction_ratio,
                warnings,
                trace,
            );
        }
        let next = riccati::riccati_op(p, &x)?;
        let diff = next.sub(&x);
        let step_norm = diff.norm();
        let residual = step_norm;
        let monotone_gap = diff.lambda_max();
        if let Some(prev) = prev_step {
            if prev > 0.0 {
                contraction_ratio = Some(step_norm / prev);
            }
        }
        prev_step = Some(step_norm);

        if let Some(t) = trace.as_mut() {
            t.rows.push(TraceRow {
                k,
                residual,
                monotone_gap,
                rho: cl.rho_t_hat,
                lambda_min_rx,
                step_norm,
            });
            t.iterates.push(x.clone());
        }

        if !residual.is_finite() {
            warnings.push(format!("non-finite residual at step {k}"));
            break finish(
                x,
                k,
                residual,
                cl.rho_t_hat,
                Status::LeftDomain,
                Some(k),
                contraction_ratio,
                warnings,
                trace,
            );
        }
        if residual <= opts.tol_residual * (1.0 + x.norm()) {
            if cl.rho_t_hat > 1.0 + RHO_TOL && certified {
                warnings.push(format!("converged with rho(T_hat) = {:e} > 1", cl.rho_t_hat));
            }
            break finish(
                x,
                k,
                residual,
                cl.rho_t_hat,
                Status::Converged,
                None,
                contraction_ratio,
                warnings,
                trace,
            );
        }
        if k == opts.max_iter {
            break finish(
                x,
                k,
                residual,
                cl.rho_t_hat,
                Status::MaxIterExceeded,
                None,
                contraction_ratio,
                warnings,
                trace,
            );
        }
        if opts.check_monotone && monotone_gap > opts.psd_tol * (1.0 + x.norm() + next.norm()) {
            if certified {
                warnings.push(format!(
                    "monotonicity violated at step {k}: lambda_max gap = {monotone_gap:e}"
                ));
                break finish(
                    x,
                    k,
                    residual,
                    cl.rho_t_hat,
                    Status::MonotonicityViolated,
                    Some(k),
                    contraction_ratio,
                    warnings,
                    trace,
                );
            }
            if !warned_monotone {
                warnings.push(format!("iterates not nonincreasing from step {k} (uncertified start)"));
                warned_monotone = true;
            }
        }
        if opts.check_stability && certified && !warned_stability && cl.rho_t_hat >= 1.0 + RHO_TOL {
            warnings.push(format!(
                "rho(T_hat) = {:e} at step {k} in the certified regime",
                cl.rho_t_hat
            ));
            warned_stability = true;
        }
        x = next;
        k += 1;
    };

    if report.status == Status::Converged {
        if let Some(t) = report.trace.as_ref() {
            report.rate_estimate = rate_estimate(t, &report.x).ok();
        }
    }
    Ok(report)
}

/// Build `X_0` from the witness and run the certified iteration.
pub fn solve_from_witness(p: &ProblemInstance, x_t: &HermitianMatrix, opts: &SolverOptions) -> Result<SolutionReport> {
    let init = initial_matrix(p, x_t)?;
    let mut report = fpi_solve(p, &init.x0, Some(&init.witness), opts)?;
    if let Some(w) = init.warning {
        report.warnings.insert(0, w);
    }
    Ok(report)
}

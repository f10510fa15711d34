//! Optimal control of the antilinear system.
//!
//! The Riccati map with data `(A, B, R, H)` is the Bellman operator of
//!
//! ```text
//! x_{k+1} = conj(A x_k + B u_k),    J = Σ x_kᴴ H x_k + u_kᴴ R u_k,
//! ```
//!
//! i.e. of `x_{k+1} = A_s x̄_k + B_s ū_k` with system matrices `A_s = Ā`,
//! `B_s = B̄`. For real data the two descriptions coincide. With
//! `u_k = −F_X x_k` the closed loop is `x_{k+1} = T̄_X x̄_k`, so two steps
//! apply `T̂_X = T̄_X T_X`.

use serde::Serialize;

use crate::error::{CdareError, Result};
use crate::linalg::{self, CMat, CVec};
use crate::riccati::{self, HermitianMatrix, ProblemInstance};

/// Rollouts abort once a state norm exceeds this.
pub const OVERFLOW_THRESHOLD: f64 = 1e150;

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// `x_0, …, x_N`.
    pub states: Vec<CVec>,
    /// `u_0, …, u_{N−1}`.
    pub inputs: Vec<CVec>,
}

impl Trajectory {
    pub fn horizon(&self) -> usize {
        self.inputs.len()
    }

    /// `‖x_N‖² ‖X★‖`, the bound on the cost discarded by truncation.
    pub fn tail_estimate(&self, x_star: &HermitianMatrix) -> f64 {
        self.states.last().map_or(0.0, |x| x.norm_squared()) * x_star.norm()
    }

    /// `max_k ‖x_{k+1} − conj(A x_k + B u_k)‖ / (1 + ‖x_k‖)`.
    pub fn dynamics_residual(&self, p: &ProblemInstance) -> f64 {
        self.inputs
            .iter()
            .enumerate()
            .map(|(k, u)| {
                let x = &self.states[k];
                let pred = (p.a() * x + p.b() * u).map(|z| z.conj());
                (&self.states[k + 1] - pred).norm() / (1.0 + x.norm())
            })
            .fold(0.0, f64::max)
    }

    /// Running cost after each step, `Σ_{j ≤ k} x_jᴴ H x_j + u_jᴴ R u_j`.
    pub fn running_cost(&self, h: &HermitianMatrix, r: &HermitianMatrix) -> Vec<f64> {
        let mut total = 0.0;
        self.inputs
            .iter()
            .zip(&self.states)
            .map(|(u, x)| {
                total += quad(h, x) + quad(r, u);
                total
            })
            .collect()
    }

    /// CSV with `k`, real/imaginary parts of every state and input entry
    /// (inputs blank at `k = N`), and the running cost.
    pub fn to_csv(&self, h: &HermitianMatrix, r: &HermitianMatrix) -> String {
        let n = self.states.first().map_or(0, |x| x.len());
        let m = self.inputs.first().map_or(0, |u| u.len());
        let mut cols = vec!["k".to_string()];
        for i in 0..n {
            cols.push(format!("x{i}_re"));
            cols.push(format!("x{i}_im"));
        }
        for i in 0..m {
            cols.push(format!("u{i}_re"));
            cols.push(format!("u{i}_im"));
        }
        cols.push("running_cost".into());
        let mut out = cols.join(",");
        out.push('\n');
        let running = self.running_cost(h, r);
        for (k, x) in self.states.iter().enumerate() {
            let mut row = vec![k.to_string()];
            row.extend(x.iter().flat_map(|z| [format!("{:e}", z.re), format!("{:e}", z.im)]));
            match self.inputs.get(k) {
                Some(u) => row.extend(u.iter().flat_map(|z| [format!("{:e}", z.re), format!("{:e}", z.im)])),
                None => row.extend(std::iter::repeat_n(String::new(), 2 * m)),
            }
            let cost = if k == 0 { 0.0 } else { running[k - 1] };
            row.push(format!("{cost:e}"));
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// `vᴴ M v`, real part.
fn quad(m: &HermitianMatrix, v: &CVec) -> f64 {
    (v.adjoint() * m.as_matrix() * v)[(0, 0)].re
}

/// Optimal gain `F = R_{X★}⁻¹ Bᴴ X̄★ A`; requires `R_{X★} > 0`.
pub fn synthesize(p: &ProblemInstance, x_star: &HermitianMatrix) -> Result<CMat> {
    let cl = riccati::closed_loop(p, x_star)?;
    let lmin = cl.r_x.lambda_min();
    if !(lmin > p.tolerances().psd_tol(cl.r_x.norm(), 0.0)) {
        return Err(CdareError::Argument(format!(
            "R_X* not positive definite (lambda_min = {lmin:e}): outside the LQR regime"
        )));
    }
    Ok(cl.f)
}

/// Roll out `u_k = −F x_k` for `steps` steps from `x0`.
pub fn simulate(p: &ProblemInstance, f: &CMat, x0: &CVec, steps: usize) -> Result<Trajectory> {
    linalg::require_shape("F", f, p.m(), p.n())?;
    if x0.len() != p.n() {
        return Err(CdareError::Dimension {
            what: "x0",
            expected: format!("{}", p.n()),
            found: format!("{}", x0.len()),
        });
    }
    if steps == 0 {
        return Err(CdareError::Argument("horizon must be positive".into()));
    }
    let mut states = Vec::with_capacity(steps + 1);
    let mut inputs = Vec::with_capacity(steps);
    let mut x = x0.clone();
    for k in 0..steps {
        let u = -(f * &x);
        let next = (p.a() * &x + p.b() * &u).map(|z| z.conj());
        let norm = next.norm();
        if !(norm <= OVERFLOW_THRESHOLD) {
            return Err(CdareError::Numerical(format!(
                "closed-loop state diverged at step {} (norm {norm:e})",
                k + 1
            )));
        }
        states.push(x);
        inputs.push(u);
        x = next;
    }
    states.push(x);
    Ok(Trajectory { states, inputs })
}

/// Truncated cost `Σ_{k<N} x_kᴴ H x_k + u_kᴴ R u_k`; requires `H ≥ 0`, `R > 0`.
pub fn evaluate_cost(traj: &Trajectory, h: &HermitianMatrix, r: &HermitianMatrix) -> Result<f64> {
    let h_min = h.lambda_min();
    if !(h_min >= -1e-12 * (1.0 + h.norm())) {
        return Err(CdareError::Argument(format!("H indefinite (lambda_min = {h_min:e})")));
    }
    let r_min = r.lambda_min();
    if !(r_min > 0.0) {
        return Err(CdareError::Argument(format!(
            "R not positive definite (lambda_min = {r_min:e})"
        )));
    }
    Ok(traj.running_cost(h, r).last().copied().unwrap_or(0.0))
}

/// `x0ᴴ X★ x0`.
pub fn predicted_cost(x_star: &HermitianMatrix, x0: &CVec) -> f64 {
    quad(x_star, x0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimalityReport {
    /// Truncated cost of the synthesized feedback.
    pub cost: f64,
    /// `x0ᴴ X★ x0`.
    pub predicted: f64,
    /// `|cost − predicted|`.
    pub gap: f64,
    /// `‖x_N‖² ‖X★‖`.
    pub tail_estimate: f64,
    /// `min (perturbed cost − cost)` over the sampled gain perturbations.
    pub worst_perturbation_margin: f64,
    /// No perturbed gain beat the synthesized one by more than the tolerance.
    pub suboptimality_ok: bool,
}

/// Cost identity and a perturbation spot check for the gain built from `X★`.
pub fn verify_optimality(
    p: &ProblemInstance,
    x_star: &HermitianMatrix,
    x0: &CVec,
    steps: usize,
) -> Result<OptimalityReport> {
    let cl = riccati::closed_loop(p, x_star)?;
    if !(cl.rho_t_hat < 1.0) {
        return Err(CdareError::Precondition(format!(
            "rho(T_hat_X*) = {:e} >= 1: truncated cost does not approximate J",
            cl.rho_t_hat
        )));
    }
    let f = synthesize(p, x_star)?;
    let traj = simulate(p, &f, x0, steps)?;
    let cost = evaluate_cost(&traj, p.h(), p.r())?;
    let predicted = predicted_cost(x_star, x0);
    let tol = p.tolerances().psd_tol(cost.abs(), 0.0);

    let delta = 1e-3 * (1.0 + linalg::spectral_norm(&f));
    let mut worst = f64::INFINITY;
    for (i, j) in (0..p.m()).flat_map(|i| (0..p.n()).map(move |j| (i, j))).take(8) {
        for dir in [linalg::c(delta, 0.0), linalg::c(0.0, delta), linalg::c(-delta, 0.0)] {
            let mut fp = f.clone();
            fp[(i, j)] += dir;
            let perturbed = match simulate(p, &fp, x0, steps) {
                Ok(t) => evaluate_cost(&t, p.h(), p.r())?,
                Err(CdareError::Numerical(_)) => f64::INFINITY,
                Err(e) => return Err(e),
            };
            worst = worst.min(perturbed - cost);
        }
    }
    Ok(OptimalityReport {
        cost,
        predicted,
        gap: (cost - predicted).abs(),
        tail_estimate: traj.tail_estimate(x_star),
        worst_perturbation_margin: worst,
        suboptimality_ok: worst >= -tol,
    })
}

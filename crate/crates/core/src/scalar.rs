//! Closed-form analysis of the scalar equation
//!
//! ```text
//! x = |a|² x̄ / (1 + g x̄) + h,    g = |b|² / r,
//! ```
//!
//! whose real solutions are the roots of `g x² + (1 − |a|² − g h) x − h = 0`.
//! Only the moduli of `a` and `b` matter. With `t̂_x = |a|² / (1 + g x)²`
//! the iteration from `x_0` has the explicit form
//!
//! ```text
//! x_k = x_M + (x_M − x_m) / (s t̂_{x_M}^{−k} − 1),   s = (x_0 − x_m)/(x_0 − x_M)   (t̂_{x_M} ≠ 1)
//! x_k = x_M + |a| (x_0 − x_M) / (g (x_0 − x_M) k + |a|)                            (t̂_{x_M} = 1)
//! ```
//!
//! These formulas serve as an independent oracle for the matrix solver.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{CdareError, Result};

/// Relative tolerance for the boundary cases `h = h_M` and `h = h_m`.
pub const SCALAR_EQ_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalarProblem {
    /// `|a|`.
    pub a: f64,
    /// `|b|`.
    pub b: f64,
    pub r: f64,
    pub h: f64,
    /// `|b|² / r`.
    pub g: f64,
}

impl ScalarProblem {
    pub fn new(a: Complex64, b: Complex64, r: f64, h: f64) -> Result<Self> {
        let (a, b) = (a.norm(), b.norm());
        if !(a > 0.0) {
            return Err(CdareError::Argument("scalar problem needs |a| > 0".into()));
        }
        if !(r > 0.0) {
            return Err(CdareError::Argument(format!("scalar problem needs r > 0, got {r}")));
        }
        if !h.is_finite() {
            return Err(CdareError::Argument(format!("h must be finite, got {h}")));
        }
        let g = b * b / r;
        if !(g > 0.0) || !g.is_finite() {
            return Err(CdareError::Argument("scalar problem needs g = |b|^2/r > 0".into()));
        }
        Ok(Self { a, b, r, h, g })
    }

    /// `|a|² x / (1 + g x) + h` for real `x`.
    pub fn riccati(&self, x: f64) -> f64 {
        self.a * self.a * x / (1.0 + self.g * x) + self.h
    }

    /// `t̂_x = |a|² / (1 + g x)²`.
    pub fn t_hat(&self, x: f64) -> f64 {
        self.a * self.a / (1.0 + self.g * x).powi(2)
    }

    /// Endpoints `(−|a|−1)/g` and `(|a|−1)/g`: `t̂_x < 1` exactly off the
    /// closed interval between them.
    pub fn stable_set_bounds(&self) -> (f64, f64) {
        ((-self.a - 1.0) / self.g, (self.a - 1.0) / self.g)
    }

    pub fn in_stable_set(&self, x: f64) -> bool {
        let (lo, hi) = self.stable_set_bounds();
        x < lo || x > hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ScalarCase {
    /// `h > h_M`: linear convergence to the maximal solution.
    #[serde(rename = "CaseI_linear")]
    CaseILinear,
    /// `h = h_M`: double root with `t̂ = 1`, sublinear convergence.
    #[serde(rename = "CaseII_sublinear")]
    CaseIISublinear,
    /// `h ≤ h_m`: the standing assumptions fail; iterates approach `x_m`.
    #[serde(rename = "CaseIII_minimal")]
    CaseIIIMinimal,
    /// `h_m < h < h_M`: no real solution.
    NoRealSolution,
}

impl ScalarCase {
    pub fn label(&self) -> &'static str {
        match self {
            Self::CaseILinear => "CaseI_linear",
            Self::CaseIISublinear => "CaseII_sublinear",
            Self::CaseIIIMinimal => "CaseIII_minimal",
            Self::NoRealSolution => "NoRealSolution",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalarAnalysis {
    /// `(1 − |a|² − g h)² + 4 g h`.
    pub d: f64,
    pub x_max: Option<f64>,
    pub x_min: Option<f64>,
    /// `−(1 − |a|)² / g`.
    pub h_max: f64,
    /// `−(1 + |a|)² / g`.
    pub h_min: f64,
    pub t_hat_max: Option<f64>,
    pub t_hat_min: Option<f64>,
    pub case: ScalarCase,
}

fn near(x: f64, y: f64) -> bool {
    (x - y).abs() <= SCALAR_EQ_TOL * (1.0 + y.abs())
}

pub fn analyze(sp: &ScalarProblem) -> ScalarAnalysis {
    let a2 = sp.a * sp.a;
    let g = sp.g;
    let h = sp.h;
    let h_max = -(1.0 - sp.a).powi(2) / g;
    let h_min = -(1.0 + sp.a).powi(2) / g;
    let lin = 1.0 - a2 - g * h;
    let raw_d = lin * lin + 4.0 * g * h;

    let (case, d) = if near(h, h_max) {
        (ScalarCase::CaseIISublinear, 0.0)
    } else if near(h, h_min) {
        (ScalarCase::CaseIIIMinimal, 0.0)
    } else if h > h_max {
        (ScalarCase::CaseILinear, raw_d.max(0.0))
    } else if h < h_min {
        (ScalarCase::CaseIIIMinimal, raw_d.max(0.0))
    } else {
        (ScalarCase::NoRealSolution, raw_d)
    };

    let (x_max, x_min) = if case == ScalarCase::NoRealSolution {
        (None, None)
    } else {
        let sq = d.sqrt();
        (Some((-lin + sq) / (2.0 * g)), Some((-lin - sq) / (2.0 * g)))
    };
    ScalarAnalysis {
        d,
        x_max,
        x_min,
        h_max,
        h_min,
        t_hat_max: x_max.map(|x| sp.t_hat(x)),
        t_hat_min: x_min.map(|x| sp.t_hat(x)),
        case,
    }
}

/// `x_k` of the iteration started at `x0`, from the explicit formulas.
pub fn closed_form_iterate(sp: &ScalarProblem, x0: f64, k: u64) -> Result<f64> {
    let an = analyze(sp);
    let (Some(x_max), Some(x_min), Some(t_hat)) = (an.x_max, an.x_min, an.t_hat_max) else {
        return Err(CdareError::Argument("closed form needs real roots (D >= 0)".into()));
    };
    if k == 0 {
        return Ok(x0);
    }
    let kf = k as f64;
    let value = if near(t_hat, 1.0) {
        let denom = sp.g * (x0 - x_max) * kf + sp.a;
        if denom == 0.0 {
            return Err(CdareError::Precondition(format!(
                "iterate {k} hits the pole 1 + g x = 0"
            )));
        }
        x_max + sp.a * (x0 - x_max) / denom
    } else {
        if !(t_hat > 0.0) {
            return Err(CdareError::Argument(format!(
                "branch t_hat(x_M) != 1 needs t_hat(x_M) > 0, got {t_hat:e}"
            )));
        }
        if x0 == x_max {
            return Ok(x_max);
        }
        let s = (x0 - x_min) / (x0 - x_max);
        let denom = s * t_hat.powf(-kf) - 1.0;
        if denom == 0.0 {
            return Err(CdareError::Precondition(format!(
                "iterate {k} hits the pole 1 + g x = 0"
            )));
        }
        x_max + (x_max - x_min) / denom
    };
    Ok(value)
}

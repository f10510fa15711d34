//! Maximal Hermitian solutions of the conjugate discrete-time algebraic
//! Riccati equation
//!
//! ```text
//! X = Aᴴ X̄ A − Aᴴ X̄ B (R + Bᴴ X̄ B)⁻¹ Bᴴ X̄ A + H
//! ```
//!
//! computed by the monotone fixed-point iteration `X_{k+1} = ℛ(X_k)`.
//!
//! * [`riccati`]: problem data, the Riccati map and closed-loop quantities.
//! * [`stein`]: the conjugate Stein operator and its inverse.
//! * [`membership`]: certificates for the sets the convergence theory uses.
//! * [`fpi`]: the solver.
//! * [`scalar`]: closed-form analysis of the 1×1 equation.
//! * [`lqr`]: optimal control of the antilinear system.
//! * [`io`]: JSON instance files.
//!
//! ```
//! use cdare::{fpi, HermitianMatrix, ProblemInstance};
//! use num_complex::Complex64;
//!
//! let p = ProblemInstance::scalar(Complex64::new(2.0, 0.0), Complex64::new(1.0, 0.0), 1.0, 2.0)?;
//! let report = fpi::fpi_solve(&p, &HermitianMatrix::scalar(10.0), None, &Default::default())?;
//! assert!((report.x.first() - (5.0 + 33f64.sqrt()) / 2.0).abs() < 1e-10);
//! # Ok::<(), cdare::CdareError>(())
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fpi;
pub mod io;
pub mod linalg;
pub mod lqr;
pub mod membership;
pub mod riccati;
pub mod scalar;
pub mod stein;

pub use error::{CdareError, Result};
pub use fpi::{IterationTrace, SolutionReport, SolverOptions, Status};
pub use linalg::{CMat, CVec};
pub use membership::{AssumptionReport, MembershipReport};
pub use riccati::{ClosedLoop, HermitianMatrix, ProblemInstance, Tolerances};
pub use scalar::{ScalarAnalysis, ScalarCase, ScalarProblem};

#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
mod readme {}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/riccati-map.md")]
    mod riccati_map {}
    #[doc = include_str!("../../../book/src/conjugate-stein.md")]
    mod conjugate_stein {}
    #[doc = include_str!("../../../book/src/membership.md")]
    mod membership {}
    #[doc = include_str!("../../../book/src/fixed-point-iteration.md")]
    mod fixed_point_iteration {}
    #[doc = include_str!("../../../book/src/scalar-example.md")]
    mod scalar_example {}
    #[doc = include_str!("../../../book/src/antilinear-lqr.md")]
    mod antilinear_lqr {}
    #[doc = include_str!("../../../book/src/instance-format.md")]
    mod instance_format {}
}

#![allow(dead_code)]

use cdare::linalg::{self, c, CMat};
use cdare::scalar::{self, ScalarProblem};
use cdare::{HermitianMatrix, ProblemInstance};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn cnormal(rng: &mut impl Rng) -> Complex64 {
    c(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn random_complex(rng: &mut impl Rng, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| cnormal(rng))
}

pub fn random_real(rng: &mut impl Rng, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| c(rng.sample(StandardNormal), 0.0))
}

pub fn random_hermitian(rng: &mut impl Rng, n: usize) -> HermitianMatrix {
    HermitianMatrix::symmetrized(&random_complex(rng, n, n))
}

/// `CᴴC`, positive semidefinite with rank `rank`.
pub fn random_psd(rng: &mut impl Rng, n: usize, rank: usize) -> HermitianMatrix {
    let c = random_complex(rng, rank, n);
    HermitianMatrix::symmetrized(&(c.adjoint() * c))
}

/// `CᴴC + shift I`.
pub fn random_pd(rng: &mut impl Rng, n: usize, shift: f64) -> HermitianMatrix {
    let c = random_complex(rng, n, n);
    HermitianMatrix::symmetrized(&(c.adjoint() * c + CMat::identity(n, n).scale(shift)))
}

/// Random `A` rescaled so that `ρ(ĀA) = target`.
pub fn matrix_with_hat_radius(rng: &mut impl Rng, n: usize, target: f64) -> CMat {
    loop {
        let a = random_complex(rng, n, n);
        let rho = cdare::stein::spectral_radius(&(linalg::conj(&a) * &a)).unwrap();
        if rho > 1e-6 {
            return a.scale((target / rho).sqrt());
        }
    }
}

/// Truncated series `Σ_{k<terms} ((ĀA)^k)ᴴ (Q + Aᴴ Q̄ A) (ĀA)^k`.
pub fn stein_series(a: &CMat, q: &HermitianMatrix, terms: usize) -> HermitianMatrix {
    let m = linalg::conj(a) * a;
    let base = q.as_matrix() + a.adjoint() * linalg::conj(q.as_matrix()) * a;
    let n = a.nrows();
    let mut power = CMat::identity(n, n);
    let mut sum = CMat::zeros(n, n);
    for _ in 0..terms {
        sum += power.adjoint() * &base * &power;
        power = &power * &m;
    }
    HermitianMatrix::symmetrized(&sum)
}

/// `k` steps of `x ← |a|² x / (1 + g x) + h`, written out independently of
/// the library.
pub fn scalar_recursion(a_abs: f64, g: f64, h: f64, x0: f64, k: usize) -> Vec<f64> {
    let mut xs = vec![x0];
    let mut x = x0;
    for _ in 0..k {
        x = a_abs * a_abs * x / (1.0 + g * x) + h;
        xs.push(x);
    }
    xs
}

pub fn scalar_instance(a: f64, b: f64, r: f64, h: f64) -> ProblemInstance {
    ProblemInstance::scalar(c(a, 0.0), c(b, 0.0), r, h).unwrap()
}

/// Random real orthogonal matrix from the QR factors of a Gaussian matrix.
pub fn random_orthogonal(rng: &mut impl Rng, n: usize) -> CMat {
    let g = nalgebra::DMatrix::<f64>::from_fn(n, n, |_, _| rng.sample(StandardNormal));
    let q = g.qr().q();
    q.map(|x| c(x, 0.0))
}

/// A decoupled instance `Qᵀ diag(a_i) Q, Qᵀ diag(b_i), diag(r_i), Qᵀ diag(h_i) Q`
/// with real orthogonal `Q`. Each coordinate is a scalar problem in case I,
/// so the Hermitian solutions are exactly `Qᵀ diag(x_i) Q` with
/// `x_i ∈ {x_M,i, x_m,i}`.
pub struct Decoupled {
    pub problem: ProblemInstance,
    pub q: CMat,
    /// `(x_M,i, x_m,i)` per coordinate.
    pub roots: Vec<(f64, f64)>,
}

impl Decoupled {
    /// The solution taking the minimal root on coordinates whose bit is set
    /// in `mask` and the maximal root elsewhere.
    pub fn solution(&self, mask: usize) -> HermitianMatrix {
        let n = self.roots.len();
        let d = CMat::from_fn(n, n, |i, j| {
            if i != j {
                c(0.0, 0.0)
            } else if mask >> i & 1 == 1 {
                c(self.roots[i].1, 0.0)
            } else {
                c(self.roots[i].0, 0.0)
            }
        });
        HermitianMatrix::symmetrized(&(self.q.transpose() * d * &self.q))
    }
}

pub fn decoupled_instance(rng: &mut impl Rng, n: usize) -> Decoupled {
    let q = random_orthogonal(rng, n);
    let mut a = Vec::new();
    let mut b = Vec::new();
    let mut r = Vec::new();
    let mut h = Vec::new();
    let mut roots = Vec::new();
    for _ in 0..n {
        let ai = cnormal(rng) * 0.8 + c(0.3, 0.0);
        let bi = cnormal(rng) * 0.5 + c(0.6, 0.0);
        let ri: f64 = rng.random_range(0.5..2.0);
        let sp = ScalarProblem::new(ai, bi, ri, 0.0).unwrap();
        let an0 = scalar::analyze(&sp);
        // h strictly above h_M keeps the two roots apart
        let hi = an0.h_max + rng.random_range(0.5..3.0);
        let sp = ScalarProblem::new(ai, bi, ri, hi).unwrap();
        let an = scalar::analyze(&sp);
        roots.push((an.x_max.unwrap(), an.x_min.unwrap()));
        a.push(ai);
        b.push(bi);
        r.push(ri);
        h.push(hi);
    }
    let diag = |v: &[Complex64]| CMat::from_diagonal(&nalgebra::DVector::from_column_slice(v));
    let real = |v: &[f64]| v.iter().map(|&x| c(x, 0.0)).collect::<Vec<_>>();
    let qt = q.transpose();
    let problem = ProblemInstance::new(
        &qt * diag(&a) * &q,
        &qt * diag(&b),
        diag(&real(&r)),
        &qt * diag(&real(&h)) * &q,
    )
    .unwrap();
    Decoupled { problem, q, roots }
}

/// An LQR-regime instance: `H ≥ 0`, `R > 0`, `ρ(ĀA) = hat_radius`.
pub fn lqr_instance(rng: &mut impl Rng, n: usize, m: usize, hat_radius: f64) -> ProblemInstance {
    let a = matrix_with_hat_radius(rng, n, hat_radius);
    let b = random_complex(rng, n, m);
    let r = random_pd(rng, m, 0.1);
    let rank = rng.random_range(1..=n);
    let h = random_psd(rng, n, rank);
    ProblemInstance::new(a, b, r.into_inner(), h.into_inner()).unwrap()
}

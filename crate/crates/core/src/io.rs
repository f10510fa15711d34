//! JSON instance files.
//!
//! ```json
//! {
//!   "n": 1, "m": 1,
//!   "A": [[2, 0]], "B": [[1, 0]], "R": [[1, 0]], "H": [[2, 0]],
//!   "x_T_witness": [[5.5, 0]],
//!   "x_P_witness": [[0, 0]],
//!   "X0": [[10, 0]],
//!   "x0_state": [[1, 0]],
//!   "options": { "tol": 1e-12, "max_iter": 10000 }
//! }
//! ```
//!
//! Matrices are flat row-major arrays of `[re, im]` pairs; `x0_state` is a
//! vector of `n` pairs. Everything after `H` is optional.

use std::path::Path;

use serde::ser::SerializeSeq;
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::error::CdareError;
use crate::fpi::SolverOptions;
use crate::linalg::{c, CMat, CVec};
use crate::riccati::{HermitianMatrix, ProblemInstance, Tolerances};

pub type Pair = [f64; 2];

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("malformed instance: {0}")]
    Json(String),
    #[error("field {field}: {message}")]
    Field { field: &'static str, message: String },
    #[error("invalid instance: {0}")]
    Problem(#[from] CdareError),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptionsBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psd_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub check_monotone: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub check_stability: Option<bool>,
}

impl OptionsBlock {
    pub fn apply(&self, mut opts: SolverOptions) -> SolverOptions {
        if let Some(t) = self.tol {
            opts.tol_residual = t;
        }
        if let Some(k) = self.max_iter {
            opts.max_iter = k;
        }
        if let Some(t) = self.psd_tol {
            opts.psd_tol = t;
        }
        if let Some(b) = self.check_monotone {
            opts.check_monotone = b;
        }
        if let Some(b) = self.check_stability {
            opts.check_stability = b;
        }
        opts
    }
}

/// On-disk layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub n: usize,
    pub m: usize,
    #[serde(rename = "A")]
    pub a: Vec<Pair>,
    #[serde(rename = "B")]
    pub b: Vec<Pair>,
    #[serde(rename = "R")]
    pub r: Vec<Pair>,
    #[serde(rename = "H")]
    pub h: Vec<Pair>,
    #[serde(default, rename = "x_T_witness", skip_serializing_if = "Option::is_none")]
    pub x_t_witness: Option<Vec<Pair>>,
    #[serde(default, rename = "x_P_witness", skip_serializing_if = "Option::is_none")]
    pub x_p_witness: Option<Vec<Pair>>,
    #[serde(default, rename = "X0", skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<Pair>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0_state: Option<Vec<Pair>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub options: Option<OptionsBlock>,
}

/// A validated instance with its optional extras.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedInstance {
    pub problem: ProblemInstance,
    pub x_t_witness: Option<HermitianMatrix>,
    pub x_p_witness: Option<HermitianMatrix>,
    pub x0: Option<HermitianMatrix>,
    pub x0_state: Option<CVec>,
    pub options: Option<OptionsBlock>,
}

impl ParsedInstance {
    pub fn new(problem: ProblemInstance) -> Self {
        Self {
            problem,
            x_t_witness: None,
            x_p_witness: None,
            x0: None,
            x0_state: None,
            options: None,
        }
    }

    pub fn solver_options(&self, base: SolverOptions) -> SolverOptions {
        self.options.as_ref().map_or(base, |o| o.apply(base))
    }
}

fn check_finite(field: &'static str, data: &[Pair]) -> Result<(), InstanceError> {
    if let Some(i) = data.iter().position(|p| !p[0].is_finite() || !p[1].is_finite()) {
        return Err(InstanceError::Field {
            field,
            message: format!("entry {i} is not finite"),
        });
    }
    Ok(())
}

/// Build a `rows × cols` matrix from row-major pairs.
pub fn matrix_from_pairs(field: &'static str, rows: usize, cols: usize, data: &[Pair]) -> Result<CMat, InstanceError> {
    if data.len() != rows * cols {
        return Err(InstanceError::Field {
            field,
            message: format!("expected {} entries ({rows}x{cols}), found {}", rows * cols, data.len()),
        });
    }
    check_finite(field, data)?;
    Ok(CMat::from_row_iterator(rows, cols, data.iter().map(|p| c(p[0], p[1]))))
}

pub fn matrix_to_pairs(m: &CMat) -> Vec<Pair> {
    (0..m.nrows())
        .flat_map(|i| (0..m.ncols()).map(move |j| (i, j)))
        .map(|(i, j)| [m[(i, j)].re, m[(i, j)].im])
        .collect()
}

pub fn hermitian_from_pairs(
    field: &'static str,
    n: usize,
    data: &[Pair],
    tol: f64,
) -> Result<HermitianMatrix, InstanceError> {
    let m = matrix_from_pairs(field, n, n, data)?;
    HermitianMatrix::new(m, tol).map_err(|e| InstanceError::Field {
        field,
        message: e.to_string(),
    })
}

impl Serialize for HermitianMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let pairs = matrix_to_pairs(self.as_matrix());
        let mut seq = s.serialize_seq(Some(pairs.len()))?;
        for p in &pairs {
            seq.serialize_element(p)?;
        }
        seq.end()
    }
}

impl InstanceFile {
    pub fn from_problem(p: &ProblemInstance) -> Self {
        Self {
            n: p.n(),
            m: p.m(),
            a: matrix_to_pairs(p.a()),
            b: matrix_to_pairs(p.b()),
            r: matrix_to_pairs(p.r().as_matrix()),
            h: matrix_to_pairs(p.h().as_matrix()),
            x_t_witness: None,
            x_p_witness: None,
            x0: None,
            x0_state: None,
            options: None,
        }
    }

    pub fn from_parsed(parsed: &ParsedInstance) -> Self {
        let to = |x: &Option<HermitianMatrix>| x.as_ref().map(|x| matrix_to_pairs(x.as_matrix()));
        Self {
            x_t_witness: to(&parsed.x_t_witness),
            x_p_witness: to(&parsed.x_p_witness),
            x0: to(&parsed.x0),
            x0_state: parsed
                .x0_state
                .as_ref()
                .map(|v| v.iter().map(|z| [z.re, z.im]).collect()),
            options: parsed.options.clone(),
            ..Self::from_problem(&parsed.problem)
        }
    }

    pub fn validate(&self) -> Result<ParsedInstance, InstanceError> {
        let (n, m) = (self.n, self.m);
        if n == 0 {
            return Err(InstanceError::Field {
                field: "n",
                message: "must be at least 1".into(),
            });
        }
        if m == 0 {
            return Err(InstanceError::Field {
                field: "m",
                message: "must be at least 1".into(),
            });
        }
        let tol = Tolerances::default();
        let a = matrix_from_pairs("A", n, n, &self.a)?;
        let b = matrix_from_pairs("B", n, m, &self.b)?;
        let r = matrix_from_pairs("R", m, m, &self.r)?;
        let h = matrix_from_pairs("H", n, n, &self.h)?;
        let problem = ProblemInstance::with_tolerances(a, b, r, h, tol)?;
        let herm = |field, data: &Option<Vec<Pair>>| {
            data.as_ref()
                .map(|d| hermitian_from_pairs(field, n, d, tol.hermitian))
                .transpose()
        };
        let x0_state = match &self.x0_state {
            None => None,
            Some(d) => {
                if d.len() != n {
                    return Err(InstanceError::Field {
                        field: "x0_state",
                        message: format!("expected {n} entries, found {}", d.len()),
                    });
                }
                check_finite("x0_state", d)?;
                Some(CVec::from_iterator(n, d.iter().map(|p| c(p[0], p[1]))))
            }
        };
        Ok(ParsedInstance {
            problem,
            x_t_witness: herm("x_T_witness", &self.x_t_witness)?,
            x_p_witness: herm("x_P_witness", &self.x_p_witness)?,
            x0: herm("X0", &self.x0)?,
            x0_state,
            options: self.options.clone(),
        })
    }
}

pub fn parse_instance_str(text: &str) -> Result<ParsedInstance, InstanceError> {
    let file: InstanceFile = serde_json::from_str(text).map_err(|e| InstanceError::Json(e.to_string()))?;
    file.validate()
}

pub fn parse_instance(path: impl AsRef<Path>) -> Result<ParsedInstance, InstanceError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| InstanceError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_instance_str(&text)
}

pub fn serialize_instance(parsed: &ParsedInstance) -> String {
    serde_json::to_string_pretty(&InstanceFile::from_parsed(parsed)).expect("instance serializes")
}

/// A standalone matrix file: a flat row-major array of `[re, im]` pairs.
pub fn parse_matrix_str(text: &str, n: usize) -> Result<HermitianMatrix, InstanceError> {
    let data: Vec<Pair> = serde_json::from_str(text).map_err(|e| InstanceError::Json(e.to_string()))?;
    hermitian_from_pairs("X", n, &data, Tolerances::default().hermitian)
}

//! Facial dimension signatures of quadratic systems.
//!
//! [`exact_signature`] handles systems whose variable blocks are single
//! quadratics or ball-plus-cylinder templates. [`probe_signature`] works on
//! any system with nonempty interior by sampling boundary points and
//! measuring the minimal face at each.

mod exact;
pub mod numeric;
mod probe;

use std::collections::BTreeMap;

use num::Signed;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::construct::restriction_failure;
use crate::linalg::Rational;
use crate::quadratic::{QuadraticError, QuadraticSystem};
use crate::signature::Signature;

pub use exact::{blocks, exact_signature, Block, BlockSplit};
pub use probe::{
    boundary_sample, interior_point, minimal_face_dim_at, probe_signature, FACE_STEP, TOL_ACTIVE,
    TOL_SLACK,
};

pub const DEFAULT_SAMPLES: usize = 10_000;
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum VerifyError {
    #[error("block over variables {0:?} is neither a single quadratic nor a ball-plus-cylinders template")]
    UnrecognizedStructure(Vec<usize>),
    #[error("the system is infeasible")]
    Infeasible,
    #[error("no strictly feasible point found")]
    NoInteriorFound,
    #[error("point violates the system (max f = {0:e})")]
    NotFeasible(f64),
    #[error("face dimension mismatch at active set {active:?}: exact {exact}, numeric {numeric}")]
    ProbeMismatch {
        active: Vec<usize>,
        exact: usize,
        numeric: usize,
    },
    #[error(transparent)]
    Quadratic(#[from] QuadraticError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Exact,
    Probe,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Confidence {
    Exact,
    Probabilistic { samples: usize, tolerance: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub signature: Signature,
    pub method: Method,
    /// One point per dimension whose minimal face has that dimension.
    pub witnesses: BTreeMap<usize, Vec<f64>>,
    pub confidence: Confidence,
    pub warnings: Vec<String>,
}

/// Constraints indices active together at a boundary point.
#[derive(Clone, Debug, PartialEq)]
pub struct ActiveSet {
    pub indices: Vec<usize>,
    pub point: Vec<f64>,
}

/// Exact check that, for cylinder offset `c` and radius `r`, boundaries of two
/// distinct cylinders never meet inside the unit ball.
pub fn disjointness_certificate(c: &Rational, r: &Rational) -> bool {
    r.is_positive() && restriction_failure(c, &(r * r)).is_none()
}

/// Exact path first; on unrecognized structure fall back to probing.
pub fn verify(
    s: &QuadraticSystem,
    samples: usize,
    seed: u64,
) -> Result<VerificationReport, VerifyError> {
    match exact_signature(s) {
        Err(VerifyError::UnrecognizedStructure(vars)) => {
            let mut report = probe_signature(s, samples, seed)?;
            report.warnings.insert(
                0,
                format!("exact path declined (block {vars:?}); probe result"),
            );
            Ok(report)
        }
        other => other,
    }
}

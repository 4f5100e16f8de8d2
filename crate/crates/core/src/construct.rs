//! Systems of convex quadratic inequalities with a prescribed facial dimension signature.
//!
//! The basic template is a unit ball intersected with cylinders
//! `C_i^n = {(x_{i+1} + c)² + x_{i+2}² + … + x_n² ≤ r²}`, one per interior
//! element of the signature. Larger signatures are assembled as direct sums of
//! such templates along a sumset factorization.

use num::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::io::rational::RationalText;
use crate::linalg::{dot, int, rat, unit_vec, zero_vec, RMatrix, RVector, Rational};
use crate::quadratic::{direct_sum, ConvexQuadratic, QuadraticError, QuadraticSystem};
use crate::signature::{decompose_min_cost, shift, DecompositionTree, Signature, SignatureError};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ConstructError {
    #[error("invalid parameters c={c}, r={r}: {reason}")]
    InvalidParams {
        c: String,
        r: String,
        reason: &'static str,
    },
    #[error("cylinder index {i} must lie in 1..{n}")]
    CylinderIndex { i: usize, n: usize },
    #[error("{0} is not of the form 2^K - 1 with K >= 1")]
    NotDyadic(usize),
    #[error("point is not on the cylinder boundary with its first {0} coordinates zero")]
    NotOnBoundary(usize),
    #[error(transparent)]
    Quadratic(#[from] QuadraticError),
}

/// Offset `c` and radius `r` shared by all cylinders of a template.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct ConstructionParams {
    c: Rational,
    r: Rational,
}

#[derive(Serialize, Deserialize)]
struct RawParams {
    c: RationalText,
    r: RationalText,
}

impl TryFrom<RawParams> for ConstructionParams {
    type Error = ConstructError;

    fn try_from(raw: RawParams) -> Result<Self, Self::Error> {
        ConstructionParams::new(raw.c.0, raw.r.0)
    }
}

impl From<ConstructionParams> for RawParams {
    fn from(p: ConstructionParams) -> Self {
        RawParams {
            c: RationalText(p.c),
            r: RationalText(p.r),
        }
    }
}

impl Default for ConstructionParams {
    fn default() -> Self {
        ConstructionParams {
            c: rat(7, 10),
            r: rat(8, 5),
        }
    }
}

/// Which of the conditions on `(c, r²)` fails, if any.
///
/// With `s = r² − c² − 1` the conditions are `c > 0`, `s > 0`, `s² > 2c²` and
/// `r² < (1 + c)²`; working with `r²` keeps them rational even when `r` is not.
pub fn restriction_failure(c: &Rational, r_squared: &Rational) -> Option<&'static str> {
    if !c.is_positive() {
        return Some("c must be positive");
    }
    let s = r_squared - c * c - Rational::one();
    if !s.is_positive() {
        return Some("r^2 - c^2 - 1 must be positive");
    }
    if &s * &s <= int(2) * c * c {
        return Some("(r^2 - c^2 - 1)^2 must exceed 2c^2");
    }
    let one_plus_c = Rational::one() + c;
    if r_squared >= &(&one_plus_c * &one_plus_c) {
        return Some("r must be less than 1 + c");
    }
    None
}

impl ConstructionParams {
    pub fn new(c: Rational, r: Rational) -> Result<Self, ConstructError> {
        if !r.is_positive() {
            return Err(ConstructError::InvalidParams {
                c: c.to_string(),
                r: r.to_string(),
                reason: "r must be positive",
            });
        }
        if let Some(reason) = restriction_failure(&c, &(&r * &r)) {
            return Err(ConstructError::InvalidParams {
                c: c.to_string(),
                r: r.to_string(),
                reason,
            });
        }
        Ok(ConstructionParams { c, r })
    }

    pub fn c(&self) -> &Rational {
        &self.c
    }

    pub fn r(&self) -> &Rational {
        &self.r
    }
}

/// `(x_{i+1} + c)² + x_{i+2}² + … + x_n² ≤ r²` in `R^n`, for `1 ≤ i ≤ n − 1`.
pub fn build_cylinder(
    i: usize,
    n: usize,
    p: &ConstructionParams,
) -> Result<ConvexQuadratic, ConstructError> {
    if i == 0 || i >= n {
        return Err(ConstructError::CylinderIndex { i, n });
    }
    let diag: Vec<Rational> = (0..n)
        .map(|k| {
            if k < i {
                Rational::zero()
            } else {
                Rational::one()
            }
        })
        .collect();
    let mut linear = zero_vec(n);
    linear[i] = p.c.clone();
    let constant = &p.c * &p.c - &p.r * &p.r;
    Ok(ConvexQuadratic::new(
        RMatrix::diagonal(&diag),
        linear,
        constant,
    )?)
}

/// Ball-plus-cylinders system in `R^{max I}` with `|I| − 1` constraints.
///
/// The template for `I − min I` sits on the first `max I − min I` coordinates
/// and the remaining `min I` coordinates are free. The origin is interior.
pub fn build_theorem1(sig: &Signature, p: &ConstructionParams) -> QuadraticSystem {
    let (m, n) = (sig.min(), sig.max());
    if sig.len() == 1 {
        return QuadraticSystem::empty(n);
    }
    let k = n - m;
    let mut constraints = vec![ConvexQuadratic::unit_ball(k)];
    for d in sig.iter().filter(|&d| d != m && d != n) {
        constraints.push(build_cylinder(d - m, k, p).expect("index in 1..k"));
    }
    let core = QuadraticSystem::new(k, constraints, Some(zero_vec(k)))
        .expect("origin is interior for valid parameters");
    core.with_free_coordinates(m)
}

/// One point per dimension `d ∈ I` whose minimal face in [`build_theorem1`] has dimension `d`.
///
/// `min I`: the ball point `−e_1`. `max I`: the origin. Otherwise the point
/// `(r − c)·e_{d − min I + 1}` on the boundary of the corresponding cylinder.
pub fn theorem1_witnesses(sig: &Signature, p: &ConstructionParams) -> Vec<(usize, RVector)> {
    let (m, n) = (sig.min(), sig.max());
    sig.iter()
        .map(|d| {
            let point = if d == n {
                zero_vec(n)
            } else if d == m {
                unit_vec(n, 0).into_iter().map(|x| -x).collect()
            } else {
                let mut x = zero_vec(n);
                x[d - m] = &p.r - &p.c;
                x
            };
            (d, point)
        })
        .collect()
}

/// Direct sum of unit balls of sizes `1, 2, 4, …, 2^{K−1}`: signature `{0, …, n}` for `n = 2^K − 1`.
pub fn build_log_complete(n: usize) -> Result<QuadraticSystem, ConstructError> {
    if n == 0 || !(n + 1).is_power_of_two() {
        return Err(ConstructError::NotDyadic(n));
    }
    let blocks = (n + 1).trailing_zeros();
    let mut system = QuadraticSystem::empty(0);
    for k in 0..blocks {
        let size = 1usize << k;
        let ball = QuadraticSystem::new(
            size,
            vec![ConvexQuadratic::unit_ball(size)],
            Some(zero_vec(size)),
        )
        .expect("origin inside the unit ball");
        system = direct_sum(&system, &ball);
    }
    Ok(system)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RealizationPlan {
    pub tree: DecompositionTree,
    pub shift: usize,
    pub params: ConstructionParams,
    pub total_inequalities: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct Realization {
    pub system: QuadraticSystem,
    pub plan: RealizationPlan,
}

/// Builds a system whose signature is `I`, optionally along a cheapest sumset factorization.
///
/// A signature beyond the decomposition cap is built directly and the plan records a warning.
pub fn realize(sig: &Signature, p: &ConstructionParams, use_decomposition: bool) -> Realization {
    let m = sig.min();
    let normalized = Signature::new(sig.iter().map(|d| d - m)).expect("nonempty");
    let mut warnings = Vec::new();
    let tree = if use_decomposition {
        match decompose_min_cost(&normalized, None) {
            Ok(t) => t,
            Err(e @ SignatureError::CapExceeded { .. }) => {
                warnings.push(format!("{e}; built without decomposition"));
                DecompositionTree::Leaf(normalized.clone())
            }
            Err(e) => unreachable!("normalized signature rejected: {e}"),
        }
    } else {
        DecompositionTree::Leaf(normalized.clone())
    };
    debug_assert_eq!(shift(&tree.recompose(), m), *sig);
    let system = tree
        .leaves()
        .into_iter()
        .fold(QuadraticSystem::empty(0), |acc, leaf| {
            direct_sum(&acc, &build_theorem1(leaf, p))
        })
        .with_free_coordinates(m);
    let plan = RealizationPlan {
        total_inequalities: system.len(),
        tree,
        shift: m,
        params: p.clone(),
        warnings,
    };
    Realization { system, plan }
}

/// `⟨normal, x⟩ ≤ offset`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Halfspace {
    pub normal: RVector,
    pub offset: Rational,
}

impl Halfspace {
    pub fn contains(&self, x: &[Rational]) -> bool {
        dot(&self.normal, x) <= self.offset
    }
}

/// Supporting halfspace of `C_i^n` whose boundary meets the cylinder in `R^i ⊕ {x̄}`.
///
/// Comes from `⟨u + c e_{i+1}, x̄ + c e_{i+1}⟩ ≤ r²` for `u` in the cylinder.
pub fn exposing_halfspace(
    i: usize,
    n: usize,
    p: &ConstructionParams,
    xbar: &[Rational],
) -> Result<Halfspace, ConstructError> {
    let cylinder = build_cylinder(i, n, p)?;
    let on_boundary = xbar.len() == n
        && xbar[..i].iter().all(Zero::is_zero)
        && cylinder.evaluate(xbar)?.is_zero();
    if !on_boundary {
        return Err(ConstructError::NotOnBoundary(i));
    }
    let mut normal = xbar.to_vec();
    normal[i] += &p.c;
    let offset = &p.r * &p.r - &p.c * (&xbar[i] + &p.c);
    Ok(Halfspace { normal, offset })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadratic::QuadraticKind;

    fn sig(s: &str) -> Signature {
        s.parse().unwrap()
    }

    #[test]
    fn default_params_are_valid() {
        let p = ConstructionParams::default();
        assert!(ConstructionParams::new(p.c().clone(), p.r().clone()).is_ok());
        assert!(ConstructionParams::new(rat(1, 1), rat(12, 10)).is_err());
        assert!(ConstructionParams::new(rat(7, 10), rat(17, 10)).is_err());
        assert!(ConstructionParams::new(rat(7, 10), rat(3, 2)).is_err());
        assert_eq!(
            serde_json::to_string(&p).unwrap(),
            r#"{"c":"7/10","r":"8/5"}"#
        );
    }

    #[test]
    fn cylinder_shape() {
        let p = ConstructionParams::default();
        let q = build_cylinder(1, 3, &p).unwrap();
        assert_eq!(q.evaluate(&zero_vec(3)).unwrap(), rat(-207, 100));
        let class = q.classify();
        assert_eq!(class.kind, QuadraticKind::CylinderBall);
        assert_eq!(class.signature, Some(sig("1,3")));
        assert!(build_cylinder(0, 3, &p).is_err());
        assert!(build_cylinder(3, 3, &p).is_err());
    }

    #[test]
    fn construction_layout() {
        let p = ConstructionParams::default();
        let s = build_theorem1(&sig("0,2,3"), &p);
        assert_eq!((s.dim(), s.len()), (3, 2));
        assert_eq!(s.constraints()[1], build_cylinder(2, 3, &p).unwrap());
        let s = build_theorem1(&sig("2,4"), &p);
        assert_eq!((s.dim(), s.len()), (4, 1));
        assert_eq!(s.constraints()[0].support(), vec![0, 1]);
        let s = build_theorem1(&sig("5"), &p);
        assert_eq!((s.dim(), s.len()), (5, 0));
    }

    #[test]
    fn dyadic_balls() {
        let s = build_log_complete(3).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.constraints()[0].support(), vec![0]);
        assert_eq!(s.constraints()[1].support(), vec![1, 2]);
        assert!(build_log_complete(4).is_err());
        assert!(build_log_complete(0).is_err());
    }

    #[test]
    fn realizations() {
        let p = ConstructionParams::default();
        let r = realize(&Signature::interval(0, 7), &p, true);
        assert_eq!(r.plan.total_inequalities, 3);
        assert_eq!(r.system.dim(), 7);
        let r = realize(&sig("0,2,3"), &p, true);
        assert_eq!(r.plan.tree, DecompositionTree::Leaf(sig("0,2,3")));
        let r = realize(&sig("5"), &p, true);
        assert_eq!((r.system.dim(), r.system.len()), (5, 0));
        let r = realize(&sig("0,30"), &p, true);
        assert_eq!(r.plan.warnings.len(), 1);
        assert_eq!(r.plan.total_inequalities, 1);
    }

    #[test]
    fn exposing_example() {
        let p = ConstructionParams::default();
        let xbar = vec![int(0), p.r() - p.c()];
        let h = exposing_halfspace(1, 2, &p, &xbar).unwrap();
        assert_eq!(h.normal, vec![int(0), p.r().clone()]);
        let r = p.r();
        let c = p.c();
        assert_eq!(h.offset, r * r - c * (r - c) - c * c);
        assert!(exposing_halfspace(1, 2, &p, &[int(0), int(0)]).is_err());
        assert!(exposing_halfspace(1, 2, &p, &[int(1), r - c]).is_err());
    }
}

//! Convex quadratic inequalities `f(x) = ⟨Ax, x⟩ + 2⟨a, x⟩ + α ≤ 0` and systems of them.

use num::{Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::io::rational::{unwrap_vec, wrap_vec, RationalText};
use crate::linalg::{
    dot, int, intersect_subspaces, is_zero_vec, null_space_basis, project_onto, psd_ldlt, rank,
    solve, zero_vec, LdltFactor, LinalgError, RMatrix, RVector, Rational, Subspace,
};
use crate::signature::Signature;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum QuadraticError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("quadratic part is not positive semidefinite")]
    NotPsd,
    #[error("constraint {index} has dimension {found}, system has {expected}")]
    ConstraintDimension {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("interior witness is not strictly feasible for constraint {0}")]
    WitnessNotInterior(usize),
    #[error("the solution set is empty")]
    EmptySet,
    #[error("{0:?} sets have no proper face of positive structure")]
    NoProperFaces(QuadraticKind),
    #[error(
        "cannot place a {dim}-dimensional constraint at offset {offset} in dimension {target}"
    )]
    EmbedRange {
        dim: usize,
        offset: usize,
        target: usize,
    },
}

/// One convex quadratic inequality. The matrix is symmetric PSD by construction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawQuadratic", into = "RawQuadratic")]
pub struct ConvexQuadratic {
    matrix: RMatrix,
    linear: RVector,
    constant: Rational,
}

#[derive(Serialize, Deserialize)]
struct RawQuadratic {
    #[serde(rename = "A")]
    matrix: Vec<Vec<RationalText>>,
    a: Vec<RationalText>,
    alpha: RationalText,
}

impl TryFrom<RawQuadratic> for ConvexQuadratic {
    type Error = QuadraticError;

    fn try_from(raw: RawQuadratic) -> Result<Self, Self::Error> {
        let n = raw.a.len();
        let rows: Vec<RVector> = raw.matrix.into_iter().map(unwrap_vec).collect();
        let matrix = if rows.is_empty() {
            RMatrix::zeros(0, n)
        } else {
            RMatrix::from_rows(rows)?
        };
        ConvexQuadratic::new(matrix, unwrap_vec(raw.a), raw.alpha.0)
    }
}

impl From<ConvexQuadratic> for RawQuadratic {
    fn from(q: ConvexQuadratic) -> Self {
        RawQuadratic {
            matrix: q.matrix.to_rows().iter().map(|r| wrap_vec(r)).collect(),
            a: wrap_vec(&q.linear),
            alpha: RationalText(q.constant),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum QuadraticKind {
    Empty,
    FullSpace,
    Singleton,
    AffineSubspace,
    HalfSpace,
    CylinderBall,
    ParaboloidCylinder,
}

/// Exact description of `{x : f(x) ≤ 0}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuadraticClass {
    pub kind: QuadraticKind,
    /// Dimension of `null(A)`.
    pub nullity: usize,
    pub proper_face_dim: Option<usize>,
    /// Direction space of the minimal face at every boundary point.
    pub face_directions: Option<Subspace>,
    /// `None` only for the empty set.
    pub signature: Option<Signature>,
    pub null_space: Subspace,
    /// A minimiser `x0` of `f` (solution of `A x0 = −a`), when one exists.
    pub center: Option<RVector>,
    /// `f(x0)`, when `center` exists.
    pub min_value: Option<Rational>,
    /// Component of `a` in `null(A)`.
    pub linear_null_part: RVector,
}

impl ConvexQuadratic {
    pub fn new(
        matrix: RMatrix,
        linear: RVector,
        constant: Rational,
    ) -> Result<Self, QuadraticError> {
        let n = linear.len();
        if matrix.rows() != n || matrix.cols() != n {
            return Err(LinalgError::DimensionMismatch {
                expected: n,
                found: if matrix.rows() != n {
                    matrix.rows()
                } else {
                    matrix.cols()
                },
            }
            .into());
        }
        if !psd_ldlt(&matrix)?.is_psd {
            return Err(QuadraticError::NotPsd);
        }
        Ok(ConvexQuadratic {
            matrix,
            linear,
            constant,
        })
    }

    /// `‖x‖² ≤ 1` in `R^n`.
    pub fn unit_ball(n: usize) -> Self {
        ConvexQuadratic {
            matrix: RMatrix::identity(n),
            linear: zero_vec(n),
            constant: int(-1),
        }
    }

    pub fn dim(&self) -> usize {
        self.linear.len()
    }

    pub fn matrix(&self) -> &RMatrix {
        &self.matrix
    }

    pub fn linear(&self) -> &[Rational] {
        &self.linear
    }

    pub fn constant(&self) -> &Rational {
        &self.constant
    }

    fn check_len(&self, found: usize) -> Result<(), QuadraticError> {
        if found != self.dim() {
            return Err(LinalgError::DimensionMismatch {
                expected: self.dim(),
                found,
            }
            .into());
        }
        Ok(())
    }

    pub fn evaluate(&self, x: &[Rational]) -> Result<Rational, QuadraticError> {
        self.check_len(x.len())?;
        let quad = self.matrix.quadratic_form(x)?;
        Ok(quad + int(2) * dot(&self.linear, x) + &self.constant)
    }

    /// Same value as [`evaluate`](Self::evaluate), through `P A Pᵀ = L D Lᵀ`.
    pub fn evaluate_factored(&self, x: &[Rational]) -> Result<Rational, QuadraticError> {
        self.check_len(x.len())?;
        let report = psd_ldlt(&self.matrix)?;
        let LdltFactor { perm, lower } = report.factor.ok_or(QuadraticError::NotPsd)?;
        let n = self.dim();
        let mut quad = Rational::zero();
        for (k, d) in report.pivots.iter().enumerate() {
            if d.is_zero() {
                continue;
            }
            let y = (k..n).fold(Rational::zero(), |acc, a| {
                acc + lower.get(a, k) * &x[perm[a]]
            });
            quad += d * &y * &y;
        }
        Ok(quad + int(2) * dot(&self.linear, x) + &self.constant)
    }

    pub fn evaluate_f64(&self, x: &[f64]) -> Result<f64, QuadraticError> {
        self.check_len(x.len())?;
        Ok(NumericQuadratic::from(self).value(x))
    }

    pub fn classify(&self) -> QuadraticClass {
        let n = self.dim();
        let null_space = null_space_basis(&self.matrix);
        let nullity = n - rank(&self.matrix);
        let linear_null_part =
            project_onto(&self.linear, &null_space).expect("dimensions agree by construction");
        let mut class = QuadraticClass {
            kind: QuadraticKind::Empty,
            nullity,
            proper_face_dim: None,
            face_directions: None,
            signature: None,
            null_space,
            center: None,
            min_value: None,
            linear_null_part,
        };
        let sig = |dims: &[usize]| Some(Signature::new(dims.iter().copied()).expect("nonempty"));

        if self.matrix.is_zero() {
            if is_zero_vec(&self.linear) {
                if !self.constant.is_positive() {
                    class.kind = QuadraticKind::FullSpace;
                    class.signature = sig(&[n]);
                }
            } else {
                let normal =
                    Subspace::span(n, std::slice::from_ref(&self.linear)).expect("length n");
                class.kind = QuadraticKind::HalfSpace;
                class.proper_face_dim = Some(n - 1);
                class.face_directions = Some(normal.orthogonal_complement());
                class.signature = sig(&[n - 1, n]);
            }
            return class;
        }

        if is_zero_vec(&class.linear_null_part) {
            let neg: RVector = self.linear.iter().map(|v| -v).collect();
            let center = solve(&self.matrix, &neg)
                .expect("square system")
                .expect("a lies in range(A)");
            let min_value = &self.constant + dot(&self.linear, &center);
            if min_value.is_zero() {
                class.kind = if nullity == 0 {
                    QuadraticKind::Singleton
                } else {
                    QuadraticKind::AffineSubspace
                };
                class.signature = sig(&[nullity]);
            } else if min_value.is_negative() {
                class.kind = QuadraticKind::CylinderBall;
                class.proper_face_dim = Some(nullity);
                class.face_directions = Some(class.null_space.clone());
                class.signature = sig(&[nullity, n]);
            }
            class.center = Some(center);
            class.min_value = Some(min_value);
            return class;
        }

        let normal = Subspace::span(n, std::slice::from_ref(&class.linear_null_part))
            .expect("length n")
            .orthogonal_complement();
        let directions =
            intersect_subspaces(n, &[class.null_space.clone(), normal]).expect("same ambient");
        class.kind = QuadraticKind::ParaboloidCylinder;
        class.proper_face_dim = Some(nullity - 1);
        class.face_directions = Some(directions);
        class.signature = sig(&[nullity - 1, n]);
        class
    }

    pub fn single_signature(&self) -> Result<Signature, QuadraticError> {
        self.classify().signature.ok_or(QuadraticError::EmptySet)
    }

    pub fn face_direction_space(&self) -> Result<Subspace, QuadraticError> {
        let class = self.classify();
        class
            .face_directions
            .ok_or(QuadraticError::NoProperFaces(class.kind))
    }

    /// The same inequality acting on coordinates `offset..offset + dim()` of `R^target_dim`.
    pub fn embed(&self, target_dim: usize, offset: usize) -> Result<Self, QuadraticError> {
        let n = self.dim();
        if offset + n > target_dim {
            return Err(QuadraticError::EmbedRange {
                dim: n,
                offset,
                target: target_dim,
            });
        }
        let mut matrix = RMatrix::zeros(target_dim, target_dim);
        let mut linear = zero_vec(target_dim);
        for i in 0..n {
            linear[offset + i] = self.linear[i].clone();
            for j in 0..n {
                matrix.set(offset + i, offset + j, self.matrix.get(i, j).clone());
            }
        }
        Ok(ConvexQuadratic {
            matrix,
            linear,
            constant: self.constant.clone(),
        })
    }

    /// Indices of variables the inequality depends on.
    pub fn support(&self) -> Vec<usize> {
        (0..self.dim())
            .filter(|&i| {
                !self.linear[i].is_zero()
                    || (0..self.dim()).any(|j| !self.matrix.get(i, j).is_zero())
            })
            .collect()
    }

    /// Restriction to the coordinates `vars` (others fixed at zero).
    pub fn restrict(&self, vars: &[usize]) -> Self {
        let k = vars.len();
        let mut matrix = RMatrix::zeros(k, k);
        for (i, &vi) in vars.iter().enumerate() {
            for (j, &vj) in vars.iter().enumerate() {
                matrix.set(i, j, self.matrix.get(vi, vj).clone());
            }
        }
        ConvexQuadratic {
            matrix,
            linear: vars.iter().map(|&v| self.linear[v].clone()).collect(),
            constant: self.constant.clone(),
        }
    }

    /// Pulls back along `x = origin + basis·y`; the result lives on `y`.
    /// A principal restriction of a PSD form stays PSD, so no re-check is needed.
    pub fn pullback(&self, origin: &[Rational], basis: &[RVector]) -> Result<Self, QuadraticError> {
        self.check_len(origin.len())?;
        let k = basis.len();
        let a_basis: Vec<RVector> = basis
            .iter()
            .map(|b| self.matrix.mul_vec(b))
            .collect::<Result<_, _>>()?;
        let mut matrix = RMatrix::zeros(k, k);
        for (i, b) in basis.iter().enumerate() {
            for (j, ab) in a_basis.iter().enumerate() {
                matrix.set(i, j, dot(b, ab));
            }
        }
        let grad_half: RVector = self
            .matrix
            .mul_vec(origin)?
            .iter()
            .zip(&self.linear)
            .map(|(x, y)| x + y)
            .collect();
        let linear = basis.iter().map(|b| dot(b, &grad_half)).collect();
        let constant = self.evaluate(origin)?;
        Ok(ConvexQuadratic {
            matrix,
            linear,
            constant,
        })
    }
}

/// Floating-point copy of a quadratic for sampling.
#[derive(Clone, Debug)]
pub struct NumericQuadratic {
    pub matrix: Vec<Vec<f64>>,
    pub linear: Vec<f64>,
    pub constant: f64,
}

impl From<&ConvexQuadratic> for NumericQuadratic {
    fn from(q: &ConvexQuadratic) -> Self {
        NumericQuadratic {
            matrix: q.matrix.to_f64_rows(),
            linear: crate::linalg::vec_to_f64(&q.linear),
            constant: crate::linalg::to_f64(&q.constant),
        }
    }
}

impl NumericQuadratic {
    pub fn dim(&self) -> usize {
        self.linear.len()
    }

    pub fn mat_vec(&self, x: &[f64]) -> Vec<f64> {
        self.matrix
            .iter()
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let ax = self.mat_vec(x);
        let quad: f64 = ax.iter().zip(x).map(|(a, b)| a * b).sum();
        let lin: f64 = self.linear.iter().zip(x).map(|(a, b)| a * b).sum();
        quad + 2.0 * lin + self.constant
    }

    /// `∇f(x) = 2(Ax + a)`.
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.mat_vec(x)
            .iter()
            .zip(&self.linear)
            .map(|(ax, a)| 2.0 * (ax + a))
            .collect()
    }
}

/// `{x ∈ R^dim : f_j(x) ≤ 0 for all j}`, optionally with a known strictly feasible point.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawSystem", into = "RawSystem")]
pub struct QuadraticSystem {
    dim: usize,
    constraints: Vec<ConvexQuadratic>,
    interior_witness: Option<RVector>,
}

#[derive(Serialize, Deserialize)]
struct RawSystem {
    dim: usize,
    constraints: Vec<ConvexQuadratic>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    interior_witness: Option<Vec<RationalText>>,
}

impl TryFrom<RawSystem> for QuadraticSystem {
    type Error = QuadraticError;

    fn try_from(raw: RawSystem) -> Result<Self, Self::Error> {
        QuadraticSystem::new(
            raw.dim,
            raw.constraints,
            raw.interior_witness.map(unwrap_vec),
        )
    }
}

impl From<QuadraticSystem> for RawSystem {
    fn from(s: QuadraticSystem) -> Self {
        RawSystem {
            dim: s.dim,
            constraints: s.constraints,
            interior_witness: s.interior_witness.as_deref().map(wrap_vec),
        }
    }
}

impl QuadraticSystem {
    pub fn new(
        dim: usize,
        constraints: Vec<ConvexQuadratic>,
        interior_witness: Option<RVector>,
    ) -> Result<Self, QuadraticError> {
        for (index, q) in constraints.iter().enumerate() {
            if q.dim() != dim {
                return Err(QuadraticError::ConstraintDimension {
                    index,
                    expected: dim,
                    found: q.dim(),
                });
            }
        }
        if let Some(w) = &interior_witness {
            if w.len() != dim {
                return Err(LinalgError::DimensionMismatch {
                    expected: dim,
                    found: w.len(),
                }
                .into());
            }
            for (index, q) in constraints.iter().enumerate() {
                if !q.evaluate(w)?.is_negative() {
                    return Err(QuadraticError::WitnessNotInterior(index));
                }
            }
        }
        Ok(QuadraticSystem {
            dim,
            constraints,
            interior_witness,
        })
    }

    /// No constraints: the whole of `R^dim`, with the origin as witness.
    pub fn empty(dim: usize) -> Self {
        QuadraticSystem {
            dim,
            constraints: Vec::new(),
            interior_witness: Some(zero_vec(dim)),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn constraints(&self) -> &[ConvexQuadratic] {
        &self.constraints
    }

    pub fn interior_witness(&self) -> Option<&[Rational]> {
        self.interior_witness.as_deref()
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    /// `max_j f_j(x)`, or `None` when there are no constraints.
    pub fn max_value(&self, x: &[Rational]) -> Result<Option<Rational>, QuadraticError> {
        let mut best: Option<Rational> = None;
        for q in &self.constraints {
            let v = q.evaluate(x)?;
            if best.as_ref().is_none_or(|b| &v > b) {
                best = Some(v);
            }
        }
        Ok(best)
    }

    pub fn numeric(&self) -> Vec<NumericQuadratic> {
        self.constraints
            .iter()
            .map(NumericQuadratic::from)
            .collect()
    }

    /// Appends `k` unconstrained coordinates.
    pub fn with_free_coordinates(&self, k: usize) -> Self {
        direct_sum(self, &QuadraticSystem::empty(k))
    }
}

/// Product set on disjoint variable blocks: `s1` on the first coordinates, `s2` after.
pub fn direct_sum(s1: &QuadraticSystem, s2: &QuadraticSystem) -> QuadraticSystem {
    let dim = s1.dim + s2.dim;
    let constraints = s1
        .constraints
        .iter()
        .map(|q| q.embed(dim, 0))
        .chain(s2.constraints.iter().map(|q| q.embed(dim, s1.dim)))
        .collect::<Result<Vec<_>, _>>()
        .expect("blocks fit by construction");
    let interior_witness = match (&s1.interior_witness, &s2.interior_witness) {
        (Some(w1), Some(w2)) => Some(w1.iter().chain(w2).cloned().collect()),
        _ => None,
    };
    QuadraticSystem {
        dim,
        constraints,
        interior_witness,
    }
}

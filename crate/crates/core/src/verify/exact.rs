//! Structural signature computation.
//!
//! The variables split into blocks that no constraint couples; the set is the
//! direct product of the block sets times a free `R^k`, so its signature is the
//! Minkowski sum of block signatures shifted by `k`. A block is handled when it
//! is one quadratic (classified exactly) or a unit ball with cylinders sharing
//! one offset and radius that pass the exact disjointness conditions.

use std::collections::BTreeMap;

use num::{One, Signed, Zero};

use super::{Confidence, Method, VerificationReport, VerifyError};
use crate::construct::restriction_failure;
use crate::linalg::{dot, to_f64, vec_to_f64, Rational};
use crate::quadratic::{ConvexQuadratic, QuadraticKind, QuadraticSystem};
use crate::signature::Signature;

/// Constraints acting on one connected group of variables.
#[derive(Clone, Debug)]
pub struct Block {
    /// Original variable indices, ascending; block coordinate `k` is `vars[k]`.
    pub vars: Vec<usize>,
    /// Indices into the original constraint list.
    pub constraints: Vec<usize>,
    /// The constraints restricted to `vars`.
    pub system: QuadraticSystem,
}

#[derive(Clone, Debug)]
pub struct BlockSplit {
    pub blocks: Vec<Block>,
    /// Variables that appear in no constraint.
    pub free_vars: Vec<usize>,
    /// Constraints with no variables at all (`f ≡ α`).
    pub constant_constraints: Vec<usize>,
}

fn find(parent: &mut [usize], x: usize) -> usize {
    let mut root = x;
    while parent[root] != root {
        root = parent[root];
    }
    let mut cur = x;
    while parent[cur] != root {
        let next = parent[cur];
        parent[cur] = root;
        cur = next;
    }
    root
}

/// Connected components of the variable co-occurrence graph.
pub fn blocks(s: &QuadraticSystem) -> BlockSplit {
    let n = s.dim();
    let mut parent: Vec<usize> = (0..n).collect();
    let supports: Vec<Vec<usize>> = s
        .constraints()
        .iter()
        .map(ConvexQuadratic::support)
        .collect();
    let mut constrained = vec![false; n];
    for support in &supports {
        for &v in support {
            constrained[v] = true;
        }
        for w in support.windows(2) {
            let (a, b) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut by_root: BTreeMap<usize, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
    for v in (0..n).filter(|&v| constrained[v]) {
        let root = find(&mut parent, v);
        by_root.entry(root).or_default().0.push(v);
    }
    let mut constant_constraints = Vec::new();
    for (j, support) in supports.iter().enumerate() {
        match support.first() {
            Some(&v) => {
                let root = find(&mut parent, v);
                by_root.get_mut(&root).expect("constrained root").1.push(j);
            }
            None => constant_constraints.push(j),
        }
    }
    let blocks = by_root
        .into_values()
        .map(|(vars, constraints)| {
            let restricted = constraints
                .iter()
                .map(|&j| s.constraints()[j].restrict(&vars))
                .collect();
            let witness = s
                .interior_witness()
                .map(|w| vars.iter().map(|&v| w[v].clone()).collect());
            let system = QuadraticSystem::new(vars.len(), restricted, witness)
                .expect("restriction keeps dimensions and strict feasibility");
            Block {
                vars,
                constraints,
                system,
            }
        })
        .collect();
    BlockSplit {
        blocks,
        free_vars: (0..n).filter(|&v| !constrained[v]).collect(),
        constant_constraints,
    }
}

struct BlockResult {
    /// Dimension → witness in block coordinates.
    witnesses: BTreeMap<usize, Vec<f64>>,
    warning: Option<String>,
}

fn scaled(v: &[Rational], t: &Rational) -> Vec<f64> {
    v.iter().map(|x| to_f64(&(x * t))).collect()
}

fn single_block(q: &ConvexQuadratic) -> Result<BlockResult, VerifyError> {
    let n = q.dim();
    let class = q.classify();
    let mut witnesses = BTreeMap::new();
    let mut warning = None;
    match class.kind {
        QuadraticKind::Empty => return Err(VerifyError::Infeasible),
        QuadraticKind::FullSpace => {
            witnesses.insert(n, vec![0.0; n]);
        }
        QuadraticKind::HalfSpace => {
            // f = 2⟨a, x⟩ + α vanishes at −α/(2|a|²)·a
            let a = q.linear();
            let t = -q.constant() / (Rational::from_integer(2.into()) * dot(a, a));
            let boundary = scaled(a, &t);
            let inside = scaled(a, &(t - Rational::one()));
            witnesses.insert(n - 1, boundary);
            witnesses.insert(n, inside);
        }
        QuadraticKind::CylinderBall => {
            let center = class.center.as_ref().expect("cylinder-ball has a center");
            let min_value = class
                .min_value
                .as_ref()
                .expect("cylinder-ball has a minimum");
            let j = (0..n)
                .find(|&j| q.matrix().get(j, j).is_positive())
                .expect("nonzero PSD matrix has a positive diagonal entry");
            let step = (to_f64(&(-min_value / q.matrix().get(j, j)))).sqrt();
            let mut boundary = vec_to_f64(center);
            boundary[j] += step;
            witnesses.insert(class.nullity, boundary);
            witnesses.insert(n, vec_to_f64(center));
        }
        QuadraticKind::ParaboloidCylinder => {
            // With a_N the null-space part of a: f(t·a_N) = 2t|a_N|² + α.
            let a_n = &class.linear_null_part;
            let t = -q.constant() / (Rational::from_integer(2.into()) * dot(a_n, a_n));
            witnesses.insert(class.nullity - 1, scaled(a_n, &t));
            witnesses.insert(n, scaled(a_n, &(t - Rational::one())));
        }
        QuadraticKind::Singleton | QuadraticKind::AffineSubspace => {
            let center = class.center.as_ref().expect("affine class has a center");
            witnesses.insert(class.nullity, vec_to_f64(center));
            warning = Some(format!(
                "constraint solution set is an affine subspace of dimension {} (no full-dimensional face)",
                class.nullity
            ));
        }
    }
    Ok(BlockResult { witnesses, warning })
}

/// Offset `c` and radius squared of a cylinder `(x_{i+1} + c)² + … + x_n² ≤ r²`, with `i`.
fn cylinder_shape(q: &ConvexQuadratic) -> Option<(usize, Rational, Rational)> {
    let n = q.dim();
    let m = q.matrix();
    let i = (0..n).take_while(|&k| m.get(k, k).is_zero()).count();
    if i == 0 || i >= n {
        return None;
    }
    for r in 0..n {
        for c in 0..n {
            let expected = if r == c && r >= i {
                Rational::one()
            } else {
                Rational::zero()
            };
            if m.get(r, c) != &expected {
                return None;
            }
        }
    }
    let lin = q.linear();
    let c = lin[i].clone();
    if !c.is_positive() || lin.iter().enumerate().any(|(k, v)| k != i && !v.is_zero()) {
        return None;
    }
    let r_squared = &c * &c - q.constant();
    Some((i, c, r_squared))
}

fn is_unit_ball(q: &ConvexQuadratic) -> bool {
    *q == ConvexQuadratic::unit_ball(q.dim())
}

fn template_block(s: &QuadraticSystem) -> Option<BlockResult> {
    let n = s.dim();
    let (balls, others): (Vec<&ConvexQuadratic>, Vec<&ConvexQuadratic>) =
        s.constraints().iter().partition(|q| is_unit_ball(q));
    if balls.len() != 1 {
        return None;
    }
    let shapes: Vec<(usize, Rational, Rational)> = others
        .iter()
        .map(|q| cylinder_shape(q))
        .collect::<Option<_>>()?;
    let (_, c, r_squared) = shapes.first()?.clone();
    if shapes
        .iter()
        .any(|(_, c2, r2)| c2 != &c || r2 != &r_squared)
    {
        return None;
    }
    let mut indices: Vec<usize> = shapes.iter().map(|(i, _, _)| *i).collect();
    indices.sort_unstable();
    if indices.windows(2).any(|w| w[0] == w[1]) || restriction_failure(&c, &r_squared).is_some() {
        return None;
    }
    let gap = to_f64(&r_squared).sqrt() - to_f64(&c);
    let mut witnesses = BTreeMap::new();
    let mut corner = vec![0.0; n];
    corner[0] = -1.0;
    witnesses.insert(0, corner);
    for &i in &indices {
        let mut x = vec![0.0; n];
        x[i] = gap;
        witnesses.insert(i, x);
    }
    witnesses.insert(n, vec![0.0; n]);
    Some(BlockResult {
        witnesses,
        warning: None,
    })
}

pub fn exact_signature(s: &QuadraticSystem) -> Result<VerificationReport, VerifyError> {
    let split = blocks(s);
    if split
        .constant_constraints
        .iter()
        .any(|&j| s.constraints()[j].constant().is_positive())
    {
        return Err(VerifyError::Infeasible);
    }
    let mut warnings = Vec::new();
    // Partial sums of block dimensions with one witness each, in full coordinates.
    let mut reachable: BTreeMap<usize, Vec<f64>> = BTreeMap::from([(0, vec![0.0; s.dim()])]);
    for block in &split.blocks {
        let result = if block.system.len() == 1 {
            single_block(&block.system.constraints()[0])?
        } else {
            template_block(&block.system)
                .ok_or_else(|| VerifyError::UnrecognizedStructure(block.vars.clone()))?
        };
        if let Some(w) = result.warning {
            warnings.push(format!("constraint {}: {w}", block.constraints[0]));
        }
        let mut next: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        for (d, x) in &reachable {
            for (e, w) in &result.witnesses {
                next.entry(d + e).or_insert_with(|| {
                    let mut point = x.clone();
                    for (k, &v) in block.vars.iter().enumerate() {
                        point[v] = w[k];
                    }
                    point
                });
            }
        }
        reachable = next;
    }
    let free = split.free_vars.len();
    let witnesses: BTreeMap<usize, Vec<f64>> =
        reachable.into_iter().map(|(d, x)| (d + free, x)).collect();
    let signature = Signature::new(witnesses.keys().copied()).expect("at least one dimension");
    Ok(VerificationReport {
        signature,
        method: Method::Exact,
        witnesses,
        confidence: Confidence::Exact,
        warnings,
    })
}

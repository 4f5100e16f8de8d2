//! Numerical signature measurement.
//!
//! At a boundary point `x` with active constraints `J`, the minimal face is
//! locally `x + ∩_{j∈J} D_j` where `D_j` is the face-direction space of
//! constraint `j`. The probe samples boundary points along random rays from an
//! interior point, measures `dim ∩ D_j` exactly per active set, and cross-checks
//! it against a floating-point null space of the stacked rows `[A_j; ∇f_j(x)]`.

use std::collections::{BTreeMap, HashMap};

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::numeric::{axpy, max_value, norm, phase_one, ray_exit};
use super::{ActiveSet, Confidence, Method, VerificationReport, VerifyError};
use crate::linalg::{
    intersect_subspaces, null_space_basis, solve, to_f64, unit_vec, vec_to_f64, RMatrix, RVector,
    Rational, Subspace,
};
use crate::quadratic::{ConvexQuadratic, NumericQuadratic, QuadraticKind, QuadraticSystem};
use crate::signature::Signature;

pub const TOL_ACTIVE: f64 = 1e-8;
pub const TOL_SLACK: f64 = 1e-8;
/// Step used to confirm that measured face directions are flat.
pub const FACE_STEP: f64 = 1e-6;

/// Singular values below this fraction of the largest count as zero.
const RANK_TOL: f64 = 1e-9;
const NEWTON_ITERS: usize = 50;
const NEWTON_STARTS: usize = 8;
const MAX_TUPLE: usize = 3;

fn face_space(q: &ConvexQuadratic) -> Result<Subspace, VerifyError> {
    let class = q.classify();
    match class.kind {
        QuadraticKind::Empty => Err(VerifyError::Infeasible),
        QuadraticKind::FullSpace => Ok(Subspace::full(q.dim())),
        QuadraticKind::Singleton | QuadraticKind::AffineSubspace => Ok(class.null_space),
        _ => Ok(class.face_directions.expect("proper faces present")),
    }
}

fn active_indices(quads: &[NumericQuadratic], x: &[f64]) -> Vec<usize> {
    quads
        .iter()
        .enumerate()
        .filter(|(_, q)| q.value(x).abs() <= TOL_ACTIVE)
        .map(|(j, _)| j)
        .collect()
}

fn exact_face_dim(dim: usize, spaces: &[Subspace], active: &[usize]) -> usize {
    let chosen: Vec<Subspace> = active.iter().map(|&j| spaces[j].clone()).collect();
    intersect_subspaces(dim, &chosen)
        .expect("spaces share the ambient dimension")
        .dim()
}

/// Dimension of the floating-point null space of `[A_j; ∇f_j(x)]` over active `j`,
/// counting only directions that also pass the `FACE_STEP` flatness test.
fn numeric_face_dim(quads: &[NumericQuadratic], active: &[usize], x: &[f64]) -> usize {
    let k = x.len();
    if active.is_empty() || k == 0 {
        return k;
    }
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut grads = Vec::with_capacity(active.len());
    for &j in active {
        let q = &quads[j];
        let scale = q
            .matrix
            .iter()
            .flatten()
            .fold(0.0_f64, |m, v| m.max(v.abs()));
        if scale > 0.0 {
            rows.extend(
                q.matrix
                    .iter()
                    .map(|r| r.iter().map(|v| v / scale).collect()),
            );
        }
        let g = q.gradient(x);
        let gn = norm(&g);
        if gn > 0.0 {
            rows.push(g.iter().map(|v| v / gn).collect());
        }
        grads.push(g);
    }
    // Pad so the SVD returns a full set of right singular vectors.
    while rows.len() < k {
        rows.push(vec![0.0; k]);
    }
    let m = DMatrix::from_fn(rows.len(), k, |i, c| rows[i][c]);
    let svd = m.svd(false, true);
    let v_t = svd.v_t.expect("requested");
    let sigma_max = svd.singular_values.max();
    let cutoff = RANK_TOL * sigma_max;
    (0..svd.singular_values.len())
        .filter(|&i| sigma_max == 0.0 || svd.singular_values[i] <= cutoff)
        .filter(|&i| {
            let u: Vec<f64> = v_t.row(i).iter().copied().collect();
            active.iter().zip(&grads).all(|(&j, g)| {
                let q = &quads[j];
                let slope: f64 = g.iter().zip(&u).map(|(a, b)| a * b).sum();
                let curve: f64 = q.mat_vec(&u).iter().zip(&u).map(|(a, b)| a * b).sum();
                2.0 * FACE_STEP * slope.abs() + FACE_STEP * FACE_STEP * curve <= TOL_ACTIVE
            })
        })
        .count()
}

/// Dimension of the minimal face of the solution set containing `x`.
///
/// Computed exactly from the active constraints' direction spaces and
/// confirmed numerically; disagreement is reported as [`VerifyError::ProbeMismatch`].
pub fn minimal_face_dim_at(s: &QuadraticSystem, x: &[f64]) -> Result<usize, VerifyError> {
    let quads = s.numeric();
    let worst = max_value(&quads, x);
    if worst > TOL_ACTIVE {
        return Err(VerifyError::NotFeasible(worst));
    }
    let spaces: Vec<Subspace> = s
        .constraints()
        .iter()
        .map(face_space)
        .collect::<Result<_, _>>()?;
    let active = active_indices(&quads, x);
    let exact = exact_face_dim(s.dim(), &spaces, &active);
    let numeric = numeric_face_dim(&quads, &active, x);
    if exact != numeric {
        return Err(VerifyError::ProbeMismatch {
            active,
            exact,
            numeric,
        });
    }
    Ok(exact)
}

/// A strictly feasible point: the stored witness, else phase I from the origin.
pub fn interior_point(s: &QuadraticSystem) -> Result<Vec<f64>, VerifyError> {
    let quads = s.numeric();
    if let Some(w) = s.interior_witness() {
        let x = vec_to_f64(w);
        if max_value(&quads, &x) < 0.0 {
            return Ok(x);
        }
    }
    phase_one(&quads, &vec![0.0; s.dim()]).ok_or(VerifyError::NoInteriorFound)
}

/// Boundary point on the ray `x0 + t·direction`, or `None` for a ray that stays inside.
pub fn boundary_sample(s: &QuadraticSystem, x0: &[f64], direction: &[f64]) -> Option<ActiveSet> {
    let quads = s.numeric();
    let t = ray_exit(&quads, x0, direction)?;
    let point = axpy(x0, t, direction);
    Some(ActiveSet {
        indices: active_indices(&quads, &point),
        point,
    })
}

/// The system pulled back to the affine hull cut out by its affine-class constraints.
struct Reduced {
    origin: RVector,
    basis: Vec<RVector>,
    constraints: Vec<ConvexQuadratic>,
    spaces: Vec<Subspace>,
    restricted: bool,
    warnings: Vec<String>,
}

impl Reduced {
    fn dim(&self) -> usize {
        self.basis.len()
    }

    fn lift(&self, y: &[f64]) -> Vec<f64> {
        let mut x = vec_to_f64(&self.origin);
        for (b, &c) in self.basis.iter().zip(y) {
            for (xi, bi) in x.iter_mut().zip(b) {
                *xi += c * to_f64(bi);
            }
        }
        x
    }
}

fn reduce(s: &QuadraticSystem) -> Result<Reduced, VerifyError> {
    let n = s.dim();
    let mut origin = vec![Rational::from_integer(0.into()); n];
    let mut basis: Vec<RVector> = (0..n).map(|i| unit_vec(n, i)).collect();
    let mut constraints = s.constraints().to_vec();
    let mut restricted = false;
    let mut warnings = Vec::new();
    loop {
        let k = basis.len();
        let mut keep = Vec::new();
        let mut affine = Vec::new();
        for q in constraints {
            match q.classify().kind {
                QuadraticKind::Empty => return Err(VerifyError::Infeasible),
                QuadraticKind::FullSpace => {}
                QuadraticKind::Singleton | QuadraticKind::AffineSubspace => affine.push(q),
                _ => keep.push(q),
            }
        }
        if affine.is_empty() {
            constraints = keep;
            break;
        }
        warnings.push(format!(
            "{} constraint(s) define affine subspaces; probing inside their common solution set",
            affine.len()
        ));
        // f = 0 on such a set exactly where A y = −a.
        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        for q in &affine {
            for i in 0..k {
                rows.push(q.matrix().row(i).to_vec());
                rhs.push(-q.linear()[i].clone());
            }
        }
        let stacked = RMatrix::from_vectors(k, &rows).expect("rows have length k");
        let y0 = solve(&stacked, &rhs)
            .expect("one right-hand side per row")
            .ok_or(VerifyError::Infeasible)?;
        let directions = null_space_basis(&stacked).basis().to_vec();
        constraints = keep
            .iter()
            .map(|q| q.pullback(&y0, &directions))
            .collect::<Result<_, _>>()?;
        for (b, c) in basis.iter().zip(&y0) {
            for (o, bi) in origin.iter_mut().zip(b) {
                *o += c * bi;
            }
        }
        basis = directions
            .iter()
            .map(|d| {
                let mut v = vec![Rational::from_integer(0.into()); n];
                for (b, c) in basis.iter().zip(d) {
                    for (vi, bi) in v.iter_mut().zip(b) {
                        *vi += c * bi;
                    }
                }
                v
            })
            .collect();
        restricted = true;
    }
    let spaces = constraints
        .iter()
        .map(face_space)
        .collect::<Result<_, _>>()?;
    Ok(Reduced {
        origin,
        basis,
        constraints,
        spaces,
        restricted,
        warnings,
    })
}

struct Observation {
    dim: usize,
    active: Vec<usize>,
    point: Vec<f64>,
}

fn random_direction(seed: u64, index: usize, k: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    loop {
        let u: Vec<f64> = (0..k).map(|_| StandardNormal.sample(&mut rng)).collect();
        let len = norm(&u);
        if len > 1e-12 {
            return u.iter().map(|v| v / len).collect();
        }
    }
}

/// Minimum-norm Gauss–Newton on `{f_j = 0 : j ∈ tuple}`.
fn gauss_newton(quads: &[NumericQuadratic], tuple: &[usize], start: &[f64]) -> Option<Vec<f64>> {
    let k = start.len();
    let mut x = start.to_vec();
    for _ in 0..NEWTON_ITERS {
        let residual =
            DVector::from_iterator(tuple.len(), tuple.iter().map(|&j| quads[j].value(&x)));
        if residual.amax() <= 1e-13 {
            return Some(x);
        }
        let jac = DMatrix::from_fn(tuple.len(), k, |r, c| quads[tuple[r]].gradient(&x)[c]);
        let step = jac.svd(true, true).solve(&residual, 1e-12).ok()?;
        x.iter_mut().zip(step.iter()).for_each(|(xi, s)| *xi -= s);
        if x.iter().any(|v| !v.is_finite()) {
            return None;
        }
    }
    let done = tuple
        .iter()
        .all(|&j| quads[j].value(&x).abs() <= TOL_ACTIVE);
    done.then_some(x)
}

fn tuples(m: usize, max_size: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(
        start: usize,
        m: usize,
        max_size: usize,
        cur: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if cur.len() >= 2 {
            out.push(cur.clone());
        }
        if cur.len() == max_size {
            return;
        }
        for j in start..m {
            cur.push(j);
            rec(j + 1, m, max_size, cur, out);
            cur.pop();
        }
    }
    rec(0, m, max_size, &mut cur, &mut out);
    out.sort_by_key(Vec::len);
    out
}

/// Signature estimate from `samples` random boundary points plus targeted refinement.
///
/// Directions are uniform on the sphere; sample `i` uses its own ChaCha8 stream
/// `i` under `seed`, so parallel and serial runs agree.
pub fn probe_signature(
    s: &QuadraticSystem,
    samples: usize,
    seed: u64,
) -> Result<VerificationReport, VerifyError> {
    let reduced = reduce(s)?;
    let k = reduced.dim();
    let quads: Vec<NumericQuadratic> = reduced
        .constraints
        .iter()
        .map(NumericQuadratic::from)
        .collect();
    let mut warnings = reduced.warnings.clone();

    let start = if reduced.restricted {
        None
    } else {
        s.interior_witness().map(vec_to_f64)
    };
    let interior = match start {
        Some(x) if max_value(&quads, &x) < 0.0 => x,
        _ => phase_one(&quads, &vec![0.0; k]).ok_or(VerifyError::NoInteriorFound)?,
    };

    let mut observations = vec![Observation {
        dim: k,
        active: Vec::new(),
        point: interior.clone(),
    }];
    let mut cache: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut mismatches = 0usize;
    let mut record =
        |active: Vec<usize>, point: Vec<f64>, numeric: usize, obs: &mut Vec<Observation>| {
            let dim = *cache
                .entry(active.clone())
                .or_insert_with(|| exact_face_dim(k, &reduced.spaces, &active));
            if dim == numeric {
                obs.push(Observation { dim, active, point });
            } else {
                mismatches += 1;
            }
        };

    let mut interior_rays = 0usize;
    if k > 0 && !quads.is_empty() {
        let shoot = |u: &[f64]| {
            ray_exit(&quads, &interior, u).map(|t| {
                let point = axpy(&interior, t, u);
                let active = active_indices(&quads, &point);
                let numeric = numeric_face_dim(&quads, &active, &point);
                (active, point, numeric)
            })
        };
        let random: Vec<_> = (0..samples)
            .into_par_iter()
            .map(|i| shoot(&random_direction(seed, i, k)))
            .collect();
        // Rays along each constraint's gradient reach its boundary where it is most exposed.
        let guided: Vec<_> = quads
            .iter()
            .filter_map(|q| {
                let g = q.gradient(&interior);
                let len = norm(&g);
                (len > 0.0).then(|| shoot(&g.iter().map(|v| v / len).collect::<Vec<_>>()))
            })
            .collect();
        for hit in random.into_iter().chain(guided) {
            match hit {
                Some((active, point, numeric)) => record(active, point, numeric, &mut observations),
                None => interior_rays += 1,
            }
        }

        for tuple in tuples(quads.len(), MAX_TUPLE) {
            let seen = observations
                .iter()
                .any(|o| tuple.iter().all(|j| o.active.contains(j)));
            if seen {
                continue;
            }
            let mut starts: Vec<&Observation> = observations
                .iter()
                .filter(|o| tuple.iter().any(|j| o.active.contains(j)))
                .collect();
            starts.sort_by_key(|o| {
                std::cmp::Reverse(tuple.iter().filter(|j| o.active.contains(j)).count())
            });
            let mut points: Vec<Vec<f64>> = starts
                .iter()
                .take(NEWTON_STARTS)
                .map(|o| o.point.clone())
                .collect();
            if points.len() < NEWTON_STARTS {
                points.push(interior.clone());
            }
            let found = points
                .par_iter()
                .filter_map(|p| gauss_newton(&quads, &tuple, p))
                .filter(|x| max_value(&quads, x) <= TOL_ACTIVE)
                .map(|x| {
                    let active = active_indices(&quads, &x);
                    let numeric = numeric_face_dim(&quads, &active, &x);
                    (active, x, numeric)
                })
                .collect::<Vec<_>>();
            for (active, x, numeric) in found {
                record(active, x, numeric, &mut observations);
            }
        }
    }
    if interior_rays > 0 {
        warnings.push(format!(
            "{interior_rays} ray(s) never left the set; faces reachable only at infinity are not covered"
        ));
    }
    if mismatches > 0 {
        warnings.push(format!(
            "{mismatches} boundary point(s) dropped: exact and numeric face dimensions disagree"
        ));
    }
    let mut witnesses: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for o in &observations {
        witnesses
            .entry(o.dim)
            .or_insert_with(|| reduced.lift(&o.point));
    }
    let signature = Signature::new(witnesses.keys().copied()).expect("interior observed");
    Ok(VerificationReport {
        signature,
        method: Method::Probe,
        witnesses,
        confidence: Confidence::Probabilistic {
            samples,
            tolerance: TOL_ACTIVE,
        },
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construct::{build_theorem1, ConstructionParams};
    use crate::linalg::int;
    use crate::quadratic::direct_sum;

    fn sig(s: &str) -> Signature {
        s.parse().unwrap()
    }

    fn system(q: ConvexQuadratic) -> QuadraticSystem {
        QuadraticSystem::new(q.dim(), vec![q], None).unwrap()
    }

    #[test]
    fn face_dims_at_points() {
        let p = ConstructionParams::default();
        let s = build_theorem1(&sig("0,1,2,3"), &p);
        let gap = 1.6 - 0.7;
        assert_eq!(minimal_face_dim_at(&s, &[0.0, gap, 0.0]).unwrap(), 1);
        assert_eq!(minimal_face_dim_at(&s, &[0.0, 0.0, 0.0]).unwrap(), 3);
        let ball = system(ConvexQuadratic::unit_ball(3));
        assert_eq!(minimal_face_dim_at(&ball, &[1.0, 0.0, 0.0]).unwrap(), 0);
        assert!(matches!(
            minimal_face_dim_at(&ball, &[2.0, 0.0, 0.0]),
            Err(VerifyError::NotFeasible(_))
        ));
    }

    #[test]
    fn samples_on_rays() {
        let p = ConstructionParams::default();
        let ball = system(ConvexQuadratic::unit_ball(2));
        let hit = boundary_sample(&ball, &[0.0, 0.0], &[1.0, 0.0]).unwrap();
        assert_eq!(hit.indices, vec![0]);
        assert!((hit.point[0] - 1.0).abs() < 1e-12);
        let s = build_theorem1(&sig("0,1,3"), &p);
        let hit = boundary_sample(&s, &[0.0; 3], &[0.0, 1.0, 0.0]).unwrap();
        assert_eq!(hit.indices, vec![1]);
        assert!((hit.point[1] - 0.9).abs() < 1e-12);
        let free = ball.with_free_coordinates(1);
        assert!(boundary_sample(&free, &[0.0; 3], &[0.0, 0.0, 1.0]).is_none());
    }

    #[test]
    fn probe_examples() {
        let p = ConstructionParams::default();
        let r = probe_signature(&build_theorem1(&sig("0,2,3"), &p), 5000, 42).unwrap();
        assert_eq!(r.signature, sig("0,2,3"));
        let parab = ConvexQuadratic::new(
            RMatrix::diagonal(&[int(1), int(0)]),
            vec![int(0), int(-1)],
            int(0),
        )
        .unwrap();
        let r = probe_signature(&system(parab), 2000, 42).unwrap();
        assert_eq!(r.signature, sig("0,2"));
        let b1 = system(ConvexQuadratic::unit_ball(1));
        let b2 = system(ConvexQuadratic::unit_ball(2));
        let r = probe_signature(&direct_sum(&b1, &b2), 2000, 7).unwrap();
        assert_eq!(r.signature, sig("0,1,2,3"));
    }

    #[test]
    fn affine_constraints_are_restricted() {
        // x1² ≤ 0 together with the unit ball in R²: a segment.
        let line = ConvexQuadratic::new(
            RMatrix::diagonal(&[int(1), int(0)]),
            vec![int(0), int(0)],
            int(0),
        )
        .unwrap();
        let s = QuadraticSystem::new(2, vec![line, ConvexQuadratic::unit_ball(2)], None).unwrap();
        let r = probe_signature(&s, 500, 1).unwrap();
        assert_eq!(r.signature, sig("0,1"));
        assert!(!r.warnings.is_empty());
        for (d, x) in &r.witnesses {
            assert_eq!(minimal_face_dim_at(&s, x).unwrap(), *d);
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let p = ConstructionParams::default();
        let s = build_theorem1(&sig("0,1,4"), &p);
        let a = probe_signature(&s, 300, 9).unwrap();
        let b = probe_signature(&s, 300, 9).unwrap();
        assert_eq!(a, b);
    }
}

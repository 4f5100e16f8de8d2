mod common;

use common::*;
use facetforge::construct::{build_theorem1, realize, ConstructionParams};
use facetforge::io::slice::{emit_slice, is_convex_polyline, SliceSpec};
use facetforge::linalg::{int, null_space_basis, psd_ldlt, rank, solve, RMatrix, Rational};
use facetforge::quadratic::{direct_sum, QuadraticKind, QuadraticSystem};
use facetforge::signature::{
    check_certificate, decompose_min_cost, lower_bound, minkowski_sum, shift, Signature,
};
use facetforge::verify::exact_signature;
use num::Zero;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn int_matrix(rows: usize, cols: usize) -> impl Strategy<Value = RMatrix> {
    prop::collection::vec(prop::collection::vec(-3i64..=3, cols), rows).prop_map(|rows| {
        RMatrix::from_rows(
            rows.into_iter()
                .map(|r| r.into_iter().map(int).collect())
                .collect(),
        )
        .unwrap()
    })
}

fn symmetric(n: usize) -> impl Strategy<Value = RMatrix> {
    // Gram matrix plus a sparse symmetric perturbation, so both outcomes are common.
    (
        any::<u64>(),
        0..=n,
        prop::collection::vec(-1i64..=1, n * n),
        any::<bool>(),
    )
        .prop_map(move |(seed, r, e, perturb)| {
            let mut m = random_gram(&mut ChaCha8Rng::seed_from_u64(seed), n, r);
            if perturb {
                for i in 0..n {
                    for j in i..n {
                        let v = m.get(i, j) + int(e[i * n + j]);
                        m.set(i, j, v.clone());
                        m.set(j, i, v);
                    }
                }
            }
            m
        })
}

fn signature_mask(max_dim: usize) -> impl Strategy<Value = Signature> {
    (0u64..1 << max_dim).prop_map(|m| sig_of(m << 1 | 1))
}

proptest! {
    #[test]
    fn psd_test_matches_principal_minors(m in (1usize..=4).prop_flat_map(symmetric)) {
        let report = psd_ldlt(&m).unwrap();
        prop_assert_eq!(report.is_psd, psd_by_minors(&m));
        if let Some(f) = report.factor {
            let n = m.rows();
            for i in 0..n {
                for j in 0..n {
                    let ldl: Rational = (0..n)
                        .map(|k| f.lower.get(i, k) * &report.pivots.get(k).cloned().unwrap_or_default() * f.lower.get(j, k))
                        .sum();
                    prop_assert_eq!(&ldl, m.get(f.perm[i], f.perm[j]));
                }
            }
        }
    }

    #[test]
    fn rank_and_null_space((m, b) in (1usize..=4, 1usize..=4).prop_flat_map(|(r, c)| (int_matrix(r, c), prop::collection::vec(-3i64..=3, r)))) {
        let r = rank(&m);
        prop_assert_eq!(r, rank(&m.transpose()));
        let null = null_space_basis(&m);
        prop_assert_eq!(null.dim(), m.cols() - r);
        for v in null.basis() {
            prop_assert!(m.mul_vec(v).unwrap().iter().all(Zero::is_zero));
        }
        let b: Vec<Rational> = b.into_iter().map(int).collect();
        let mut aug = m.to_rows();
        for (row, bi) in aug.iter_mut().zip(&b) {
            row.push(bi.clone());
        }
        let consistent = rank(&RMatrix::from_rows(aug).unwrap()) == r;
        match solve(&m, &b).unwrap() {
            Some(x) => prop_assert_eq!(m.mul_vec(&x).unwrap(), b),
            None => prop_assert!(!consistent),
        }
    }

    #[test]
    fn sumset_matches_definition(a in signature_mask(6), b in signature_mask(6)) {
        let s = minkowski_sum(&a, &b);
        prop_assert_eq!(mask_of(&s), sumset(mask_of(&a), mask_of(&b)));
        prop_assert_eq!(&s, &minkowski_sum(&b, &a));
        prop_assert_eq!(shift(&a, 3), minkowski_sum(&a, &Signature::singleton(3)));
    }

    #[test]
    fn decomposition_is_optimal(sig in signature_mask(7)) {
        let tree = decompose_min_cost(&sig, None).unwrap();
        prop_assert_eq!(tree.recompose(), sig.clone());
        prop_assert_eq!(tree.cost(), brute_min_cost(mask_of(&sig)));
    }

    #[test]
    fn lower_bound_is_minimal(sig in signature_mask(8)) {
        let cert = lower_bound(&sig);
        prop_assert!(check_certificate(&sig, &cert));
        prop_assert_eq!(cert.k, brute_lower_bound(&sig));
        prop_assert!(cert.k <= decompose_min_cost(&sig, None).unwrap().cost());
    }

    #[test]
    fn classification_is_orthogonally_invariant(
        seed in any::<u64>(),
        n in 1usize..=3,
        kind in 0usize..7,
        rotations in prop::collection::vec((0usize..3, 0usize..3), 0..3),
        perm_seed in any::<u64>(),
    ) {
        use rand::seq::SliceRandom;
        let kinds = [
            QuadraticKind::Empty, QuadraticKind::FullSpace, QuadraticKind::Singleton,
            QuadraticKind::AffineSubspace, QuadraticKind::HalfSpace,
            QuadraticKind::CylinderBall, QuadraticKind::ParaboloidCylinder,
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_quadratic(&mut rng, n, kinds[kind]);
        let mut q = RMatrix::identity(n);
        for (i, j) in rotations {
            let (i, j) = (i % n, j % n);
            if i != j {
                q = q.mul(&givens(n, i, j)).unwrap();
            }
        }
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(perm_seed));
        q = q.mul(&permutation(&perm)).unwrap();
        let s: Vec<Rational> = (0..n).map(|_| random_small_rat(&mut rng, 2)).collect();
        let g = transform(&f, &q, &s);
        let (cf, cg) = (f.classify(), g.classify());
        prop_assert_eq!(cf.kind, cg.kind);
        prop_assert_eq!(cf.signature, cg.signature);
        prop_assert_eq!(cf.nullity, cg.nullity);
    }

    #[test]
    fn system_json_roundtrip(sig in signature_mask(6)) {
        let s = build_theorem1(&sig, &ConstructionParams::default());
        let text = serde_json::to_string(&s).unwrap();
        let back: QuadraticSystem = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, s);
    }

    #[test]
    fn direct_sum_and_shift_laws(a in signature_mask(4), b in signature_mask(4), k in 0usize..=3) {
        let p = ConstructionParams::default();
        let (sa, sb) = (build_theorem1(&a, &p), build_theorem1(&b, &p));
        let sum = direct_sum(&sa, &sb);
        prop_assert_eq!(exact_signature(&sum).unwrap().signature, minkowski_sum(&a, &b));
        let shifted = sa.with_free_coordinates(k);
        prop_assert_eq!(exact_signature(&shifted).unwrap().signature, shift(&a, k));
    }
}

#[test]
fn construction_small_exhaustive() {
    let p = ConstructionParams::default();
    for mask in 1u64..1 << 6 {
        let sig = sig_of(mask);
        let s = build_theorem1(&sig, &p);
        assert_eq!(s.len(), sig.len() - 1);
        assert_eq!(s.dim(), Signature::max(&sig));
        assert_eq!(exact_signature(&s).unwrap().signature, sig, "{sig}");
    }
}

#[test]
fn oracles_agree_on_known_cases() {
    // {0,1,2,3} = {0,1} + {0,2}
    assert_eq!(brute_min_cost(0b1111), 2);
    assert_eq!(brute_min_cost(0b1101), 2);
    assert_eq!(brute_lower_bound(&Signature::interval(0, 7)), 3);
    assert_eq!(brute_lower_bound(&Signature::singleton(4)), 0);
    let m = RMatrix::from_i64(&[&[1, 2], &[2, 1]]);
    assert!(!psd_by_minors(&m));
}

fn assert_slice_ok(s: &QuadraticSystem, spec: &SliceSpec) {
    let curve = emit_slice(s, spec).unwrap();
    assert_eq!(curve.clipped, 0);
    let numeric = s.numeric();
    for p in &curve.points {
        let worst = numeric
            .iter()
            .map(|f| f.value(&p.x))
            .fold(f64::MIN, f64::max);
        assert!(worst.abs() <= 1e-6, "max f = {worst}");
    }
    let pts: Vec<(f64, f64)> = curve.points.iter().map(|p| (p.s, p.t)).collect();
    assert!(is_convex_polyline(&pts, 1e-9));
}

#[test]
fn complete_signature_slice_orthogonal_to_ones() {
    let sig = Signature::interval(0, 4);
    let r = realize(&sig, &ConstructionParams::default(), true);
    assert_eq!(r.system.dim(), 4);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let spec = SliceSpec {
        base_point: vec![0.0; 4],
        u: vec![h, -h, 0.0, 0.0],
        v: vec![0.0, 0.0, h, -h],
        resolution: 256,
        extent: 10.0,
    };
    assert_slice_ok(&r.system, &spec);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn slices_are_feasible_and_convex(sig in signature_mask(4), seed in any::<u64>()) {
        let s = build_theorem1(&sig, &ConstructionParams::default());
        let n = s.dim();
        prop_assume!(n >= 2);
        // random orthonormal pair by Gram-Schmidt
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = || -> Vec<f64> { (0..n).map(|_| rng.random_range(-1.0..1.0)).collect() };
        let normalize = |v: Vec<f64>| {
            let len = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.into_iter().map(|x| x / len).collect::<Vec<f64>>()
        };
        let u = normalize(draw());
        let w = draw();
        let proj: f64 = u.iter().zip(&w).map(|(a, b)| a * b).sum();
        let v = normalize(w.iter().zip(&u).map(|(b, a)| b - proj * a).collect());
        let base: Vec<f64> = draw().into_iter().map(|x| 0.2 * x).collect();
        let spec = SliceSpec { base_point: base, u, v, resolution: 64, extent: 10.0 };
        prop_assume!(spec.validate(n).is_ok());
        assert_slice_ok(&s, &spec);
    }
}

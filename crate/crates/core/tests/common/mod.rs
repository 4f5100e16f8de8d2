//! Independent reference implementations and random generators for tests.
#![allow(dead_code)]

use std::collections::HashMap;

use facetforge::linalg::{int, null_space_basis, rat, RMatrix, RVector, Rational};
use facetforge::quadratic::{ConvexQuadratic, QuadraticKind};
use facetforge::signature::Signature;
use num::{Signed, Zero};
use rand::Rng;

pub fn mask_of(sig: &Signature) -> u64 {
    sig.iter().fold(0, |m, d| m | 1 << d)
}

pub fn sig_of(mask: u64) -> Signature {
    Signature::new((0..64).filter(|d| mask >> d & 1 == 1)).unwrap()
}

/// Sumset by the definition.
pub fn sumset(a: u64, b: u64) -> u64 {
    let mut out = 0;
    for i in 0..64 {
        for j in 0..64 - i {
            if a >> i & 1 == 1 && b >> j & 1 == 1 {
                out |= 1 << (i + j);
            }
        }
    }
    out
}

/// Minimum total `Σ(|L|−1)` over all ways to write `target` (containing 0)
/// as a sumset of sets containing 0, by exhaustive recursion over splits.
pub fn brute_min_cost(target: u64) -> usize {
    fn go(t: u64, memo: &mut HashMap<u64, usize>) -> usize {
        if let Some(&c) = memo.get(&t) {
            return c;
        }
        let mut best = t.count_ones() as usize - 1;
        // every factor containing 0 is a subset of the target
        let rest = t & !1;
        let mut sub = rest;
        loop {
            let l = sub | 1;
            if l != t && l != 1 {
                let mut sub2 = rest;
                loop {
                    let r = sub2 | 1;
                    if r != t && r != 1 && sumset(l, r) == t {
                        let c = l.count_ones() as usize - 1 + go(r, memo);
                        best = best.min(c);
                    }
                    if sub2 == 0 {
                        break;
                    }
                    sub2 = (sub2 - 1) & rest;
                }
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & rest;
        }
        memo.insert(t, best);
        best
    }
    go(target, &mut HashMap::new())
}

/// Smallest k admitting `d_1 ≥ … ≥ d_k` in `[0, n−1]` such that every element
/// of `I` other than `n` lies in some interval
/// `[max(0, Σ_{j∈J} d_j − (|J|−1)n), min_{j∈J} d_j]`, `J` ranging over all
/// nonempty index subsets.
pub fn brute_lower_bound(sig: &Signature) -> usize {
    let n = sig.max() as i64;
    let need: Vec<i64> = sig.iter().map(|d| d as i64).filter(|&d| d != n).collect();
    let covered = |ds: &[i64]| {
        let mut cov = vec![false; need.len()];
        for j in 1u32..1 << ds.len() {
            let chosen: Vec<i64> = (0..ds.len())
                .filter(|&i| j >> i & 1 == 1)
                .map(|i| ds[i])
                .collect();
            let lo = (chosen.iter().sum::<i64>() - (chosen.len() as i64 - 1) * n).max(0);
            let hi = *chosen.iter().min().unwrap();
            for (c, &e) in cov.iter_mut().zip(&need) {
                *c |= lo <= e && e <= hi;
            }
        }
        cov.iter().all(|&c| c)
    };
    fn sequences(
        len: usize,
        max: i64,
        prefix: &mut Vec<i64>,
        f: &mut dyn FnMut(&[i64]) -> bool,
    ) -> bool {
        if prefix.len() == len {
            return f(prefix);
        }
        for d in (0..=max).rev() {
            prefix.push(d);
            let hit = sequences(len, d, prefix, f);
            prefix.pop();
            if hit {
                return true;
            }
        }
        false
    }
    for k in 0.. {
        if n == 0 {
            return 0;
        }
        if sequences(k, n - 1, &mut Vec::new(), &mut |ds| covered(ds)) {
            return k;
        }
    }
    unreachable!()
}

/// Determinant by cofactor-free Gaussian elimination over rationals.
pub fn det(rows: &[Vec<Rational>]) -> Rational {
    let mut a = rows.to_vec();
    let n = a.len();
    let mut d = int(1);
    for col in 0..n {
        let Some(p) = (col..n).find(|&r| !a[r][col].is_zero()) else {
            return int(0);
        };
        if p != col {
            a.swap(p, col);
            d = -d;
        }
        d *= a[col][col].clone();
        let pivot_row = a[col].clone();
        for row in a.iter_mut().skip(col + 1) {
            let f = row[col].clone() / &pivot_row[col];
            for (x, p) in row.iter_mut().zip(&pivot_row).skip(col) {
                *x -= p * &f;
            }
        }
    }
    d
}

/// PSD by nonnegativity of every principal minor.
pub fn psd_by_minors(m: &RMatrix) -> bool {
    let n = m.rows();
    (1u32..1 << n).all(|s| {
        let idx: Vec<usize> = (0..n).filter(|&i| s >> i & 1 == 1).collect();
        let sub: Vec<Vec<Rational>> = idx
            .iter()
            .map(|&i| idx.iter().map(|&j| m.get(i, j).clone()).collect())
            .collect();
        !det(&sub).is_negative()
    })
}

pub fn random_small_rat<R: Rng>(rng: &mut R, span: i64) -> Rational {
    rat(rng.random_range(-span..=span), rng.random_range(1..=3))
}

/// `BᵀB` for a random integer `r × n` matrix `B`.
pub fn random_gram<R: Rng>(rng: &mut R, n: usize, r: usize) -> RMatrix {
    let b: Vec<Vec<i64>> = (0..r)
        .map(|_| (0..n).map(|_| rng.random_range(-2..=2)).collect())
        .collect();
    let mut m = RMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let v: i64 = b.iter().map(|row| row[i] * row[j]).sum();
            m.set(i, j, int(v));
        }
    }
    m
}

/// `(x − x0)ᵀA(x − x0) + 2zᵀx + t` with `z ∈ null(A)`, aimed at `kind`.
///
/// The kind is a target only; a random Gram matrix may come out singular
/// when full rank was intended, so callers classify the result themselves.
pub fn random_quadratic<R: Rng>(rng: &mut R, n: usize, kind: QuadraticKind) -> ConvexQuadratic {
    use QuadraticKind::*;
    let rank = match kind {
        Singleton => n,
        Empty | CylinderBall => rng.random_range(1..=n),
        AffineSubspace | ParaboloidCylinder if n > 1 => rng.random_range(1..n),
        _ => 0,
    };
    let a_mat = random_gram(rng, n, rank);
    let x0: RVector = (0..n).map(|_| random_small_rat(rng, 3)).collect();
    let null = null_space_basis(&a_mat);
    let z: RVector = if matches!(kind, HalfSpace | ParaboloidCylinder) && null.dim() > 0 {
        let mut z = vec![int(0); n];
        while z.iter().all(|v| v.is_zero()) {
            for b in null.basis() {
                let c = int(rng.random_range(-2..=2));
                for (zi, bi) in z.iter_mut().zip(b) {
                    *zi += c.clone() * bi;
                }
            }
        }
        z
    } else {
        vec![int(0); n]
    };
    let t = match kind {
        Empty => rat(rng.random_range(1..=5), rng.random_range(1..=4)),
        Singleton | AffineSubspace => int(0),
        FullSpace => rat(-rng.random_range(0..=5), 1),
        _ => rat(-rng.random_range(1..=5), rng.random_range(1..=4)),
    };
    let ax0 = a_mat.mul_vec(&x0).unwrap();
    let linear: RVector = ax0.iter().zip(&z).map(|(p, q)| q - p).collect();
    let constant = a_mat.quadratic_form(&x0).unwrap() + t;
    ConvexQuadratic::new(a_mat, linear, constant).unwrap()
}

/// Rotation by (3/5, 4/5) in the `(i, j)` plane.
pub fn givens(n: usize, i: usize, j: usize) -> RMatrix {
    let mut q = RMatrix::identity(n);
    q.set(i, i, rat(3, 5));
    q.set(j, j, rat(3, 5));
    q.set(i, j, rat(-4, 5));
    q.set(j, i, rat(4, 5));
    q
}

pub fn permutation(perm: &[usize]) -> RMatrix {
    let n = perm.len();
    let mut q = RMatrix::zeros(n, n);
    for (i, &p) in perm.iter().enumerate() {
        q.set(i, p, int(1));
    }
    q
}

/// `x ↦ f(Qx + s)` for orthogonal `Q`.
pub fn transform(f: &ConvexQuadratic, q: &RMatrix, s: &[Rational]) -> ConvexQuadratic {
    let qt = q.transpose();
    let a = qt.mul(f.matrix()).unwrap().mul(q).unwrap();
    let as_ = f.matrix().mul_vec(s).unwrap();
    let g: RVector = as_.iter().zip(f.linear()).map(|(x, y)| x + y).collect();
    let linear = qt.mul_vec(&g).unwrap();
    let constant = f.evaluate(s).unwrap();
    ConvexQuadratic::new(a, linear, constant).unwrap()
}

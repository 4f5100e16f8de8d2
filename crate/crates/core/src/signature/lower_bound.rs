//! Interval-covering lower bound on the number of convex quadratic
//! inequalities needed to realise a signature.
//!
//! A nonincreasing sequence `d_1 ≥ … ≥ d_k` with entries in `[0, n-1]`
//! (`n = max I`) covers `I` when every element other than `n` lies in one of
//! the intervals `[max(0, S_m − (m−1)n), d_m]`, `S_m` the m-th prefix sum.
//!
//! The search runs over states `(d_m, L_m)` where `L_m` is the clamped lower
//! end of the m-th interval. Since both ends of the intervals only move down,
//! every element `≥ L_m` must already be covered after step m; a step to
//! `d_{m+1}` is legal iff no element of `I` falls strictly between
//! `d_{m+1}` and `L_m`. For a fixed `d`, a smaller `L` dominates. Layers are
//! expanded in order of m, so the first layer that reaches
//! `L ≤ min(I \ {n})` gives the minimum k.

use serde::{Deserialize, Serialize};

use super::Signature;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LowerBoundCertificate {
    pub n: usize,
    pub ds: Vec<usize>,
    pub k: usize,
}

impl LowerBoundCertificate {
    /// Covered intervals `[lo, hi]`, one per entry of `ds`.
    pub fn intervals(&self) -> Vec<(usize, usize)> {
        let n = self.n as i64;
        let mut prefix = 0i64;
        self.ds
            .iter()
            .enumerate()
            .map(|(m, &d)| {
                prefix += d as i64;
                let lo = (prefix - m as i64 * n).max(0) as usize;
                (lo, d)
            })
            .collect()
    }
}

pub fn lower_bound(sig: &Signature) -> LowerBoundCertificate {
    let n = sig.max();
    let rest: Vec<usize> = sig.iter().filter(|&d| d != n).collect();
    let Some(&lowest) = rest.first() else {
        return LowerBoundCertificate {
            n,
            ds: Vec::new(),
            k: 0,
        };
    };
    let highest = *rest.last().expect("nonempty");

    // count_below[x] = |{e ∈ rest : e < x}|
    let mut count_below = vec![0usize; n + 2];
    for x in 0..=n {
        count_below[x + 1] = count_below[x] + usize::from(sig.contains(x) && x != n);
    }
    // Any element e of `rest` with lo < e < hi?
    let gap_occupied = |lo: usize, hi: usize| hi > lo + 1 && count_below[hi] > count_below[lo + 1];

    let mut best_seen: Vec<Option<usize>> = vec![None; n];
    let mut parents: Vec<Vec<Option<usize>>> = Vec::new();
    let mut frontier: Vec<Option<usize>> = vec![None; n];
    for d in highest..n {
        frontier[d] = Some(d);
        best_seen[d] = Some(d);
    }
    parents.push(vec![None; n]);

    loop {
        if let Some(end) = (0..n)
            .rev()
            .find(|&d| frontier[d].is_some_and(|l| l <= lowest))
        {
            let mut ds = vec![end];
            let mut cur = end;
            for layer in parents.iter().skip(1).rev() {
                cur = layer[cur].expect("parent recorded for reachable state");
                ds.push(cur);
            }
            ds.reverse();
            let k = ds.len();
            return LowerBoundCertificate { n, ds, k };
        }

        let mut next: Vec<Option<usize>> = vec![None; n];
        let mut parent: Vec<Option<usize>> = vec![None; n];
        for d in (0..n).rev() {
            let Some(l) = frontier[d] else { continue };
            for d_next in (0..=d).rev() {
                if gap_occupied(d_next, l) {
                    break;
                }
                let l_next = (l + d_next).saturating_sub(n);
                if best_seen[d_next].is_some_and(|b| b <= l_next) {
                    continue;
                }
                best_seen[d_next] = Some(l_next);
                next[d_next] = Some(l_next);
                parent[d_next] = Some(d);
            }
        }
        assert!(
            next.iter().any(Option::is_some),
            "coverage search exhausted; |I|-1 entries always suffice"
        );
        frontier = next;
        parents.push(parent);
    }
}

/// Exact evaluation of the coverage condition.
pub fn check_certificate(sig: &Signature, cert: &LowerBoundCertificate) -> bool {
    let n = sig.max();
    if cert.n != n || cert.k != cert.ds.len() {
        return false;
    }
    if cert.ds.windows(2).any(|w| w[0] < w[1]) || cert.ds.iter().any(|&d| d >= n) {
        return false;
    }
    let intervals = cert.intervals();
    sig.iter()
        .filter(|&i| i != n)
        .all(|i| intervals.iter().any(|&(lo, hi)| lo <= i && i <= hi))
}

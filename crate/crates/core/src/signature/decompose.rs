//! Minimum-cost sumset factorizations `I = I_1 + … + I_k`.
//!
//! A leaf `I_j` is realised with `|I_j| − 1` inequalities, so the cost of a
//! factorization is `Σ (|I_j| − 1)`. All summands contain 0 (minima add), which
//! lets every set be handled as a `u64` bitmask.

use serde::{Deserialize, Serialize};

use super::{minkowski_sum, Signature, SignatureError};

pub const DEFAULT_DECOMPOSITION_CAP: usize = 24;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecompositionTree {
    Leaf(Signature),
    Sum(Vec<DecompositionTree>),
}

impl DecompositionTree {
    pub fn leaves(&self) -> Vec<&Signature> {
        match self {
            DecompositionTree::Leaf(s) => vec![s],
            DecompositionTree::Sum(children) => children.iter().flat_map(|c| c.leaves()).collect(),
        }
    }

    /// Number of inequalities used when every leaf is built directly.
    pub fn cost(&self) -> usize {
        self.leaves().iter().map(|s| s.len() - 1).sum()
    }

    /// Minkowski sum of all leaves.
    pub fn recompose(&self) -> Signature {
        self.leaves()
            .into_iter()
            .fold(Signature::singleton(0), |acc, s| minkowski_sum(&acc, s))
    }
}

fn bits(mask: u64) -> impl Iterator<Item = u32> {
    let mut rest = mask;
    std::iter::from_fn(move || {
        (rest != 0).then(|| {
            let b = rest.trailing_zeros();
            rest &= rest - 1;
            b
        })
    })
}

fn sumset(a: u64, b: u64) -> u64 {
    bits(a).fold(0, |acc, e| acc | (b << e))
}

/// Remaining budget at one level of the search.
#[derive(Clone, Copy)]
struct Frame {
    partial: u64,
    /// Sum of the maxima still to be placed.
    rest_max: u32,
    rest_cost: u32,
    rest_leaves: u32,
}

/// Depth-first search over nondecreasing (lexicographic) leaf sequences with
/// a fixed total cost and leaf count. The first hit is the lexicographically
/// smallest one.
struct Search {
    target: u64,
    size: u32,
    leaves: Vec<u64>,
}

impl Search {
    fn search(&mut self, f: Frame, floor: &[u32]) -> bool {
        if f.rest_leaves == 0 {
            return f.partial == self.target && f.rest_max == 0 && f.rest_cost == 0;
        }
        if f.rest_leaves > f.rest_cost || f.rest_leaves > f.rest_max {
            return false;
        }
        // |P + L| ≤ |P| · 2^(|L|−1)
        if u64::from(self.size) > u64::from(f.partial.count_ones()) << f.rest_cost.min(63) {
            return false;
        }
        let window = if f.rest_max >= 63 {
            u64::MAX
        } else {
            (1u64 << (f.rest_max + 1)) - 1
        };
        let admissible = bits(f.partial).fold(window, |acc, e| acc & (self.target >> e));
        if admissible >> f.rest_max & 1 == 0 || sumset(f.partial, admissible) != self.target {
            return false;
        }
        let mut prefix = vec![0];
        self.extend(f, admissible, floor, &mut prefix, 1, !floor.is_empty())
    }

    /// Tries `prefix` as the next leaf, then its extensions in lexicographic order.
    /// `tight` means `prefix` still agrees with the start of `floor`.
    fn extend(
        &mut self,
        f: Frame,
        admissible: u64,
        floor: &[u32],
        prefix: &mut Vec<u32>,
        mask: u64,
        tight: bool,
    ) -> bool {
        let max_top = f.rest_max - (f.rest_leaves - 1);
        let max_cost = f.rest_cost - (f.rest_leaves - 1);
        let cost = prefix.len() as u32 - 1;
        let last = *prefix.last().expect("prefix starts at 0");
        let usable = cost >= 1
            && (!tight || floor.len() == prefix.len())
            && (f.rest_leaves > 1 || (last == f.rest_max && cost == f.rest_cost));
        if usable {
            self.leaves.push(mask);
            let next = Frame {
                partial: sumset(f.partial, mask),
                rest_max: f.rest_max - last,
                rest_cost: f.rest_cost - cost,
                rest_leaves: f.rest_leaves - 1,
            };
            if self.search(next, prefix) {
                return true;
            }
            self.leaves.pop();
        }
        if cost == max_cost {
            return false;
        }
        let pos = prefix.len();
        for x in bits(admissible).filter(|&x| x > last && x <= max_top) {
            let next_tight = if tight && pos < floor.len() {
                if x < floor[pos] {
                    continue;
                }
                x == floor[pos]
            } else {
                false
            };
            prefix.push(x);
            if self.extend(f, admissible, floor, prefix, mask | 1u64 << x, next_tight) {
                return true;
            }
            prefix.pop();
        }
        false
    }
}

/// Cheapest factorization into leaves; `cap` overrides the default guard on `max I`.
///
/// Costs are tried in increasing order, and for each cost the leaf count
/// grows from 2, so ties go to fewer leaves and then to the lexicographically
/// smallest sorted list of leaves. A single leaf `I` costs `|I| − 1`.
pub fn decompose_min_cost(
    sig: &Signature,
    cap: Option<usize>,
) -> Result<DecompositionTree, SignatureError> {
    if sig.min() != 0 {
        return Err(SignatureError::NotNormalized(sig.min()));
    }
    let cap = cap.unwrap_or(DEFAULT_DECOMPOSITION_CAP).min(63);
    if sig.max() > cap {
        return Err(SignatureError::CapExceeded {
            max: sig.max(),
            cap,
        });
    }
    let target = sig.mask();
    let size = sig.len() as u32;
    let n = sig.max() as u32;
    // cost ≥ ⌈log₂ |I|⌉ since each unit of cost at most doubles the sumset
    let floor_cost = u32::BITS - (size - 1).leading_zeros();
    for cost in floor_cost.max(2)..size.saturating_sub(1) {
        for count in 2..=cost {
            let mut search = Search {
                target,
                size,
                leaves: Vec::new(),
            };
            let start = Frame {
                partial: 1,
                rest_max: n,
                rest_cost: cost,
                rest_leaves: count,
            };
            if search.search(start, &[]) {
                return Ok(DecompositionTree::Sum(
                    search
                        .leaves
                        .into_iter()
                        .map(|m| DecompositionTree::Leaf(Signature::from_mask(m)))
                        .collect(),
                ));
            }
        }
    }
    Ok(DecompositionTree::Leaf(sig.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig(s: &str) -> Signature {
        s.parse().unwrap()
    }

    fn leaf(s: &str) -> DecompositionTree {
        DecompositionTree::Leaf(sig(s))
    }

    #[test]
    fn complete_four() {
        let t = decompose_min_cost(&sig("0,1,2,3"), None).unwrap();
        assert_eq!(t, DecompositionTree::Sum(vec![leaf("0,1"), leaf("0,2")]));
        assert_eq!(t.cost(), 2);
    }

    #[test]
    fn dyadic_complete() {
        for k in 1..=4usize {
            let n = (1 << k) - 1;
            let t = decompose_min_cost(&Signature::interval(0, n), None).unwrap();
            assert_eq!(t.cost(), k);
            let expected: Vec<Signature> = (0..k)
                .map(|j| Signature::new([0, 1 << j]).unwrap())
                .collect();
            let got: Vec<Signature> = t.leaves().into_iter().cloned().collect();
            assert_eq!(got, expected);
        }
    }

    #[test]
    fn indecomposable() {
        let t = decompose_min_cost(&sig("0,2,3"), None).unwrap();
        assert_eq!(t, leaf("0,2,3"));
        assert_eq!(t.cost(), 2);
    }

    #[test]
    fn degenerate_point() {
        let t = decompose_min_cost(&sig("0"), None).unwrap();
        assert_eq!(t, leaf("0"));
        assert_eq!(t.cost(), 0);
    }

    #[test]
    fn guards() {
        assert_eq!(
            decompose_min_cost(&sig("1,2"), None),
            Err(SignatureError::NotNormalized(1))
        );
        assert_eq!(
            decompose_min_cost(&sig("0,25"), None),
            Err(SignatureError::CapExceeded { max: 25, cap: 24 })
        );
        assert!(decompose_min_cost(&sig("0,25"), Some(30)).is_ok());
    }

    #[test]
    fn tree_json_shape() {
        let t = DecompositionTree::Sum(vec![leaf("0,1"), leaf("0,2")]);
        assert_eq!(
            serde_json::to_string(&t).unwrap(),
            r#"{"sum":[{"leaf":[0,1]},{"leaf":[0,2]}]}"#
        );
    }
}

//! Facial dimension signatures and integer sumset arithmetic.

mod decompose;
mod lower_bound;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub use decompose::{decompose_min_cost, DecompositionTree, DEFAULT_DECOMPOSITION_CAP};
pub use lower_bound::{check_certificate, lower_bound, LowerBoundCertificate};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum SignatureError {
    #[error("a signature must contain at least one dimension")]
    Empty,
    #[error("invalid signature literal {0:?}")]
    Parse(String),
    #[error("decomposition expects min I = 0, got {0}")]
    NotNormalized(usize),
    #[error("max I = {max} exceeds the decomposition cap {cap}")]
    CapExceeded { max: usize, cap: usize },
}

/// A nonempty finite set of nonnegative integers, kept sorted and deduplicated.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Signature(Vec<usize>);

impl Signature {
    pub fn new<I: IntoIterator<Item = usize>>(dims: I) -> Result<Self, SignatureError> {
        let set: BTreeSet<usize> = dims.into_iter().collect();
        if set.is_empty() {
            return Err(SignatureError::Empty);
        }
        Ok(Signature(set.into_iter().collect()))
    }

    /// `[lo, hi] ∩ Z`.
    pub fn interval(lo: usize, hi: usize) -> Self {
        assert!(lo <= hi, "empty interval");
        Signature((lo..=hi).collect())
    }

    pub fn singleton(d: usize) -> Self {
        Signature(vec![d])
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn min(&self) -> usize {
        self.0[0]
    }

    pub fn max(&self) -> usize {
        *self.0.last().expect("nonempty")
    }

    pub fn contains(&self, d: usize) -> bool {
        self.0.binary_search(&d).is_ok()
    }

    /// Bitmask form; only valid while `max() < 64`.
    pub(crate) fn mask(&self) -> u64 {
        debug_assert!(self.max() < 64);
        self.0.iter().fold(0u64, |m, &d| m | (1u64 << d))
    }

    pub(crate) fn from_mask(mask: u64) -> Self {
        Signature((0..64).filter(|&d| mask >> d & 1 == 1).collect())
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(usize::to_string).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

/// Parses a comma-separated list such as `0,2,3`.
impl FromStr for Signature {
    type Err = SignatureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let dims = s
            .split(',')
            .map(|t| t.trim().parse::<usize>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| SignatureError::Parse(s.to_string()))?;
        Signature::new(dims)
    }
}

impl Serialize for Signature {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.0.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Signature {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let dims = Vec::<usize>::deserialize(deserializer)?;
        Signature::new(dims).map_err(serde::de::Error::custom)
    }
}

/// `{a + b : a ∈ A, b ∈ B}`.
pub fn minkowski_sum(a: &Signature, b: &Signature) -> Signature {
    let set: BTreeSet<usize> = a
        .iter()
        .flat_map(|x| b.iter().map(move |y| x + y))
        .collect();
    Signature(set.into_iter().collect())
}

/// `I + {k}`.
pub fn shift(sig: &Signature, k: usize) -> Signature {
    Signature(sig.iter().map(|d| d + k).collect())
}

/// True iff the signature is a contiguous run of integers.
pub fn is_complete(sig: &Signature) -> bool {
    sig.max() - sig.min() + 1 == sig.len()
}

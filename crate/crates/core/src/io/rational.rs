//! Rationals as JSON strings (`"p/q"`); integer JSON numbers are accepted on input.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::linalg::{format_rational, parse_rational, RVector, Rational};

/// Serde wrapper for one exact rational.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalText(pub Rational);

#[derive(Deserialize)]
#[serde(untagged)]
enum Literal {
    Text(String),
    Int(i64),
}

impl Serialize for RationalText {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&format_rational(&self.0))
    }
}

impl<'de> Deserialize<'de> for RationalText {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        match Literal::deserialize(deserializer)? {
            Literal::Text(s) => parse_rational(&s)
                .map(RationalText)
                .map_err(serde::de::Error::custom),
            Literal::Int(n) => Ok(RationalText(Rational::from_integer(n.into()))),
        }
    }
}

pub fn wrap_vec(v: &[Rational]) -> Vec<RationalText> {
    v.iter().cloned().map(RationalText).collect()
}

pub fn unwrap_vec(v: Vec<RationalText>) -> RVector {
    v.into_iter().map(|q| q.0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::rat;

    #[test]
    fn round_trip() {
        let v = wrap_vec(&[rat(7, 10), rat(-3, 1)]);
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(s, r#"["7/10","-3"]"#);
        let back: Vec<RationalText> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, v);
        let mixed: Vec<RationalText> = serde_json::from_str(r#"[2, "0.5", "-1/4"]"#).unwrap();
        assert_eq!(unwrap_vec(mixed), vec![rat(2, 1), rat(1, 2), rat(-1, 4)]);
        assert!(serde_json::from_str::<RationalText>(r#""x/2""#).is_err());
    }
}

//! Finite strings over a domain, with concatenation and powers.
//!
//! Strings form a monoid under concatenation with the empty string ε as
//! identity. Tuples of any arity are handled uniformly as strings.

use std::cmp::Ordering;
use std::fmt;

use serde::ser::{Serialize, SerializeSeq, Serializer};

use crate::value::{CoValue, Value};

/// A finite string of domain atoms; possibly empty.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Str(Vec<Value>);

impl Str {
    pub fn empty() -> Str {
        Str(Vec::new())
    }

    pub fn one(v: Value) -> Str {
        Str(vec![v])
    }

    pub fn nums(xs: &[f64]) -> Str {
        Str(xs.iter().map(|x| Value::num(*x)).collect())
    }

    pub fn syms(names: &[&str]) -> Str {
        Str(names.iter().map(|n| Value::sym(n)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn atoms(&self) -> &[Value] {
        &self.0
    }

    pub fn concat(&self, other: &Str) -> Str {
        let mut out = Vec::with_capacity(self.len() + other.len());
        out.extend_from_slice(&self.0);
        out.extend_from_slice(&other.0);
        Str(out)
    }

    pub fn cat3(a: &Str, b: &Str, c: &Str) -> Str {
        let mut out = Vec::with_capacity(a.len() + b.len() + c.len());
        out.extend_from_slice(&a.0);
        out.extend_from_slice(&b.0);
        out.extend_from_slice(&c.0);
        Str(out)
    }

    /// `n` concatenated copies of the string; `power(x, 0) = ε` and
    /// `power(ε, n) = ε`.
    pub fn power(&self, n: usize) -> Str {
        let mut out = Vec::with_capacity(self.len() * n);
        for _ in 0..n {
            out.extend_from_slice(&self.0);
        }
        Str(out)
    }

    pub fn sub(&self, start: usize, end: usize) -> Str {
        Str(self.0[start..end].to_vec())
    }

    pub fn push(&mut self, v: Value) {
        self.0.push(v);
    }
}

/// Free-function form of [`Str::power`].
pub fn power(x: &Str, n: usize) -> Str {
    x.power(n)
}

/// The string made of `n` copies of a single output value; ε yields ε, so a
/// substring whose value is ε simply vanishes when substituted back.
pub fn repeat_co(v: &CoValue, n: usize) -> Str {
    match v {
        CoValue::Epsilon => Str::empty(),
        CoValue::Val(v) => Str(vec![v.clone(); n]),
    }
}

impl From<Vec<Value>> for Str {
    fn from(v: Vec<Value>) -> Str {
        Str(v)
    }
}

impl PartialOrd for Str {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Canonical string order: by length first, then lexicographically.
impl Ord for Str {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len().cmp(&other.len()).then_with(|| self.0.cmp(&other.0))
    }
}

impl fmt::Display for Str {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return write!(f, "ε");
        }
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

impl Serialize for Str {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.len()))?;
        for v in &self.0 {
            seq.serialize_element(v)?;
        }
        seq.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn power_basics() {
        let x = Str::syms(&["a", "b"]);
        assert_eq!(x.power(2), Str::syms(&["a", "b", "a", "b"]));
        assert_eq!(Str::syms(&["a"]).power(0), Str::empty());
        assert_eq!(Str::empty().power(5), Str::empty());
        assert_eq!(x.power(3).len(), 3 * x.len());
    }

    #[test]
    fn epsilon_substitution_vanishes() {
        assert_eq!(repeat_co(&CoValue::Epsilon, 4), Str::empty());
        assert_eq!(repeat_co(&CoValue::num(2.0), 3), Str::nums(&[2.0, 2.0, 2.0]));
    }

    #[test]
    fn order_is_length_first() {
        let a = Str::syms(&["b"]);
        let b = Str::syms(&["a", "a"]);
        assert!(a < b);
    }

    fn arb_str() -> impl Strategy<Value = Str> {
        prop::collection::vec(0u8..3, 0..6)
            .prop_map(|v| Str::from(v.into_iter().map(|i| Value::sym(&i.to_string())).collect::<Vec<_>>()))
    }

    proptest! {
        #[test]
        fn concat_is_associative(a in arb_str(), b in arb_str(), c in arb_str()) {
            prop_assert_eq!(a.concat(&b).concat(&c), a.concat(&b.concat(&c)));
        }

        #[test]
        fn empty_is_identity(a in arb_str()) {
            prop_assert_eq!(a.concat(&Str::empty()), a.clone());
            prop_assert_eq!(Str::empty().concat(&a), a);
        }

        #[test]
        fn power_length(a in arb_str(), n in 0usize..5) {
            prop_assert_eq!(a.power(n).len(), n * a.len());
        }
    }
}

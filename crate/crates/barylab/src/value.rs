//! Domain atoms and ε-augmented codomain values.
//!
//! A [`Value`] is a single letter of a string: a symbolic atom from a finite
//! domain, a real number, or a point of a finite-dimensional real vector
//! space. A [`CoValue`] is a function output: either a value or the dedicated
//! ε marker. ε is never encoded as a sentinel number; it is its own variant
//! so that ε-valued outputs can be reasoned about directly.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use serde::ser::{Serialize, SerializeSeq, Serializer};

/// Relative/absolute tolerance pair for numeric comparisons.
///
/// Two numbers are considered equal when `|a - b| <= max(abs, rel * max(|a|, |b|))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tol {
    pub rel: f64,
    pub abs: f64,
}

impl Tol {
    /// Default comparison tolerance for numeric codomains.
    pub const DEFAULT: Tol = Tol { rel: 1e-9, abs: 1e-12 };
    /// Bit-exact comparison (used on finite domains).
    pub const EXACT: Tol = Tol { rel: 0.0, abs: 0.0 };

    pub fn num_eq(self, a: f64, b: f64) -> bool {
        a == b || (a - b).abs() <= self.abs.max(self.rel * a.abs().max(b.abs()))
    }
}

impl Default for Tol {
    fn default() -> Self {
        Tol::DEFAULT
    }
}

/// A single domain element.
#[derive(Clone, Debug)]
pub enum Value {
    /// Symbolic atom of a finite domain.
    Sym(Arc<str>),
    /// Real number.
    Num(f64),
    /// Point of ℝ^d.
    Point(Arc<[f64]>),
}

impl Value {
    pub fn sym(name: &str) -> Value {
        Value::Sym(Arc::from(name))
    }

    /// Builds a numeric value. NaN is rejected and `-0.0` is normalized to
    /// `0.0` so that equality and ordering are total.
    pub fn num(x: f64) -> Value {
        assert!(!x.is_nan(), "NaN is not a domain value");
        Value::Num(if x == 0.0 { 0.0 } else { x })
    }

    pub fn point(coords: Vec<f64>) -> Value {
        assert!(coords.iter().all(|c| !c.is_nan()), "NaN coordinate");
        Value::Point(coords.into_iter().map(|c| if c == 0.0 { 0.0 } else { c }).collect())
    }

    pub fn as_num(&self) -> Option<f64> {
        match self {
            Value::Num(x) => Some(*x),
            _ => None,
        }
    }

    pub fn as_point(&self) -> Option<&[f64]> {
        match self {
            Value::Point(p) => Some(p),
            _ => None,
        }
    }

    /// Equality up to numeric tolerance; symbols compare exactly.
    pub fn approx_eq(&self, other: &Value, tol: Tol) -> bool {
        match (self, other) {
            (Value::Sym(a), Value::Sym(b)) => a == b,
            (Value::Num(a), Value::Num(b)) => tol.num_eq(*a, *b),
            (Value::Point(a), Value::Point(b)) => {
                a.len() == b.len() && a.iter().zip(b.iter()).all(|(x, y)| tol.num_eq(*x, *y))
            }
            _ => false,
        }
    }

    fn rank(&self) -> u8 {
        match self {
            Value::Sym(_) => 0,
            Value::Num(_) => 1,
            Value::Point(_) => 2,
        }
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Value {}

impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Value {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Value::Sym(a), Value::Sym(b)) => a.cmp(b),
            (Value::Num(a), Value::Num(b)) => a.total_cmp(b),
            (Value::Point(a), Value::Point(b)) => {
                let by_len = a.len().cmp(&b.len());
                if by_len != Ordering::Equal {
                    return by_len;
                }
                for (x, y) in a.iter().zip(b.iter()) {
                    let c = x.total_cmp(y);
                    if c != Ordering::Equal {
                        return c;
                    }
                }
                Ordering::Equal
            }
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Sym(s) => write!(f, "{s}"),
            Value::Num(x) => write!(f, "{x}"),
            Value::Point(p) => {
                write!(f, "(")?;
                for (i, c) in p.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{c}")?;
                }
                write!(f, ")")
            }
        }
    }
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Value::Sym(s) => serializer.serialize_str(s),
            Value::Num(x) => serializer.serialize_f64(*x),
            Value::Point(p) => {
                let mut seq = serializer.serialize_seq(Some(p.len()))?;
                for c in p.iter() {
                    seq.serialize_element(c)?;
                }
                seq.end()
            }
        }
    }
}

/// Output of a ∗-ary function: a codomain value or ε.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum CoValue {
    Val(Value),
    Epsilon,
}

impl CoValue {
    pub fn is_epsilon(&self) -> bool {
        matches!(self, CoValue::Epsilon)
    }

    pub fn as_val(&self) -> Option<&Value> {
        match self {
            CoValue::Val(v) => Some(v),
            CoValue::Epsilon => None,
        }
    }

    pub fn num(x: f64) -> CoValue {
        CoValue::Val(Value::num(x))
    }

    pub fn sym(name: &str) -> CoValue {
        CoValue::Val(Value::sym(name))
    }

    pub fn approx_eq(&self, other: &CoValue, tol: Tol) -> bool {
        match (self, other) {
            (CoValue::Epsilon, CoValue::Epsilon) => true,
            (CoValue::Val(a), CoValue::Val(b)) => a.approx_eq(b, tol),
            _ => false,
        }
    }
}

impl fmt::Display for CoValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoValue::Epsilon => write!(f, "ε"),
            CoValue::Val(v) => write!(f, "{v}"),
        }
    }
}

impl Serialize for CoValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            CoValue::Epsilon => serializer.serialize_str("epsilon"),
            CoValue::Val(v) => v.serialize(serializer),
        }
    }
}

impl From<Value> for CoValue {
    fn from(v: Value) -> Self {
        CoValue::Val(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerance_has_absolute_floor() {
        let t = Tol::DEFAULT;
        assert!(t.num_eq(0.0, 1e-13));
        assert!(!t.num_eq(0.0, 1e-11));
        assert!(t.num_eq(1e6, 1e6 * (1.0 + 1e-10)));
        assert!(!t.num_eq(1e6, 1e6 * (1.0 + 1e-8)));
    }

    #[test]
    fn exact_tolerance_is_bitwise() {
        assert!(Tol::EXACT.num_eq(1.5, 1.5));
        assert!(!Tol::EXACT.num_eq(1.5, 1.5 + f64::EPSILON));
    }

    #[test]
    fn negative_zero_normalizes() {
        assert_eq!(Value::num(-0.0), Value::num(0.0));
    }

    #[test]
    fn epsilon_is_distinct_from_every_value() {
        for v in [CoValue::sym("epsilon"), CoValue::num(0.0), CoValue::num(f64::INFINITY)] {
            assert_ne!(v, CoValue::Epsilon);
            assert!(!v.approx_eq(&CoValue::Epsilon, Tol::DEFAULT));
        }
    }

    #[test]
    fn ordering_is_total_across_kinds() {
        let mut vs = vec![Value::num(2.0), Value::sym("b"), Value::num(-1.0), Value::sym("a")];
        vs.sort();
        assert_eq!(vs, vec![Value::sym("a"), Value::sym("b"), Value::num(-1.0), Value::num(2.0)]);
    }
}

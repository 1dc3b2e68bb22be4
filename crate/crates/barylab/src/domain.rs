//! Domain descriptions: finite atom lists, real intervals, vector spaces.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::value::Value;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DomainError {
    #[error("finite domains must be nonempty")]
    EmptyDomain,
    #[error("duplicate atom {0}")]
    DuplicateAtom(String),
    #[error("\"epsilon\" is reserved and cannot name an atom")]
    ReservedAtomName,
    #[error("interval bounds must satisfy lo < hi (got {lo} .. {hi})")]
    BadInterval { lo: f64, hi: f64 },
    #[error("vector spaces need a positive dimension")]
    BadDimension,
}

/// An ordered, duplicate-free list of atoms. The list position of an atom is
/// its canonical order, used for quasi-inverse selection and witness
/// minimality.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteDomain {
    atoms: Arc<Vec<Value>>,
}

impl FiniteDomain {
    pub fn new(atoms: Vec<Value>) -> Result<FiniteDomain, DomainError> {
        if atoms.is_empty() {
            return Err(DomainError::EmptyDomain);
        }
        for (i, a) in atoms.iter().enumerate() {
            if let Value::Sym(s) = a {
                if &**s == "epsilon" {
                    return Err(DomainError::ReservedAtomName);
                }
            }
            if atoms[..i].contains(a) {
                return Err(DomainError::DuplicateAtom(a.to_string()));
            }
        }
        Ok(FiniteDomain { atoms: Arc::new(atoms) })
    }

    /// Domain `{"0", "1", ..., "k-1"}` of symbolic atoms.
    pub fn indexed(k: usize) -> FiniteDomain {
        FiniteDomain::new((0..k).map(|i| Value::sym(&i.to_string())).collect())
            .expect("indexed domain is valid")
    }

    pub fn atoms(&self) -> &[Value] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index_of(&self, v: &Value) -> Option<usize> {
        self.atoms.iter().position(|a| a == v)
    }
}

/// A real interval with optionally open/unbounded ends.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_open: bool,
    pub hi_open: bool,
}

impl Interval {
    pub fn new(lo: f64, hi: f64, lo_open: bool, hi_open: bool) -> Result<Interval, DomainError> {
        if lo.is_nan() || hi.is_nan() || !(lo < hi) {
            return Err(DomainError::BadInterval { lo, hi });
        }
        Ok(Interval {
            lo,
            hi,
            lo_open: lo_open || lo.is_infinite(),
            hi_open: hi_open || hi.is_infinite(),
        })
    }

    /// The whole real line.
    pub fn reals() -> Interval {
        Interval::new(f64::NEG_INFINITY, f64::INFINITY, true, true).unwrap()
    }

    /// The open half-line (0, ∞).
    pub fn positive() -> Interval {
        Interval::new(0.0, f64::INFINITY, true, true).unwrap()
    }

    pub fn contains(&self, x: f64) -> bool {
        let lo_ok = if self.lo_open { x > self.lo } else { x >= self.lo };
        let hi_ok = if self.hi_open { x < self.hi } else { x <= self.hi };
        lo_ok && hi_ok && x.is_finite()
    }

    /// True when the interval is nonempty and not a singleton. Construction
    /// already enforces this; kept for explicit validation before mean-family
    /// checks.
    pub fn is_nontrivial(&self) -> bool {
        self.lo < self.hi
    }
}

/// Description of the set a function's strings are drawn from (or mapped into).
#[derive(Clone, Debug, PartialEq)]
pub enum DomainDesc {
    Finite(FiniteDomain),
    RealInterval(Interval),
    VectorSpace { dim: usize },
}

impl DomainDesc {
    pub fn finite(atoms: Vec<Value>) -> Result<DomainDesc, DomainError> {
        Ok(DomainDesc::Finite(FiniteDomain::new(atoms)?))
    }

    pub fn reals() -> DomainDesc {
        DomainDesc::RealInterval(Interval::reals())
    }

    pub fn positive_reals() -> DomainDesc {
        DomainDesc::RealInterval(Interval::positive())
    }

    pub fn vector_space(dim: usize) -> Result<DomainDesc, DomainError> {
        if dim == 0 {
            return Err(DomainError::BadDimension);
        }
        Ok(DomainDesc::VectorSpace { dim })
    }

    pub fn contains(&self, v: &Value) -> bool {
        match (self, v) {
            (DomainDesc::Finite(d), _) => d.index_of(v).is_some(),
            (DomainDesc::RealInterval(i), Value::Num(x)) => i.contains(*x),
            (DomainDesc::VectorSpace { dim }, Value::Point(p)) => {
                p.len() == *dim && p.iter().all(|c| c.is_finite())
            }
            _ => false,
        }
    }

    pub fn as_finite(&self) -> Option<&FiniteDomain> {
        match self {
            DomainDesc::Finite(d) => Some(d),
            _ => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, DomainDesc::Finite(_))
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, DomainDesc::RealInterval(_))
    }
}

impl fmt::Display for DomainDesc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DomainDesc::Finite(d) => {
                write!(f, "{{")?;
                for (i, a) in d.atoms().iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, "}}")
            }
            DomainDesc::RealInterval(i) => write!(
                f,
                "{}{},{}{}",
                if i.lo_open { "(" } else { "[" },
                i.lo,
                i.hi,
                if i.hi_open { ")" } else { "]" }
            ),
            DomainDesc::VectorSpace { dim } => write!(f, "R^{dim}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finite_rejects_duplicates_and_empty() {
        assert_eq!(FiniteDomain::new(vec![]).unwrap_err(), DomainError::EmptyDomain);
        let err = FiniteDomain::new(vec![Value::sym("a"), Value::sym("a")]).unwrap_err();
        assert_eq!(err, DomainError::DuplicateAtom("a".into()));
        assert_eq!(
            FiniteDomain::new(vec![Value::sym("epsilon")]).unwrap_err(),
            DomainError::ReservedAtomName
        );
    }

    #[test]
    fn atom_order_is_list_position() {
        let d = FiniteDomain::new(vec![Value::sym("b"), Value::sym("a")]).unwrap();
        assert_eq!(d.index_of(&Value::sym("b")), Some(0));
        assert_eq!(d.index_of(&Value::sym("a")), Some(1));
    }

    #[test]
    fn interval_endpoints() {
        let i = Interval::new(0.0, 1.0, true, false).unwrap();
        assert!(!i.contains(0.0));
        assert!(i.contains(1.0));
        assert!(Interval::positive().contains(1e-12));
        assert!(!Interval::positive().contains(0.0));
        assert!(Interval::reals().contains(-1e100));
        assert!(Interval::new(1.0, 1.0, false, false).is_err());
    }

    #[test]
    fn vector_space_membership() {
        let d = DomainDesc::vector_space(2).unwrap();
        assert!(d.contains(&Value::point(vec![0.0, 1.0])));
        assert!(!d.contains(&Value::point(vec![0.0])));
        assert!(!d.contains(&Value::num(1.0)));
    }
}

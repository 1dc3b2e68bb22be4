//! Property identifiers and check reports.

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use serde::ser::{Serialize, SerializeMap, SerializeStruct, Serializer};

use crate::string::Str;
use crate::value::CoValue;

/// One quantified formula over strings. Each id maps to exactly one formula;
/// the arity-parameterized ids quantify over a single arity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PropertyId {
    BAssociative,
    BAssocSimplified,
    BAssocFormII,
    BAssocFormIII,
    BAssocFormIV,
    BPreassociative,
    BPreassocTwoEq,
    BPreassocSimplified,
    Associative,
    Preassociative,
    Idempotent,
    ArityWiseRangeIdempotent,
    ArityWiseQuasiRangeIdempotent,
    Symmetric(usize),
    StrictlyIncreasing(usize),
    ContinuousSampled(usize),
    // Artifact-level ids used by derived checks that also emit reports.
    Constant(usize),
    InnerSymmetric(usize),
    Determination,
    EpsilonStandard,
}

impl fmt::Display for PropertyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PropertyId::BAssociative => write!(f, "b_associative"),
            PropertyId::BAssocSimplified => write!(f, "b_assoc_simplified"),
            PropertyId::BAssocFormII => write!(f, "b_assoc_form_ii"),
            PropertyId::BAssocFormIII => write!(f, "b_assoc_form_iii"),
            PropertyId::BAssocFormIV => write!(f, "b_assoc_form_iv"),
            PropertyId::BPreassociative => write!(f, "b_preassociative"),
            PropertyId::BPreassocTwoEq => write!(f, "b_preassoc_two_eq"),
            PropertyId::BPreassocSimplified => write!(f, "b_preassoc_simplified"),
            PropertyId::Associative => write!(f, "associative"),
            PropertyId::Preassociative => write!(f, "preassociative"),
            PropertyId::Idempotent => write!(f, "idempotent"),
            PropertyId::ArityWiseRangeIdempotent => write!(f, "arity_wise_range_idempotent"),
            PropertyId::ArityWiseQuasiRangeIdempotent => {
                write!(f, "arity_wise_quasi_range_idempotent")
            }
            PropertyId::Symmetric(n) => write!(f, "symmetric:{n}"),
            PropertyId::StrictlyIncreasing(n) => write!(f, "strictly_increasing:{n}"),
            PropertyId::ContinuousSampled(n) => write!(f, "continuous_sampled:{n}"),
            PropertyId::Constant(n) => write!(f, "constant:{n}"),
            PropertyId::InnerSymmetric(n) => write!(f, "inner_symmetric:{n}"),
            PropertyId::Determination => write!(f, "determination"),
            PropertyId::EpsilonStandard => write!(f, "epsilon_standard"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("unknown property id: {0}")]
pub struct UnknownProperty(pub String);

impl FromStr for PropertyId {
    type Err = UnknownProperty;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (base, arg) = match s.split_once(':') {
            Some((b, a)) => (b, Some(a)),
            None => (s, None),
        };
        let n = || -> Result<usize, UnknownProperty> {
            arg.ok_or_else(|| UnknownProperty(s.into()))?
                .parse()
                .map_err(|_| UnknownProperty(s.into()))
        };
        Ok(match base {
            "b_associative" => PropertyId::BAssociative,
            "b_assoc_simplified" => PropertyId::BAssocSimplified,
            "b_assoc_form_ii" => PropertyId::BAssocFormII,
            "b_assoc_form_iii" => PropertyId::BAssocFormIII,
            "b_assoc_form_iv" => PropertyId::BAssocFormIV,
            "b_preassociative" => PropertyId::BPreassociative,
            "b_preassoc_two_eq" => PropertyId::BPreassocTwoEq,
            "b_preassoc_simplified" => PropertyId::BPreassocSimplified,
            "associative" => PropertyId::Associative,
            "preassociative" => PropertyId::Preassociative,
            "idempotent" => PropertyId::Idempotent,
            "arity_wise_range_idempotent" => PropertyId::ArityWiseRangeIdempotent,
            "arity_wise_quasi_range_idempotent" => PropertyId::ArityWiseQuasiRangeIdempotent,
            "symmetric" => PropertyId::Symmetric(n()?),
            "strictly_increasing" => PropertyId::StrictlyIncreasing(n()?),
            "continuous_sampled" => PropertyId::ContinuousSampled(n()?),
            "epsilon_standard" => PropertyId::EpsilonStandard,
            _ => return Err(UnknownProperty(s.into())),
        })
    }
}

impl Serialize for PropertyId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Unsupported,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Unsupported => "unsupported",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_str())
    }
}

impl Serialize for Status {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

/// Why a check reported `unsupported`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum UnsupportedReason {
    BudgetExceeded,
    Incompatible(String),
    PreconditionUnmet(String),
}

impl fmt::Display for UnsupportedReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UnsupportedReason::BudgetExceeded => write!(f, "budget exceeded"),
            UnsupportedReason::Incompatible(s) => write!(f, "incompatible: {s}"),
            UnsupportedReason::PreconditionUnmet(s) => write!(f, "precondition unmet: {s}"),
        }
    }
}

/// Search mode: exhaustive results are decisive on the bounded space;
/// sampled results never claim exhaustive truth.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Exhaustive,
    Sampled,
}

impl Serialize for Mode {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(match self {
            Mode::Exhaustive => "exhaustive",
            Mode::Sampled => "sampled",
        })
    }
}

/// Description of the quantifier space a verdict covers.
#[derive(Clone, Debug, serde::Serialize)]
pub struct SpaceDesc {
    pub mode: Mode,
    pub max_len: usize,
    pub instances: u64,
    pub evals: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples_per_shape: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl SpaceDesc {
    pub fn new(mode: Mode, max_len: usize) -> SpaceDesc {
        SpaceDesc {
            mode,
            max_len,
            instances: 0,
            evals: 0,
            samples_per_shape: None,
            note: None,
        }
    }
}

/// A concrete violation: the instantiated strings and the two values that
/// should have been equal. `rhs` is absent for membership-style violations
/// (a value escaping a range).
#[derive(Clone, Debug)]
pub struct Witness {
    pub parts: Vec<(&'static str, Str)>,
    pub lhs: CoValue,
    pub rhs: Option<CoValue>,
}

impl Witness {
    pub fn part(&self, label: &str) -> Option<&Str> {
        self.parts.iter().find(|(l, _)| *l == label).map(|(_, s)| s)
    }
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (label, s) in &self.parts {
            write!(f, "{label}=[{s}] ")?;
        }
        match &self.rhs {
            Some(rhs) => write!(f, ": {} ≠ {}", self.lhs, rhs),
            None => write!(f, ": value {}", self.lhs),
        }
    }
}

impl Serialize for Witness {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.parts.len() + 2))?;
        for (label, s) in &self.parts {
            map.serialize_entry(label, s)?;
        }
        map.serialize_entry("lhs", &self.lhs)?;
        map.serialize_entry("rhs", &self.rhs)?;
        map.end()
    }
}

/// Verdict plus witness for one property over one search space.
///
/// Invariants: a `fail` always carries a witness whose re-evaluation
/// reproduces the inequality; a `pass` never carries one.
#[derive(Clone, Debug)]
pub struct PropertyReport {
    pub property: PropertyId,
    pub status: Status,
    pub space: SpaceDesc,
    pub witness: Option<Witness>,
    pub seed: u64,
    pub elapsed: Duration,
    pub reason: Option<UnsupportedReason>,
}

impl PropertyReport {
    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    pub fn budget_exceeded(&self) -> bool {
        matches!(self.reason, Some(UnsupportedReason::BudgetExceeded))
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report serializes")
    }
}

impl Serialize for PropertyReport {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        // elapsed is deliberately not serialized: identical configurations
        // must produce byte-identical reports.
        let mut st = serializer.serialize_struct("PropertyReport", 5)?;
        st.serialize_field("property", &self.property)?;
        st.serialize_field("status", &self.status)?;
        st.serialize_field("space", &self.space)?;
        st.serialize_field("witness", &self.witness)?;
        st.serialize_field("seed", &self.seed)?;
        st.end()
    }
}

impl fmt::Display for PropertyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.property, self.status)?;
        if let Some(w) = &self.witness {
            write!(f, " [{w}]")?;
        }
        if let Some(r) = &self.reason {
            write!(f, " ({r})")?;
        }
        Ok(())
    }
}

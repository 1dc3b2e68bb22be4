//! ∗-ary functions: tabulated or closed-form bodies with an ε-augmented
//! codomain, plus diagonal sections.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::domain::{DomainDesc, FiniteDomain};
use crate::string::Str;
use crate::value::{CoValue, Value};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("string length {len} exceeds maximum arity {max}")]
    ArityExceeded { len: usize, max: usize },
    #[error("value {value} is outside the function domain")]
    DomainMismatch { value: String },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TableError {
    #[error(transparent)]
    Domain(#[from] crate::domain::DomainError),
    #[error("table entry input {0} contains an atom outside the domain")]
    InputOutsideDomain(String),
    #[error("table output {0} is outside the codomain")]
    OutputOutsideCodomain(String),
    #[error("duplicate table entry for {0}")]
    DuplicateEntry(String),
    #[error("table is not total: missing entry for {0}")]
    MissingEntry(String),
    #[error("max_arity must be positive")]
    ZeroArity,
    #[error("an ε-standard function must have default ε and no ε output on nonempty strings")]
    NotEpsilonStandard,
}

type ClosedFn = Arc<dyn Fn(&[Value]) -> Result<CoValue, EvalError> + Send + Sync>;

/// Closed-form numeric description of the diagonal sections x ↦ F(xⁿ),
/// supplied by the builtin registry so numeric factorization can invert
/// diagonals without root finding.
#[derive(Clone)]
pub struct DiagForm {
    pub name: String,
    pub fwd: Arc<dyn Fn(usize, f64) -> f64 + Send + Sync>,
    pub inv: Option<Arc<dyn Fn(usize, f64) -> f64 + Send + Sync>>,
}

/// Optional per-function metadata used by numeric factorization paths.
#[derive(Clone, Default)]
pub struct FnMeta {
    pub diag: Option<DiagForm>,
}

/// Dense table body: one vector of outputs per arity, indexed by the
/// big-endian radix encoding of the input string's atom indices.
#[derive(Clone, Debug, PartialEq)]
pub struct TableBody {
    k: usize,
    per_arity: Vec<Vec<CoValue>>,
}

impl TableBody {
    pub fn max_arity(&self) -> usize {
        self.per_arity.len()
    }

    pub fn lookup(&self, indices: &[usize]) -> &CoValue {
        let n = indices.len();
        let mut idx = 0usize;
        for &i in indices {
            idx = idx * self.k + i;
        }
        &self.per_arity[n - 1][idx]
    }

    pub fn outputs(&self, arity: usize) -> &[CoValue] {
        &self.per_arity[arity - 1]
    }
}

enum Body {
    Table(TableBody),
    Closed { eval: ClosedFn },
}

struct Inner {
    name: String,
    domain: DomainDesc,
    codomain: DomainDesc,
    max_arity: Option<usize>,
    default: CoValue,
    eps_standard: bool,
    body: Body,
    meta: FnMeta,
}

/// A ∗-ary function F: X* → Y ∪ {ε}. Immutable after construction; evaluation
/// is pure, so values can be shared freely across threads.
#[derive(Clone)]
pub struct VarFn {
    inner: Arc<Inner>,
}

/// Default arity bound for tabulated functions (table sizes grow as |X|^n).
pub const DEFAULT_TABLE_ARITY: usize = 4;

impl VarFn {
    /// Builds a tabulated function from explicit entries. The table must be
    /// total on all strings of length 1..=max_arity over the domain.
    pub fn from_table(
        name: &str,
        domain: FiniteDomain,
        codomain: DomainDesc,
        max_arity: usize,
        default: CoValue,
        entries: &[(Str, CoValue)],
    ) -> Result<VarFn, TableError> {
        if max_arity == 0 {
            return Err(TableError::ZeroArity);
        }
        let k = domain.len();
        let mut per_arity: Vec<Vec<Option<CoValue>>> = (1..=max_arity)
            .map(|n| vec![None; k.pow(n as u32)])
            .collect();
        for (input, out) in entries {
            if input.is_empty() || input.len() > max_arity {
                return Err(TableError::InputOutsideDomain(input.to_string()));
            }
            let mut idx = 0usize;
            for v in input.atoms() {
                let i = domain
                    .index_of(v)
                    .ok_or_else(|| TableError::InputOutsideDomain(input.to_string()))?;
                idx = idx * k + i;
            }
            if let CoValue::Val(v) = out {
                if !codomain.contains(v) {
                    return Err(TableError::OutputOutsideCodomain(v.to_string()));
                }
            }
            let slot = &mut per_arity[input.len() - 1][idx];
            if slot.is_some() {
                return Err(TableError::DuplicateEntry(input.to_string()));
            }
            *slot = Some(out.clone());
        }
        let mut filled = Vec::with_capacity(max_arity);
        for (n, row) in per_arity.into_iter().enumerate() {
            let mut out_row = Vec::with_capacity(row.len());
            for (idx, slot) in row.into_iter().enumerate() {
                match slot {
                    Some(v) => out_row.push(v),
                    None => {
                        let s = decode_string(&domain, n + 1, idx);
                        return Err(TableError::MissingEntry(s.to_string()));
                    }
                }
            }
            filled.push(out_row);
        }
        if let CoValue::Val(v) = &default {
            if !codomain.contains(v) {
                return Err(TableError::OutputOutsideCodomain(v.to_string()));
            }
        }
        let eps_standard = default.is_epsilon()
            && filled.iter().all(|row| row.iter().all(|v| !v.is_epsilon()));
        Ok(VarFn {
            inner: Arc::new(Inner {
                name: name.to_string(),
                domain: DomainDesc::Finite(domain),
                codomain,
                max_arity: Some(max_arity),
                default,
                eps_standard,
                body: Body::Table(TableBody { k, per_arity: filled }),
                meta: FnMeta::default(),
            }),
        })
    }

    /// Builds a tabulated function directly from dense per-arity output rows
    /// (row for arity n has |X|^n entries in radix order).
    pub fn from_rows(
        name: &str,
        domain: FiniteDomain,
        codomain: DomainDesc,
        default: CoValue,
        rows: Vec<Vec<CoValue>>,
    ) -> Result<VarFn, TableError> {
        if rows.is_empty() {
            return Err(TableError::ZeroArity);
        }
        let k = domain.len();
        for (n, row) in rows.iter().enumerate() {
            if row.len() != k.pow((n + 1) as u32) {
                return Err(TableError::MissingEntry(format!("arity {}", n + 1)));
            }
            for v in row {
                if let CoValue::Val(v) = v {
                    if !codomain.contains(v) {
                        return Err(TableError::OutputOutsideCodomain(v.to_string()));
                    }
                }
            }
        }
        let eps_standard =
            default.is_epsilon() && rows.iter().all(|row| row.iter().all(|v| !v.is_epsilon()));
        Ok(VarFn {
            inner: Arc::new(Inner {
                name: name.to_string(),
                domain: DomainDesc::Finite(domain),
                codomain,
                max_arity: Some(rows.len()),
                default,
                eps_standard,
                body: Body::Table(TableBody { k, per_arity: rows }),
                meta: FnMeta::default(),
            }),
        })
    }

    /// Builds a closed-form function from an evaluator on nonempty strings.
    pub fn closed<F>(
        name: &str,
        domain: DomainDesc,
        codomain: DomainDesc,
        default: CoValue,
        max_arity: Option<usize>,
        eval: F,
    ) -> VarFn
    where
        F: Fn(&[Value]) -> Result<CoValue, EvalError> + Send + Sync + 'static,
    {
        VarFn {
            inner: Arc::new(Inner {
                name: name.to_string(),
                domain,
                codomain,
                max_arity,
                default,
                eps_standard: false,
                body: Body::Closed { eval: Arc::new(eval) },
                meta: FnMeta::default(),
            }),
        }
    }

    /// Marks the function as claiming the ε-standard condition
    /// F(x) = ε ⇔ x = ε. Requires default ε.
    pub fn claim_eps_standard(self) -> VarFn {
        assert!(
            self.inner.default.is_epsilon(),
            "an ε-standard function must have default ε"
        );
        let mut inner = self.unwrap_inner();
        inner.eps_standard = true;
        VarFn { inner: Arc::new(inner) }
    }

    pub fn with_meta(self, meta: FnMeta) -> VarFn {
        let mut inner = self.unwrap_inner();
        inner.meta = meta;
        VarFn { inner: Arc::new(inner) }
    }

    pub fn with_name(self, name: &str) -> VarFn {
        let mut inner = self.unwrap_inner();
        inner.name = name.to_string();
        VarFn { inner: Arc::new(inner) }
    }

    /// Caps the arity (tabulated bodies are truncated to the new bound).
    pub fn with_max_arity(self, max_arity: usize) -> VarFn {
        assert!(max_arity >= 1);
        let mut inner = self.unwrap_inner();
        if let Body::Table(t) = &mut inner.body {
            assert!(max_arity <= t.per_arity.len(), "cannot extend a table by capping");
            t.per_arity.truncate(max_arity);
        }
        inner.max_arity = Some(max_arity);
        VarFn { inner: Arc::new(inner) }
    }

    fn unwrap_inner(self) -> Inner {
        match Arc::try_unwrap(self.inner) {
            Ok(inner) => inner,
            Err(arc) => Inner {
                name: arc.name.clone(),
                domain: arc.domain.clone(),
                codomain: arc.codomain.clone(),
                max_arity: arc.max_arity,
                default: arc.default.clone(),
                eps_standard: arc.eps_standard,
                body: match &arc.body {
                    Body::Table(t) => Body::Table(t.clone()),
                    Body::Closed { eval } => Body::Closed { eval: eval.clone() },
                },
                meta: arc.meta.clone(),
            },
        }
    }

    pub fn name(&self) -> &str {
        &self.inner.name
    }

    pub fn domain(&self) -> &DomainDesc {
        &self.inner.domain
    }

    pub fn codomain(&self) -> &DomainDesc {
        &self.inner.codomain
    }

    pub fn max_arity(&self) -> Option<usize> {
        self.inner.max_arity
    }

    pub fn default(&self) -> &CoValue {
        &self.inner.default
    }

    pub fn claims_eps_standard(&self) -> bool {
        self.inner.eps_standard
    }

    pub fn meta(&self) -> &FnMeta {
        &self.inner.meta
    }

    pub fn table(&self) -> Option<&TableBody> {
        match &self.inner.body {
            Body::Table(t) => Some(t),
            _ => None,
        }
    }

    /// True when the codomain is the domain itself: the function is a ∗-ary
    /// operation F: X* → X ∪ {ε} and may be composed with itself.
    pub fn is_operation(&self) -> bool {
        self.inner.domain == self.inner.codomain
    }

    /// Evaluates F on a string. Returns the default value on ε.
    pub fn eval(&self, x: &Str) -> Result<CoValue, EvalError> {
        if x.is_empty() {
            return Ok(self.inner.default.clone());
        }
        if let Some(max) = self.inner.max_arity {
            if x.len() > max {
                return Err(EvalError::ArityExceeded { len: x.len(), max });
            }
        }
        for v in x.atoms() {
            if !self.inner.domain.contains(v) {
                return Err(EvalError::DomainMismatch { value: v.to_string() });
            }
        }
        match &self.inner.body {
            Body::Table(t) => {
                let domain = self.inner.domain.as_finite().expect("table implies finite");
                let indices: Vec<usize> = x
                    .atoms()
                    .iter()
                    .map(|v| domain.index_of(v).expect("membership checked"))
                    .collect();
                Ok(t.lookup(&indices).clone())
            }
            Body::Closed { eval } => eval(x.atoms()),
        }
    }

    /// Diagonal sections of the n-ary part.
    pub fn sections(&self, n: usize) -> Result<DiagonalSections, EvalError> {
        assert!(n >= 1, "sections need a positive arity");
        if let Some(max) = self.inner.max_arity {
            if n > max {
                return Err(EvalError::ArityExceeded { len: n, max });
            }
        }
        Ok(DiagonalSections { f: self.clone(), n })
    }
}

impl fmt::Debug for VarFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VarFn")
            .field("name", &self.inner.name)
            .field("domain", &self.inner.domain)
            .field("max_arity", &self.inner.max_arity)
            .finish()
    }
}

pub(crate) fn decode_string(domain: &FiniteDomain, len: usize, mut idx: usize) -> Str {
    let k = domain.len();
    let mut rev = Vec::with_capacity(len);
    for _ in 0..len {
        rev.push(domain.atoms()[idx % k].clone());
        idx /= k;
    }
    rev.reverse();
    Str::from(rev)
}

/// Which one-sided section to use: δˡ freezes the first coordinate's repeats,
/// δʳ the last's.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    L,
    R,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::L => write!(f, "l"),
            Side::R => write!(f, "r"),
        }
    }
}

impl std::str::FromStr for Side {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "l" | "L" | "left" | "ℓ" => Ok(Side::L),
            "r" | "R" | "right" => Ok(Side::R),
            other => Err(format!("unknown side marker: {other}")),
        }
    }
}

/// The diagonal section δ(x) = F(xⁿ) together with the one-sided binary
/// sections δʳ(x,y) = F(xⁿ⁻¹y) and δˡ(x,y) = F(xyⁿ⁻¹).
///
/// For n = 1 both binary sections degrade to the unary part: δʳ(x,y) = F(y)
/// and δˡ(x,y) = F(x).
pub struct DiagonalSections {
    f: VarFn,
    n: usize,
}

impl DiagonalSections {
    pub fn arity(&self) -> usize {
        self.n
    }

    pub fn delta(&self, x: &Value) -> Result<CoValue, EvalError> {
        self.f.eval(&Str::one(x.clone()).power(self.n))
    }

    pub fn delta_r(&self, x: &Value, y: &Value) -> Result<CoValue, EvalError> {
        let mut s = Str::one(x.clone()).power(self.n - 1);
        s.push(y.clone());
        self.f.eval(&s)
    }

    pub fn delta_l(&self, x: &Value, y: &Value) -> Result<CoValue, EvalError> {
        let mut s = Str::one(x.clone());
        s = s.concat(&Str::one(y.clone()).power(self.n - 1));
        self.f.eval(&s)
    }
}

/// A single n-ary part given as a dense table; used when extending a function
/// arity by arity and when factoring per-arity.
#[derive(Clone, Debug, PartialEq)]
pub struct NaryTable {
    pub domain: FiniteDomain,
    pub arity: usize,
    pub out: Vec<CoValue>,
}

impl NaryTable {
    pub fn tabulate(
        domain: &FiniteDomain,
        arity: usize,
        f: impl Fn(&[Value]) -> CoValue,
    ) -> NaryTable {
        let k = domain.len();
        let total = k.pow(arity as u32);
        let mut out = Vec::with_capacity(total);
        for idx in 0..total {
            let s = decode_string(domain, arity, idx);
            out.push(f(s.atoms()));
        }
        NaryTable { domain: domain.clone(), arity, out }
    }

    pub fn eval(&self, xs: &[Value]) -> Option<&CoValue> {
        if xs.len() != self.arity {
            return None;
        }
        let k = self.domain.len();
        let mut idx = 0usize;
        for v in xs {
            idx = idx * k + self.domain.index_of(v)?;
        }
        self.out.get(idx)
    }
}

/// One arity of a function, tabulated or closed-form: the candidate shape fed
/// to the arity-extension checker.
#[derive(Clone)]
pub enum NaryPart {
    Table(NaryTable),
    Closed {
        name: String,
        arity: usize,
        eval: Arc<dyn Fn(&[Value]) -> CoValue + Send + Sync>,
    },
}

impl fmt::Debug for NaryPart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NaryPart::Table(t) => f.debug_tuple("Table").field(t).finish(),
            NaryPart::Closed { name, arity, .. } => f
                .debug_struct("Closed")
                .field("name", name)
                .field("arity", arity)
                .finish(),
        }
    }
}

impl NaryPart {
    pub fn arity(&self) -> usize {
        match self {
            NaryPart::Table(t) => t.arity,
            NaryPart::Closed { arity, .. } => *arity,
        }
    }

    pub fn eval(&self, xs: &[Value]) -> Option<CoValue> {
        match self {
            NaryPart::Table(t) => t.eval(xs).cloned(),
            NaryPart::Closed { eval, arity, .. } => {
                if xs.len() != *arity {
                    None
                } else {
                    Some(eval(xs))
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::value::Tol;

    fn tiny_sum_table() -> VarFn {
        // sum mod nothing on {0,1}: outputs leave the domain, so codomain is
        // a wider finite set
        let dom = FiniteDomain::new(vec![Value::num(0.0), Value::num(1.0)]).unwrap();
        let cod = DomainDesc::finite(vec![Value::num(0.0), Value::num(1.0), Value::num(2.0)]).unwrap();
        let entries = vec![
            (Str::nums(&[0.0]), CoValue::num(0.0)),
            (Str::nums(&[1.0]), CoValue::num(1.0)),
            (Str::nums(&[0.0, 0.0]), CoValue::num(0.0)),
            (Str::nums(&[0.0, 1.0]), CoValue::num(1.0)),
            (Str::nums(&[1.0, 0.0]), CoValue::num(1.0)),
            (Str::nums(&[1.0, 1.0]), CoValue::num(2.0)),
        ];
        VarFn::from_table("sum01", dom, cod, 2, CoValue::Epsilon, &entries).unwrap()
    }

    #[test]
    fn table_eval_and_errors() {
        let f = tiny_sum_table();
        assert_eq!(f.eval(&Str::nums(&[1.0, 1.0])).unwrap(), CoValue::num(2.0));
        assert_eq!(f.eval(&Str::empty()).unwrap(), CoValue::Epsilon);
        assert_eq!(
            f.eval(&Str::nums(&[1.0, 1.0, 1.0])).unwrap_err(),
            EvalError::ArityExceeded { len: 3, max: 2 }
        );
        assert!(matches!(
            f.eval(&Str::nums(&[2.0])).unwrap_err(),
            EvalError::DomainMismatch { .. }
        ));
    }

    #[test]
    fn table_must_be_total() {
        let dom = FiniteDomain::new(vec![Value::sym("a")]).unwrap();
        let cod = DomainDesc::finite(vec![Value::sym("a")]).unwrap();
        let err = VarFn::from_table("partial", dom, cod, 2, CoValue::Epsilon, &[
            (Str::syms(&["a"]), CoValue::sym("a")),
        ])
        .unwrap_err();
        assert!(matches!(err, TableError::MissingEntry(_)));
    }

    #[test]
    fn sections_match_eval_on_power_strings() {
        let f = tiny_sum_table();
        let s = f.sections(2).unwrap();
        for v in [Value::num(0.0), Value::num(1.0)] {
            let direct = f.eval(&Str::one(v.clone()).power(2)).unwrap();
            assert_eq!(s.delta(&v).unwrap(), direct);
            assert_eq!(s.delta_r(&v, &v).unwrap(), direct);
            assert_eq!(s.delta_l(&v, &v).unwrap(), direct);
        }
        assert!(f.sections(3).is_err());
    }

    #[test]
    fn unary_sections_degrade_to_f1() {
        let f = tiny_sum_table();
        let s = f.sections(1).unwrap();
        let x = Value::num(0.0);
        let y = Value::num(1.0);
        assert_eq!(s.delta_r(&x, &y).unwrap(), f.eval(&Str::one(y.clone())).unwrap());
        assert_eq!(s.delta_l(&x, &y).unwrap(), f.eval(&Str::one(x.clone())).unwrap());
    }

    #[test]
    fn closed_form_eval() {
        let f = VarFn::closed(
            "sum",
            DomainDesc::reals(),
            DomainDesc::reals(),
            CoValue::Epsilon,
            None,
            |xs| {
                Ok(CoValue::num(xs.iter().map(|v| v.as_num().unwrap()).sum()))
            },
        );
        let out = f.eval(&Str::nums(&[1.0, 2.0, 3.0])).unwrap();
        assert!(out.approx_eq(&CoValue::num(6.0), Tol::EXACT));
    }
}

//! Builders and searchers: construction of B-associative operations from
//! one-sided section data, arity-by-arity extension, constant tails,
//! exhaustive enumeration on tiny domains, and open-problem probes.

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::builtins::mz_section_coeffs;
use crate::domain::{DomainDesc, FiniteDomain};
use crate::properties::check;
use crate::report::{PropertyId, PropertyReport, Status, Witness};
use crate::sample::{lattice_pool, FiniteSpace, SearchConfig};
use crate::string::{repeat_co, Str};
use crate::value::{CoValue, Tol, Value};
use crate::varfn::{NaryPart, Side, TableError, VarFn};

#[derive(Debug, Error)]
pub enum ConstructionError {
    #[error("φ₁ is not a retraction: φ₁∘φ₁ ≠ φ₁ ({witness})")]
    Phi1NotRetraction { witness: Witness },
    #[error("section compatibility fails at k = {k} ({witness})")]
    ConditionAViolated { k: usize, witness: Witness },
    #[error("{kind} fails at k = {k} ({witness})")]
    ConditionBViolated { kind: ConditionBKind, k: usize, witness: Witness },
    #[error("need section data up to arity {needed}, have {have}")]
    NotEnoughSections { needed: usize, have: usize },
    #[error("precondition failed: {what}")]
    PreconditionFailed { what: String, witness: Option<Witness> },
    #[error("budget exceeded after examining {examined} candidates")]
    BudgetExceeded { examined: u64 },
    #[error("search space too large: {0}")]
    DomainTooLarge(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Table(#[from] TableError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConditionBKind {
    RangeIdempotence,
    CrossEquation,
}

impl std::fmt::Display for ConditionBKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConditionBKind::RangeIdempotence => write!(f, "arity-wise range-idempotence"),
            ConditionBKind::CrossEquation => write!(f, "cross-section equation"),
        }
    }
}

#[derive(Clone)]
pub struct UnaryOp {
    pub name: String,
    f: Arc<dyn Fn(&Value) -> Value + Send + Sync>,
}

impl UnaryOp {
    pub fn new(name: &str, f: impl Fn(&Value) -> Value + Send + Sync + 'static) -> UnaryOp {
        UnaryOp { name: name.into(), f: Arc::new(f) }
    }

    pub fn identity() -> UnaryOp {
        UnaryOp::new("id", |v| v.clone())
    }

    pub fn apply(&self, v: &Value) -> Value {
        (self.f)(v)
    }
}

#[derive(Clone)]
pub struct BinaryOp {
    pub name: String,
    f: Arc<dyn Fn(&Value, &Value) -> Value + Send + Sync>,
}

impl BinaryOp {
    pub fn new(
        name: &str,
        f: impl Fn(&Value, &Value) -> Value + Send + Sync + 'static,
    ) -> BinaryOp {
        BinaryOp { name: name.into(), f: Arc::new(f) }
    }

    /// x,y ↦ a·x + b·y on numbers.
    pub fn affine(a: f64, b: f64) -> BinaryOp {
        BinaryOp::new(&format!("{a}*x+{b}*y"), move |x, y| {
            Value::num(a * x.as_num().expect("numeric") + b * y.as_num().expect("numeric"))
        })
    }

    pub fn apply(&self, x: &Value, y: &Value) -> Value {
        (self.f)(x, y)
    }
}

/// Section data (φ_k, u_k): φ₁ prescribes the unary part, and for k ≥ 2 the
/// pair prescribes the one-sided section δ^{u_k} at arity k.
#[derive(Clone)]
pub struct SectionSpec {
    pub domain: DomainDesc,
    pub phi1: UnaryOp,
    /// Entry i holds (φ_{i+2}, u_{i+2}).
    pub steps: Vec<(BinaryOp, Side)>,
}

impl SectionSpec {
    pub fn arity_limit(&self) -> usize {
        1 + self.steps.len()
    }

    fn side(&self, k: usize) -> Side {
        self.steps[k - 2].1
    }

    fn phi(&self, k: usize) -> &BinaryOp {
        &self.steps[k - 2].0
    }

    /// δ_{φ_k}: the diagonal of the k-th section (φ₁ itself at k = 1).
    fn phi_diag(&self, k: usize, x: &Value) -> Value {
        if k == 1 {
            self.phi1.apply(x)
        } else {
            self.phi(k).apply(x, x)
        }
    }

    /// The candidate operation determined by the sections: peel letters from
    /// the side each arity marks.
    fn eval(&self, xs: &[Value]) -> Value {
        let k = xs.len();
        if k == 1 {
            return self.phi1.apply(&xs[0]);
        }
        match self.side(k) {
            Side::R => {
                let inner = self.eval(&xs[..k - 1]);
                self.phi(k).apply(&inner, &xs[k - 1])
            }
            Side::L => {
                let inner = self.eval(&xs[1..]);
                self.phi(k).apply(&xs[0], &inner)
            }
        }
    }
}

/// Section data that reproduces the nonsymmetric linear operation with
/// parameter z: φ₁ = id and φ_{k+1}(x,y) = a_{k+1}·x + b_{k+1}·y with the
/// right-section coefficients.
pub fn mz_sections(z: f64, max_arity: usize) -> SectionSpec {
    let steps = (2..=max_arity)
        .map(|m| {
            let (a, b) = mz_section_coeffs(z, m - 1);
            (BinaryOp::affine(a, b), Side::R)
        })
        .collect();
    SectionSpec { domain: DomainDesc::reals(), phi1: UnaryOp::identity(), steps }
}

/// Extracts section data from an existing ε-standard operation, for
/// round-trip reconstruction.
pub fn sections_of(f: &VarFn, sides: &[Side], max_arity: usize) -> SectionSpec {
    let f1 = f.clone();
    let phi1 = UnaryOp::new(&format!("{}₁", f.name()), move |x| {
        match f1.eval(&Str::one(x.clone())) {
            Ok(CoValue::Val(v)) => v,
            _ => x.clone(),
        }
    });
    let steps = (2..=max_arity)
        .map(|k| {
            let side = sides.get(k - 2).copied().unwrap_or(Side::R);
            let fk = f.clone();
            let op = BinaryOp::new(&format!("δ^{side}_{{{},{k}}}", f.name()), move |x, y| {
                let sections = fk.sections(k).expect("arity within bounds");
                let v = match side {
                    Side::R => sections.delta_r(x, y),
                    Side::L => sections.delta_l(x, y),
                };
                match v {
                    Ok(CoValue::Val(v)) => v,
                    _ => x.clone(),
                }
            });
            (op, side)
        })
        .collect();
    SectionSpec { domain: f.domain().clone(), phi1, steps }
}

fn construct_points(domain: &DomainDesc) -> Vec<Value> {
    lattice_pool(domain)
}

fn construct_tol(domain: &DomainDesc) -> Tol {
    if domain.is_finite() {
        Tol::EXACT
    } else {
        Tol::DEFAULT
    }
}

fn construct_strings(domain: &DomainDesc, len: usize) -> Vec<Str> {
    match domain {
        DomainDesc::Finite(d) => FiniteSpace::new(d.clone()).strings(len).collect(),
        _ => {
            let pool = lattice_pool(domain);
            let mut out = Vec::new();
            let mut odometer = vec![0usize; len];
            loop {
                out.push(Str::from(
                    odometer.iter().map(|&i| pool[i].clone()).collect::<Vec<_>>(),
                ));
                if out.len() >= 512 {
                    return out;
                }
                let mut pos = len;
                loop {
                    if pos == 0 {
                        return out;
                    }
                    pos -= 1;
                    odometer[pos] += 1;
                    if odometer[pos] < pool.len() {
                        break;
                    }
                    odometer[pos] = 0;
                }
            }
        }
    }
}

/// Builds a B-associative ε-standard operation whose unary part is φ₁ and
/// whose one-sided section at each arity k is φ_k, verifying the
/// compatibility conditions along the way: φ₁ must be a retraction, each
/// φ_{k+1} must absorb δ_{φ_k} on the marked side, and the built operation
/// must be arity-wise range-idempotent and satisfy the opposite-side
/// equation.
pub fn from_sections(
    spec: &SectionSpec,
    max_arity: usize,
    cfg: &SearchConfig,
) -> Result<VarFn, ConstructionError> {
    if max_arity > spec.arity_limit() {
        return Err(ConstructionError::NotEnoughSections {
            needed: max_arity,
            have: spec.arity_limit(),
        });
    }
    let tol = construct_tol(&spec.domain);
    let points = construct_points(&spec.domain);
    // φ₁ ∘ φ₁ = φ₁
    for p in &points {
        let once = spec.phi1.apply(p);
        let twice = spec.phi1.apply(&once);
        if !twice.approx_eq(&once, tol) {
            return Err(ConstructionError::Phi1NotRetraction {
                witness: Witness {
                    parts: vec![("y", Str::one(p.clone()))],
                    lhs: CoValue::Val(twice),
                    rhs: Some(CoValue::Val(once)),
                },
            });
        }
    }
    // condition (a): φ_{k+1} absorbs the diagonal of φ_k on the marked side
    for k in 1..max_arity {
        let phi_next = spec.phi(k + 1);
        for x in &points {
            for y in &points {
                let lhs = phi_next.apply(x, y);
                let rhs = match spec.side(k + 1) {
                    Side::R => phi_next.apply(&spec.phi_diag(k, x), y),
                    Side::L => phi_next.apply(x, &spec.phi_diag(k, y)),
                };
                if !lhs.approx_eq(&rhs, tol) {
                    return Err(ConstructionError::ConditionAViolated {
                        k,
                        witness: Witness {
                            parts: vec![("x", Str::one(x.clone())), ("y", Str::one(y.clone()))],
                            lhs: CoValue::Val(lhs),
                            rhs: Some(CoValue::Val(rhs)),
                        },
                    });
                }
            }
        }
    }
    // build G
    let g = match &spec.domain {
        DomainDesc::Finite(d) => {
            let d = d.clone();
            let mut rows = Vec::with_capacity(max_arity);
            let space = FiniteSpace::new(d.clone());
            for n in 1..=max_arity {
                let mut row = Vec::with_capacity(d.len().pow(n as u32));
                for s in space.strings(n) {
                    row.push(CoValue::Val(spec.eval(s.atoms())));
                }
                rows.push(row);
            }
            VarFn::from_rows(
                "from_sections",
                d.clone(),
                DomainDesc::Finite(d),
                CoValue::Epsilon,
                rows,
            )?
            .claim_eps_standard()
        }
        other => {
            let spec_arc = Arc::new(spec.clone());
            VarFn::closed(
                "from_sections",
                other.clone(),
                other.clone(),
                CoValue::Epsilon,
                Some(max_arity),
                move |xs| Ok(CoValue::Val(spec_arc.eval(xs))),
            )
            .claim_eps_standard()
        }
    };
    // condition (b): arity-wise range-idempotence of G
    for n in 1..=max_arity {
        for s in construct_strings(&spec.domain, n) {
            let v = g.eval(&s).map_err(|e| ConstructionError::Unsupported(e.to_string()))?;
            let rep = repeat_co(&v, n);
            match g.eval(&rep) {
                Ok(back) if back.approx_eq(&v, tol) => {}
                back => {
                    let rhs = back.ok();
                    return Err(ConstructionError::ConditionBViolated {
                        kind: ConditionBKind::RangeIdempotence,
                        k: n,
                        witness: Witness { parts: vec![("y", s)], lhs: v, rhs },
                    });
                }
            }
        }
    }
    // condition (b): the opposite-side equation at each arity
    for k in 1..max_arity {
        for s in construct_strings(&spec.domain, k + 1) {
            let lhs = g.eval(&s).map_err(|e| ConstructionError::Unsupported(e.to_string()))?;
            let rhs_str = match spec.side(k + 1) {
                Side::R => {
                    // G(x 𝐲 z) = G(x · G(𝐲z)^k)
                    let tail = s.sub(1, s.len());
                    let tv = g
                        .eval(&tail)
                        .map_err(|e| ConstructionError::Unsupported(e.to_string()))?;
                    s.sub(0, 1).concat(&repeat_co(&tv, k))
                }
                Side::L => {
                    // G(x 𝐲 z) = G(G(x𝐲)^k · z)
                    let head = s.sub(0, s.len() - 1);
                    let hv = g
                        .eval(&head)
                        .map_err(|e| ConstructionError::Unsupported(e.to_string()))?;
                    repeat_co(&hv, k).concat(&s.sub(s.len() - 1, s.len()))
                }
            };
            match g.eval(&rhs_str) {
                Ok(rhs) if rhs.approx_eq(&lhs, tol) => {}
                rhs => {
                    return Err(ConstructionError::ConditionBViolated {
                        kind: ConditionBKind::CrossEquation,
                        k,
                        witness: Witness { parts: vec![("y", s)], lhs, rhs: rhs.ok() },
                    });
                }
            }
        }
    }
    let _ = cfg;
    Ok(g)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExtendCondition {
    RangeIdempotence,
    SuffixCollapse,
    PrefixCollapse,
}

impl std::fmt::Display for ExtendCondition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ExtendCondition::RangeIdempotence => write!(f, "δ∘F = F at the new arity"),
            ExtendCondition::SuffixCollapse => write!(f, "suffix-collapse equation"),
            ExtendCondition::PrefixCollapse => write!(f, "prefix-collapse equation"),
        }
    }
}

pub enum ExtendVerdict {
    Accepted(VarFn),
    Rejected { condition: ExtendCondition, witness: Witness },
}

/// Tests whether a candidate (k+1)-ary part extends a B-associative
/// operation of maximum arity k: the candidate must be range-idempotent and
/// collapse a k-prefix or k-suffix through the existing part.
pub fn extend(
    f: &VarFn,
    candidate: &NaryPart,
    cfg: &SearchConfig,
) -> Result<ExtendVerdict, ConstructionError> {
    let k = f
        .max_arity()
        .ok_or_else(|| ConstructionError::Unsupported("base needs a bounded arity".into()))?;
    if candidate.arity() != k + 1 {
        return Err(ConstructionError::Unsupported(format!(
            "candidate arity {} does not extend maximum arity {k}",
            candidate.arity()
        )));
    }
    let base_cfg = SearchConfig { max_len: k, ..cfg.clone() };
    let pre = check(f, PropertyId::BAssociative, &base_cfg);
    if !pre.passed() {
        return Err(ConstructionError::PreconditionFailed {
            what: "base is not B-associative on the space".into(),
            witness: pre.witness,
        });
    }
    let tol = construct_tol(f.domain());
    // assemble the extended function, then test the equations through it so
    // that ε-valued outputs collapse substrings the way string algebra says
    let base = f.clone();
    let cand = candidate.clone();
    let extended = VarFn::closed(
        &format!("{}+arity{}", f.name(), k + 1),
        f.domain().clone(),
        f.codomain().clone(),
        f.default().clone(),
        Some(k + 1),
        move |xs| {
            if xs.len() <= k {
                base.eval(&Str::from(xs.to_vec()))
            } else {
                Ok(cand.eval(xs).expect("arity checked"))
            }
        },
    );
    // an escape (output outside the domain) makes the instance undefined
    let eval_sub = |s: &Str| -> Result<Option<CoValue>, ConstructionError> {
        match extended.eval(s) {
            Ok(v) => Ok(Some(v)),
            Err(crate::varfn::EvalError::DomainMismatch { .. }) => Ok(None),
            Err(e) => Err(ConstructionError::Unsupported(e.to_string())),
        }
    };
    for w in construct_strings(f.domain(), k + 1) {
        let cw = extended
            .eval(&w)
            .map_err(|e| ConstructionError::Unsupported(e.to_string()))?;
        // δ∘F_{k+1} = F_{k+1} at the new arity
        let diag = eval_sub(&repeat_co(&cw, k + 1))?;
        match &diag {
            Some(d) if d.approx_eq(&cw, tol) => {}
            _ => {
                return Ok(ExtendVerdict::Rejected {
                    condition: ExtendCondition::RangeIdempotence,
                    witness: Witness { parts: vec![("y", w)], lhs: cw, rhs: diag },
                });
            }
        }
        // F_{k+1}(x𝐲z) = F_{k+1}(x F_k(𝐲z)^k)
        let tail_v = extended
            .eval(&w.sub(1, k + 1))
            .map_err(|e| ConstructionError::Unsupported(e.to_string()))?;
        let suffix = eval_sub(&w.sub(0, 1).concat(&repeat_co(&tail_v, k)))?;
        match &suffix {
            Some(v) if v.approx_eq(&cw, tol) => {}
            _ => {
                return Ok(ExtendVerdict::Rejected {
                    condition: ExtendCondition::SuffixCollapse,
                    witness: Witness { parts: vec![("y", w)], lhs: cw, rhs: suffix },
                });
            }
        }
        // F_{k+1}(x𝐲z) = F_{k+1}(F_k(x𝐲)^k z)
        let head_v = extended
            .eval(&w.sub(0, k))
            .map_err(|e| ConstructionError::Unsupported(e.to_string()))?;
        let prefix = eval_sub(&repeat_co(&head_v, k).concat(&w.sub(k, k + 1)))?;
        match &prefix {
            Some(v) if v.approx_eq(&cw, tol) => {}
            _ => {
                return Ok(ExtendVerdict::Rejected {
                    condition: ExtendCondition::PrefixCollapse,
                    witness: Witness { parts: vec![("y", w)], lhs: cw, rhs: prefix },
                });
            }
        }
    }
    let extended = if f.claims_eps_standard() {
        extended.claim_eps_standard()
    } else {
        extended
    };
    // cross-check: the extension is B-associative one arity higher
    let ext_cfg = SearchConfig { max_len: k + 1, ..cfg.clone() };
    let cross = check(&extended, PropertyId::BAssociative, &ext_cfg);
    if cross.status == Status::Fail {
        return Err(ConstructionError::Unsupported(
            "extension passed the collapse equations but failed the cross-check \
             (implementation bug)"
                .into(),
        ));
    }
    Ok(ExtendVerdict::Accepted(extended))
}

/// Replace every arity above the cutoff by a constant.
pub struct ConstantTail {
    pub base: VarFn,
    pub cutoff: usize,
    /// constants[i] is the value at arity cutoff+1+i; the last entry repeats
    /// for higher arities.
    pub constants: Vec<Value>,
}

pub struct ConstantTailBuilt {
    pub f: VarFn,
    pub cross_check: PropertyReport,
}

/// Keeps the base below the cutoff and pins each higher arity to a constant;
/// the result is cross-checked for B-associativity.
pub fn constant_tail(
    t: &ConstantTail,
    cfg: &SearchConfig,
) -> Result<ConstantTailBuilt, ConstructionError> {
    if t.constants.is_empty() {
        return Err(ConstructionError::Unsupported("need at least one tail constant".into()));
    }
    if let Some(m) = t.base.max_arity() {
        if t.cutoff > m {
            return Err(ConstructionError::Unsupported(format!(
                "cutoff {} exceeds the base arity bound {m}",
                t.cutoff
            )));
        }
    }
    for c in &t.constants {
        if !matches!(t.base.codomain(), DomainDesc::Finite(_)) || t.base.codomain().contains(c) {
            continue;
        }
        return Err(ConstructionError::Unsupported(format!(
            "tail constant {c} is outside the codomain"
        )));
    }
    let pre_cfg = SearchConfig { max_len: cfg.max_len.min(t.cutoff), ..cfg.clone() };
    let pre = check(&t.base, PropertyId::BAssociative, &pre_cfg);
    if !pre.passed() {
        return Err(ConstructionError::PreconditionFailed {
            what: "base is not B-associative on the space".into(),
            witness: pre.witness,
        });
    }
    let base = t.base.clone();
    let cutoff = t.cutoff;
    let constants = t.constants.clone();
    let built = VarFn::closed(
        &format!("{}|tail", t.base.name()),
        t.base.domain().clone(),
        t.base.codomain().clone(),
        t.base.default().clone(),
        None,
        move |xs| {
            if xs.len() <= cutoff {
                base.eval(&Str::from(xs.to_vec()))
            } else {
                let i = (xs.len() - cutoff - 1).min(constants.len() - 1);
                Ok(CoValue::Val(constants[i].clone()))
            }
        },
    );
    let built = if t.base.claims_eps_standard() {
        built.claim_eps_standard()
    } else {
        built
    };
    let cross_check = check(&built, PropertyId::BAssociative, cfg);
    Ok(ConstantTailBuilt { f: built, cross_check })
}

#[derive(Clone, Copy, Debug, Default)]
pub struct FilterFlags {
    pub idempotent: bool,
    pub associative: bool,
    pub symmetric: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize)]
pub struct Census {
    pub domain_size: usize,
    pub max_arity: usize,
    /// Number of ε-standard tables at this bound.
    pub total: u128,
    pub b_associative: u64,
    pub associative: u64,
    pub idempotent: u64,
}

pub struct Enumeration {
    pub functions: Vec<VarFn>,
    pub census: Census,
}

/// Dense integer rows: rows[n-1][string index] = output atom index.
type Rows = Vec<Vec<u8>>;

fn rows_to_varfn(domain: &FiniteDomain, rows: &Rows, name: &str) -> VarFn {
    let out_rows: Vec<Vec<CoValue>> = rows
        .iter()
        .map(|row| {
            row.iter()
                .map(|&i| CoValue::Val(domain.atoms()[i as usize].clone()))
                .collect()
        })
        .collect();
    VarFn::from_rows(
        name,
        domain.clone(),
        DomainDesc::Finite(domain.clone()),
        CoValue::Epsilon,
        out_rows,
    )
    .expect("enumerated rows are dense and within the domain")
    .claim_eps_standard()
}

/// Index of the constant string v^m over a k-letter alphabet.
fn rep_index(v: usize, m: usize, k: usize) -> usize {
    let mut idx = 0;
    for _ in 0..m {
        idx = idx * k + v;
    }
    idx
}

fn rows_idempotent(rows: &Rows, k: usize) -> bool {
    rows.iter().enumerate().all(|(m, row)| {
        (0..k).all(|v| row[rep_index(v, m + 1, k)] == v as u8)
    })
}

/// Enumerates every ε-standard operation table on the domain that is
/// B-associative exhaustively at the given bound, by extending arity by
/// arity: the unary part must be a retraction, and each next arity is
/// determined by a table on X² through the suffix-collapse equation, then
/// filtered by range-idempotence and the prefix-collapse equation.
pub fn enumerate_b_associative(
    domain: &FiniteDomain,
    max_arity: usize,
    flags: FilterFlags,
    cfg: &SearchConfig,
) -> Result<Enumeration, ConstructionError> {
    let k = domain.len();
    if k > 3 || max_arity > 3 {
        return Err(ConstructionError::DomainTooLarge(format!(
            "enumeration is bounded to |X| ≤ 3 and arity ≤ 3 (got |X| = {k}, arity {max_arity})"
        )));
    }
    if max_arity == 0 {
        return Err(ConstructionError::Unsupported("arity bound must be positive".into()));
    }
    let mut examined: u64 = 0;
    // arity 1: retractions
    let mut prefixes: Vec<Rows> = Vec::new();
    for code in 0..k.pow(k as u32) {
        examined += 1;
        if examined > cfg.budget {
            return Err(ConstructionError::BudgetExceeded { examined });
        }
        let mut rem = code;
        let mut row = Vec::with_capacity(k);
        for _ in 0..k {
            row.push((rem % k) as u8);
            rem /= k;
        }
        let retraction = (0..k).all(|v| row[row[v] as usize] == row[v]);
        if retraction {
            prefixes.push(vec![row]);
        }
    }
    for n in 1..max_arity {
        // F_{n+1}(x·t) = ψ(x, F_n(t)); enumerate ψ: X² → X per surviving prefix
        let psi_total = k.pow((k * k) as u32) as u64;
        let next_cost = prefixes.len() as u64 * psi_total;
        if examined.saturating_add(next_cost) > cfg.budget {
            return Err(ConstructionError::BudgetExceeded {
                examined: examined.saturating_add(next_cost),
            });
        }
        let mut next: Vec<Rows> = Vec::new();
        let kn = k.pow(n as u32);
        let size = k * kn;
        for prefix in &prefixes {
            for psi_code in 0..psi_total {
                examined += 1;
                let mut rem = psi_code;
                let mut psi = Vec::with_capacity(k * k);
                for _ in 0..(k * k) {
                    psi.push((rem % k as u64) as u8);
                    rem /= k as u64;
                }
                let prev = &prefix[n - 1];
                let mut row = Vec::with_capacity(size);
                for w in 0..size {
                    let x = w / kn;
                    let tail = w % kn;
                    let a = prev[tail] as usize;
                    row.push(psi[x * k + a]);
                }
                // range-idempotence at the new arity
                let ok_ri = (0..size).all(|w| {
                    let v = row[w] as usize;
                    row[rep_index(v, n + 1, k)] == row[w]
                });
                if !ok_ri {
                    continue;
                }
                // suffix-collapse holds on the already substituted strings too
                let ok_suffix = (0..size).all(|w| {
                    let x = w / kn;
                    let tail = w % kn;
                    let a = prev[tail] as usize;
                    row[x * kn + rep_index(a, n, k)] == row[w]
                });
                if !ok_suffix {
                    continue;
                }
                // prefix-collapse through F_n
                let ok_prefix = (0..size).all(|w| {
                    let head = w / k;
                    let z = w % k;
                    let b = prev[head] as usize;
                    row[rep_index(b, n, k) * k + z] == row[w]
                });
                if !ok_prefix {
                    continue;
                }
                let mut rows = prefix.clone();
                rows.push(row);
                next.push(rows);
            }
        }
        // distinct ψ tables can determine the same row when ran(F_n) ≠ X
        next.sort();
        next.dedup();
        prefixes = next;
    }
    prefixes.sort();
    let census_b = prefixes.len() as u64;
    let mut total: u128 = 1;
    for n in 1..=max_arity {
        let entries = k.pow(n as u32);
        for _ in 0..entries {
            total = total.checked_mul(k as u128).ok_or_else(|| {
                ConstructionError::DomainTooLarge("table count overflows u128".into())
            })?;
        }
    }
    let mut functions = Vec::new();
    let mut associative_count = 0u64;
    let mut idempotent_count = 0u64;
    let table_cfg = SearchConfig { max_len: max_arity, ..cfg.clone() };
    for (i, rows) in prefixes.iter().enumerate() {
        let f = rows_to_varfn(domain, rows, &format!("b_assoc_{i:04}"));
        let idem = rows_idempotent(rows, k);
        let assoc = check(&f, PropertyId::Associative, &table_cfg).passed();
        if idem {
            idempotent_count += 1;
        }
        if assoc {
            associative_count += 1;
        }
        if flags.idempotent && !idem {
            continue;
        }
        if flags.associative && !assoc {
            continue;
        }
        if flags.symmetric {
            let symmetric = (1..=max_arity)
                .all(|n| check(&f, PropertyId::Symmetric(n), &table_cfg).passed());
            if !symmetric {
                continue;
            }
        }
        functions.push(f);
    }
    Ok(Enumeration {
        functions,
        census: Census {
            domain_size: k,
            max_arity,
            total,
            b_associative: census_b,
            associative: associative_count,
            idempotent: idempotent_count,
        },
    })
}

/// All operation tables on the domain at the given bound, as plain digit
/// enumeration: the independent population for oracle comparisons. With
/// `include_epsilon` the outputs range over X ∪ {ε} (default ε), otherwise
/// the tables are ε-standard.
pub fn all_tables(
    domain: &FiniteDomain,
    max_arity: usize,
    include_epsilon: bool,
) -> Result<Vec<VarFn>, ConstructionError> {
    let k = domain.len();
    let entries: usize = (1..=max_arity).map(|n| k.pow(n as u32)).sum();
    let radix = if include_epsilon { k + 1 } else { k };
    let total = (radix as u128).checked_pow(entries as u32).ok_or_else(|| {
        ConstructionError::DomainTooLarge("table count overflows u128".into())
    })?;
    if total > 1 << 20 {
        return Err(ConstructionError::DomainTooLarge(format!(
            "{total} tables exceed the enumeration guard"
        )));
    }
    let mut out = Vec::with_capacity(total as usize);
    for code in 0..total {
        let mut rem = code;
        let mut digits = Vec::with_capacity(entries);
        for _ in 0..entries {
            digits.push((rem % radix as u128) as usize);
            rem /= radix as u128;
        }
        let mut rows: Vec<Vec<CoValue>> = Vec::with_capacity(max_arity);
        let mut pos = 0;
        for n in 1..=max_arity {
            let len = k.pow(n as u32);
            let row = digits[pos..pos + len]
                .iter()
                .map(|&d| {
                    if d < k {
                        CoValue::Val(domain.atoms()[d].clone())
                    } else {
                        CoValue::Epsilon
                    }
                })
                .collect();
            rows.push(row);
            pos += len;
        }
        let f = VarFn::from_rows(
            &format!("table_{code:05}"),
            domain.clone(),
            DomainDesc::Finite(domain.clone()),
            CoValue::Epsilon,
            rows,
        )?;
        out.push(if include_epsilon { f } else { f.claim_eps_standard() });
    }
    Ok(out)
}

/// A deterministic sample of distinct ε-standard tables.
pub fn random_epsilon_standard_tables(
    domain: &FiniteDomain,
    max_arity: usize,
    count: usize,
    seed: u64,
) -> Vec<VarFn> {
    let k = domain.len();
    let entries: usize = (1..=max_arity).map(|n| k.pow(n as u32)).sum();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let digits: Vec<u8> = (0..entries).map(|_| rng.gen_range(0..k) as u8).collect();
        if !seen.insert(digits.clone()) {
            continue;
        }
        let mut rows: Vec<Vec<CoValue>> = Vec::with_capacity(max_arity);
        let mut pos = 0;
        for n in 1..=max_arity {
            let len = k.pow(n as u32);
            let row = digits[pos..pos + len]
                .iter()
                .map(|&d| CoValue::Val(domain.atoms()[d as usize].clone()))
                .collect();
            rows.push(row);
            pos += len;
        }
        let f = VarFn::from_rows(
            &format!("sample_{:04}", out.len()),
            domain.clone(),
            DomainDesc::Finite(domain.clone()),
            CoValue::Epsilon,
            rows,
        )
        .expect("sampled rows are dense")
        .claim_eps_standard();
        out.push(f);
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OpenProblem {
    /// Does every B-associative operation factor as F_n = δ_{F_n} ∘ G_n with
    /// G B-associative and idempotent?
    IdempotentFactor,
    /// Does idempotence of F_{k+1} force idempotence of F_k?
    IdempotenceDescent,
}

#[derive(Clone, Debug)]
pub enum ProbeOutcome {
    NoCounterexampleAtBound,
    Counterexample { description: String },
}

#[derive(Clone, Debug)]
pub struct ProbeReport {
    pub problem: OpenProblem,
    pub domain_size: usize,
    pub max_arity: usize,
    pub searched: u64,
    pub outcome: ProbeOutcome,
    /// Always states the bound; a probe never claims anything beyond it.
    pub note: String,
}

/// Finite-domain search for counterexamples to the open questions. The
/// report records the exact bound; "no counterexample at this bound" is
/// never a proof.
pub fn probe_open_problems(
    problem: OpenProblem,
    domain: &FiniteDomain,
    max_arity: usize,
    cfg: &SearchConfig,
) -> Result<ProbeReport, ConstructionError> {
    let enumeration =
        enumerate_b_associative(domain, max_arity, FilterFlags::default(), cfg)?;
    let k = domain.len();
    let space = FiniteSpace::new(domain.clone());
    let mut searched = 0u64;
    let note = format!(
        "exhaustive over ε-standard tables with |X| = {k}, arities ≤ {max_arity}; \
         no claim beyond this bound"
    );
    match problem {
        OpenProblem::IdempotentFactor => {
            let candidates: Vec<&VarFn> = enumeration.functions.iter().collect();
            let idempotent: Vec<&VarFn> = candidates
                .iter()
                .copied()
                .filter(|f| {
                    (1..=max_arity).all(|n| {
                        domain.atoms().iter().all(|a| {
                            f.eval(&Str::one(a.clone()).power(n)).unwrap()
                                == CoValue::Val(a.clone())
                        })
                    })
                })
                .collect();
            for f in &candidates {
                let mut found = false;
                'g_loop: for g in &idempotent {
                    searched += 1;
                    for n in 1..=max_arity {
                        let delta = crate::factorization::diagonal_table(f, n)
                            .map_err(|e| ConstructionError::Unsupported(e.to_string()))?;
                        for s in space.strings(n) {
                            let gv = g.eval(&s).unwrap();
                            let composed = delta.apply(&gv);
                            if composed != Some(&f.eval(&s).unwrap()) {
                                continue 'g_loop;
                            }
                        }
                    }
                    found = true;
                    break;
                }
                if !found {
                    return Ok(ProbeReport {
                        problem,
                        domain_size: k,
                        max_arity,
                        searched,
                        outcome: ProbeOutcome::Counterexample {
                            description: format!(
                                "{} admits no idempotent B-associative factor at this bound",
                                f.name()
                            ),
                        },
                        note,
                    });
                }
            }
            Ok(ProbeReport {
                problem,
                domain_size: k,
                max_arity,
                searched,
                outcome: ProbeOutcome::NoCounterexampleAtBound,
                note,
            })
        }
        OpenProblem::IdempotenceDescent => {
            for f in &enumeration.functions {
                for kk in 1..max_arity {
                    searched += 1;
                    let idem_at = |n: usize| {
                        domain.atoms().iter().all(|a| {
                            f.eval(&Str::one(a.clone()).power(n)).unwrap()
                                == CoValue::Val(a.clone())
                        })
                    };
                    if idem_at(kk + 1) && !idem_at(kk) {
                        return Ok(ProbeReport {
                            problem,
                            domain_size: k,
                            max_arity,
                            searched,
                            outcome: ProbeOutcome::Counterexample {
                                description: format!(
                                    "{}: arity {} is idempotent but arity {} is not",
                                    f.name(),
                                    kk + 1,
                                    kk
                                ),
                            },
                            note,
                        });
                    }
                }
            }
            Ok(ProbeReport {
                problem,
                domain_size: k,
                max_arity,
                searched,
                outcome: ProbeOutcome::NoCounterexampleAtBound,
                note,
            })
        }
    }
}

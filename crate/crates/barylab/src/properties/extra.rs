//! Derived checks built on top of the property engine: the ε-standard test,
//! the equivalence-theorem cross-check suite, composition closure,
//! hypothesis-propagation checks, and section-based determination.

use std::sync::Arc;
use std::time::Instant;

use super::{arity_cap, check, check_all, sort_canonical};
use crate::domain::DomainDesc;
use crate::report::{
    Mode, PropertyId, PropertyReport, SpaceDesc, Status, UnsupportedReason, Witness,
};
use crate::sample::{lattice_pool, SearchConfig};
use crate::string::Str;
use crate::value::{CoValue, Tol, Value};
use crate::varfn::{Side, VarFn};

/// Does F map exactly ε to ε on the bounded space?
pub fn is_epsilon_standard(f: &VarFn, max_len: usize) -> PropertyReport {
    let cfg = SearchConfig::default().with_max_len(max_len);
    check(f, PropertyId::EpsilonStandard, &cfg)
}

/// One theorem-mandated agreement between property verdicts.
#[derive(Clone, Debug)]
pub struct EquivFinding {
    pub relation: &'static str,
    pub ids: Vec<PropertyId>,
    pub statuses: Vec<Status>,
    /// Whether the mandated relation held between the verdicts.
    pub agreement: bool,
    /// False when some involved verdict was unsupported.
    pub decided: bool,
    /// A decided disagreement on an exhaustive space is an implementation
    /// bug, never a refutation of the underlying equivalence.
    pub critical: bool,
}

#[derive(Debug)]
pub struct EquivSuite {
    pub reports: Vec<PropertyReport>,
    pub findings: Vec<EquivFinding>,
}

impl EquivSuite {
    pub fn report(&self, id: PropertyId) -> Option<&PropertyReport> {
        self.reports.iter().find(|r| r.property == id)
    }

    pub fn status(&self, id: PropertyId) -> Option<Status> {
        self.report(id).map(|r| r.status)
    }

    /// True when every decided finding agrees.
    pub fn all_agree(&self) -> bool {
        self.findings.iter().all(|f| !f.decided || f.agreement)
    }
}

/// Runs the B-associativity/B-preassociativity checkers whose verdicts are
/// tied together by equivalence results, and compares them pairwise.
pub fn check_equivalence_suite(f: &VarFn, cfg: &SearchConfig) -> EquivSuite {
    let ids = [
        PropertyId::BAssociative,
        PropertyId::BAssocSimplified,
        PropertyId::BAssocFormII,
        PropertyId::BAssocFormIII,
        PropertyId::BAssocFormIV,
        PropertyId::BPreassociative,
        PropertyId::BPreassocSimplified,
        PropertyId::BPreassocTwoEq,
        PropertyId::ArityWiseRangeIdempotent,
    ];
    let reports = check_all(f, &ids, cfg);
    let status = |id: PropertyId| -> Status {
        reports
            .iter()
            .find(|r| r.property == id)
            .map(|r| r.status)
            .unwrap_or(Status::Unsupported)
    };
    let exhaustive = reports
        .iter()
        .all(|r| r.space.mode == Mode::Exhaustive);
    let mut findings = Vec::new();
    let mut push_equal = |relation: &'static str, ids: Vec<PropertyId>| {
        let statuses: Vec<Status> = ids.iter().map(|id| status(*id)).collect();
        let decided = statuses.iter().all(|s| *s != Status::Unsupported);
        let agreement = !decided || statuses.windows(2).all(|w| w[0] == w[1]);
        findings.push(EquivFinding {
            relation,
            ids,
            statuses,
            agreement,
            decided,
            critical: decided && !agreement && exhaustive,
        });
    };
    push_equal(
        "b_assoc_forms_agree",
        vec![
            PropertyId::BAssociative,
            PropertyId::BAssocFormII,
            PropertyId::BAssocFormIII,
            PropertyId::BAssocFormIV,
        ],
    );
    push_equal(
        "b_assoc_simplified_agrees",
        vec![PropertyId::BAssociative, PropertyId::BAssocSimplified],
    );
    push_equal(
        "b_preassoc_simplified_agrees",
        vec![PropertyId::BPreassociative, PropertyId::BPreassocSimplified],
    );
    push_equal(
        "b_preassoc_two_eq_agrees",
        vec![PropertyId::BPreassociative, PropertyId::BPreassocTwoEq],
    );
    {
        let ids = vec![
            PropertyId::BAssociative,
            PropertyId::BPreassociative,
            PropertyId::ArityWiseRangeIdempotent,
        ];
        let statuses: Vec<Status> = ids.iter().map(|id| status(*id)).collect();
        let decided = statuses.iter().all(|s| *s != Status::Unsupported);
        let both = statuses[1] == Status::Pass && statuses[2] == Status::Pass;
        let agreement = !decided || ((statuses[0] == Status::Pass) == both);
        findings.push(EquivFinding {
            relation: "b_assoc_iff_b_preassoc_and_awri",
            ids,
            statuses,
            agreement,
            decided,
            critical: decided && !agreement && exhaustive,
        });
    }
    {
        let ids = vec![PropertyId::BAssociative, PropertyId::ArityWiseRangeIdempotent];
        let statuses: Vec<Status> = ids.iter().map(|id| status(*id)).collect();
        let decided = statuses.iter().all(|s| *s != Status::Unsupported);
        let agreement =
            !decided || !(statuses[0] == Status::Pass && statuses[1] == Status::Fail);
        findings.push(EquivFinding {
            relation: "b_assoc_implies_awri",
            ids,
            statuses,
            agreement,
            decided,
            critical: decided && !agreement && exhaustive,
        });
    }
    EquivSuite { reports, findings }
}

/// A named unary map used for compositions.
#[derive(Clone)]
pub struct UnaryMap {
    pub name: String,
    f: Arc<dyn Fn(&Value) -> Value + Send + Sync>,
}

impl UnaryMap {
    pub fn new(
        name: &str,
        f: impl Fn(&Value) -> Value + Send + Sync + 'static,
    ) -> UnaryMap {
        UnaryMap { name: name.to_string(), f: Arc::new(f) }
    }

    /// Maps numbers through `f`; other value kinds pass through unchanged.
    pub fn numeric(name: &str, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> UnaryMap {
        UnaryMap::new(name, move |v| match v {
            Value::Num(x) => Value::num(f(*x)),
            other => other.clone(),
        })
    }

    pub fn identity() -> UnaryMap {
        UnaryMap::new("id", |v| v.clone())
    }

    pub fn apply(&self, v: &Value) -> Value {
        (self.f)(v)
    }
}

/// Composition closure inputs: a single inner map applied to every argument,
/// or per-arity outer maps applied to the result.
pub enum CompositionMaps {
    Right { inner: UnaryMap, inner_domain: DomainDesc },
    Left { outer: Vec<UnaryMap>, outer_codomain: DomainDesc, injectivity_claimed: bool },
}

pub struct CompositionOutcome {
    pub composed: VarFn,
    pub report: PropertyReport,
    pub injectivity_claimed: Option<bool>,
}

#[derive(Debug, thiserror::Error)]
pub enum CompositionError {
    #[error("left composition needs one outer map per arity 1..={needed}, got {got}")]
    ArityMismatch { needed: usize, got: usize },
}

/// Builds the composed function and checks it for B-preassociativity. Right
/// composition preserves the property; left composition preserves it only
/// when each outer map is one-to-one on the corresponding range, so the
/// check reports honestly either way.
pub fn check_composition_closure(
    f: &VarFn,
    maps: &CompositionMaps,
    cfg: &SearchConfig,
) -> Result<CompositionOutcome, CompositionError> {
    let (composed, claimed) = match maps {
        CompositionMaps::Right { inner, inner_domain } => {
            let base = f.clone();
            let g = inner.clone();
            let name = format!("{}∘({})", f.name(), inner.name);
            let composed = VarFn::closed(
                &name,
                inner_domain.clone(),
                f.codomain().clone(),
                f.default().clone(),
                f.max_arity(),
                move |xs| {
                    let mapped: Vec<Value> = xs.iter().map(|v| g.apply(v)).collect();
                    base.eval(&Str::from(mapped))
                },
            );
            (composed, None)
        }
        CompositionMaps::Left { outer, outer_codomain, injectivity_claimed } => {
            let needed = arity_cap(f, cfg);
            if outer.len() < needed {
                return Err(CompositionError::ArityMismatch { needed, got: outer.len() });
            }
            let base = f.clone();
            let outs = outer.clone();
            let name = format!("({})∘{}", outer[0].name, f.name());
            let default = match f.default() {
                CoValue::Epsilon => CoValue::Epsilon,
                CoValue::Val(v) => CoValue::Val(outer[0].apply(v)),
            };
            let max_arity = Some(match f.max_arity() {
                Some(m) => m.min(outs.len()),
                None => outs.len(),
            });
            let composed = VarFn::closed(
                &name,
                f.domain().clone(),
                outer_codomain.clone(),
                default,
                max_arity,
                move |xs| {
                    let v = base.eval(&Str::from(xs.to_vec()))?;
                    Ok(match v {
                        CoValue::Epsilon => CoValue::Epsilon,
                        CoValue::Val(v) => CoValue::Val(outs[xs.len() - 1].apply(&v)),
                    })
                },
            );
            (composed, Some(*injectivity_claimed))
        }
    };
    let report = check(&composed, PropertyId::BPreassociative, cfg);
    Ok(CompositionOutcome { composed, report, injectivity_claimed: claimed })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PropagationKind {
    Symmetry,
    Constant,
    InnerSymmetry,
}

fn precondition_report(
    prop: PropertyId,
    cap: usize,
    pre: PropertyReport,
    what: &str,
    start: Instant,
    seed: u64,
) -> PropertyReport {
    let reason = UnsupportedReason::PreconditionUnmet(what.to_string());
    let mut space = SpaceDesc::new(pre.space.mode, cap);
    space.note = Some(reason.to_string());
    PropertyReport {
        property: prop,
        status: Status::Unsupported,
        space,
        witness: pre.witness,
        seed,
        elapsed: start.elapsed(),
        reason: Some(reason),
    }
}

/// Verifies a propagation law concretely: when the hypothesis holds on the
/// space (symmetry/constancy at arity k, or inner symmetry of the middle
/// block), the corresponding conclusion one arity up is asserted. A failing
/// hypothesis yields a vacuous pass.
pub fn check_propagation(
    f: &VarFn,
    kind: PropagationKind,
    k: usize,
    cfg: &SearchConfig,
) -> PropertyReport {
    let start = Instant::now();
    let cap = arity_cap(f, cfg);
    let (hyp_prop, concl_prop, min_k, needed_arity) = match kind {
        PropagationKind::Symmetry => {
            (PropertyId::Symmetric(k), PropertyId::Symmetric(k + 1), 2, k + 1)
        }
        PropagationKind::Constant => {
            (PropertyId::Constant(k), PropertyId::Constant(k + 1), 1, k + 1)
        }
        PropagationKind::InnerSymmetry => (
            PropertyId::InnerSymmetric(k),
            PropertyId::InnerSymmetric(k + 1),
            2,
            k + 3,
        ),
    };
    if k < min_k || needed_arity > cap {
        let reason = UnsupportedReason::Incompatible(format!(
            "propagation at k={k} needs arity {needed_arity} within the space (cap {cap})"
        ));
        let mut space = SpaceDesc::new(Mode::Exhaustive, cap);
        space.note = Some(reason.to_string());
        return PropertyReport {
            property: concl_prop,
            status: Status::Unsupported,
            space,
            witness: None,
            seed: cfg.seed,
            elapsed: start.elapsed(),
            reason: Some(reason),
        };
    }
    let pre = check(f, PropertyId::BPreassociative, cfg);
    if !pre.passed() {
        return precondition_report(
            concl_prop,
            cap,
            pre,
            "b_preassociative fails on the space",
            start,
            cfg.seed,
        );
    }
    let hypothesis = match kind {
        PropagationKind::InnerSymmetry => inner_symmetric(f, k, cfg),
        _ => check(f, hyp_prop, cfg),
    };
    if hypothesis.status != Status::Pass {
        let mut report = hypothesis;
        report.property = concl_prop;
        report.status = Status::Pass;
        report.witness = None;
        report.reason = None;
        report.space.note = Some(format!("vacuous: hypothesis {hyp_prop} fails on the space"));
        report.elapsed = start.elapsed();
        return report;
    }
    let mut conclusion = match kind {
        PropagationKind::InnerSymmetry => inner_symmetric(f, k + 1, cfg),
        _ => check(f, concl_prop, cfg),
    };
    let note = if conclusion.status == Status::Fail {
        format!("CRITICAL: hypothesis {hyp_prop} held but the conclusion failed")
    } else {
        format!("hypothesis {hyp_prop} held on the space")
    };
    conclusion.space.note = Some(note);
    conclusion.elapsed = start.elapsed();
    conclusion
}

/// Is y ∈ X^k ↦ F(x y z) symmetric for every single-letter context (x, z)?
pub fn inner_symmetric(f: &VarFn, k: usize, cfg: &SearchConfig) -> PropertyReport {
    let start = Instant::now();
    let cap = arity_cap(f, cfg);
    let prop = PropertyId::InnerSymmetric(k);
    let (mode, tol) = match f.domain() {
        DomainDesc::Finite(_) => (Mode::Exhaustive, Tol::EXACT),
        _ => (Mode::Sampled, cfg.tol),
    };
    let mut space = SpaceDesc::new(mode, cap);
    if k + 2 > cap {
        let reason = UnsupportedReason::Incompatible(format!(
            "inner symmetry at k={k} needs arity {} within the space (cap {cap})",
            k + 2
        ));
        space.note = Some(reason.to_string());
        return PropertyReport {
            property: prop,
            status: Status::Unsupported,
            space,
            witness: None,
            seed: cfg.seed,
            elapsed: start.elapsed(),
            reason: Some(reason),
        };
    }
    let letters = lattice_pool(f.domain());
    let middles: Vec<Str> = match f.domain() {
        DomainDesc::Finite(d) => {
            crate::sample::FiniteSpace::new(d.clone()).strings(k).collect()
        }
        _ => {
            let mut sampler = crate::sample::Sampler::new(f.domain(), cfg.seed);
            (0..cfg.samples.max(8)).map(|_| sampler.string(k)).collect()
        }
    };
    let mut outcome = None;
    'search: for x in &letters {
        for z in &letters {
            for y in &middles {
                let sorted = sort_canonical(f.domain(), y);
                if &sorted == y {
                    continue;
                }
                space.instances += 1;
                space.evals += 2;
                let lhs = f.eval(&Str::cat3(&Str::one(x.clone()), y, &Str::one(z.clone())));
                let rhs = f.eval(&Str::cat3(&Str::one(x.clone()), &sorted, &Str::one(z.clone())));
                match (lhs, rhs) {
                    (Ok(a), Ok(b)) => {
                        if !a.approx_eq(&b, tol) {
                            outcome = Some(Witness {
                                parts: vec![
                                    ("x", Str::one(x.clone())),
                                    ("y", y.clone()),
                                    ("y_prime", sorted),
                                    ("z", Str::one(z.clone())),
                                ],
                                lhs: a,
                                rhs: Some(b),
                            });
                            break 'search;
                        }
                    }
                    _ => {
                        let reason =
                            UnsupportedReason::Incompatible("evaluation failed on the space".into());
                        space.note = Some(reason.to_string());
                        return PropertyReport {
                            property: prop,
                            status: Status::Unsupported,
                            space,
                            witness: None,
                            seed: cfg.seed,
                            elapsed: start.elapsed(),
                            reason: Some(reason),
                        };
                    }
                }
            }
        }
    }
    let status = if outcome.is_some() { Status::Fail } else { Status::Pass };
    PropertyReport {
        property: prop,
        status,
        space,
        witness: outcome,
        seed: cfg.seed,
        elapsed: start.elapsed(),
        reason: None,
    }
}

/// Determination by one-sided sections: two functions with the relevant
/// property whose chosen sections agree at every arity must coincide on the
/// whole space. A main-phase disagreement is flagged CRITICAL: it indicates
/// an implementation bug, never a refutation at bounded scale.
pub fn check_determination(
    f: &VarFn,
    g: &VarFn,
    side_choices: &[Side],
    cfg: &SearchConfig,
) -> PropertyReport {
    let start = Instant::now();
    let prop = PropertyId::Determination;
    let cap = arity_cap(f, cfg).min(arity_cap(g, cfg));
    let (mode, tol) = match f.domain() {
        DomainDesc::Finite(_) => (Mode::Exhaustive, Tol::EXACT),
        _ => (Mode::Sampled, cfg.tol),
    };
    let mut space = SpaceDesc::new(mode, cap);
    let seed = cfg.seed;
    let bail = |space: SpaceDesc, reason: UnsupportedReason, witness: Option<Witness>| {
        let mut space = space;
        space.note = Some(reason.to_string());
        PropertyReport {
            property: prop,
            status: Status::Unsupported,
            space,
            witness,
            seed,
            elapsed: start.elapsed(),
            reason: Some(reason),
        }
    };
    if f.domain() != g.domain() {
        return bail(
            space,
            UnsupportedReason::Incompatible("functions have different domains".into()),
            None,
        );
    }
    // Establish the hypothesis: B-associative ε-standard operations, or
    // B-preassociative arity-wise quasi-range-idempotent functions.
    let op_path = f.is_operation()
        && g.is_operation()
        && check(f, PropertyId::EpsilonStandard, cfg).passed()
        && check(g, PropertyId::EpsilonStandard, cfg).passed()
        && check(f, PropertyId::BAssociative, cfg).passed()
        && check(g, PropertyId::BAssociative, cfg).passed();
    if !op_path {
        let fn_path = check(f, PropertyId::BPreassociative, cfg).passed()
            && check(g, PropertyId::BPreassociative, cfg).passed()
            && check(f, PropertyId::ArityWiseQuasiRangeIdempotent, cfg).passed()
            && check(g, PropertyId::ArityWiseQuasiRangeIdempotent, cfg).passed();
        if !fn_path {
            return bail(
                space,
                UnsupportedReason::PreconditionUnmet(
                    "neither the B-associative-operation nor the B-preassociative \
                     quasi-range-idempotent hypotheses hold on the space"
                        .into(),
                ),
                None,
            );
        }
        space.note = Some("b_preassociative + quasi-range-idempotent path".into());
    } else {
        space.note = Some("b_associative ε-standard path".into());
    }
    // Arity-0 sections are the defaults.
    space.evals += 2;
    let (df, dg) = (f.default().clone(), g.default().clone());
    if !df.approx_eq(&dg, tol) {
        return bail(
            space,
            UnsupportedReason::PreconditionUnmet("defaults (arity-0 sections) differ".into()),
            Some(Witness { parts: vec![("y", Str::empty())], lhs: df, rhs: Some(dg) }),
        );
    }
    let letters = lattice_pool(f.domain());
    let side_at = |k: usize| -> Side {
        side_choices
            .get(k - 1)
            .or_else(|| side_choices.last())
            .copied()
            .unwrap_or(Side::R)
    };
    for k in 1..=cap {
        let sf = f.sections(k).expect("k within arity cap");
        let sg = g.sections(k).expect("k within arity cap");
        for x in &letters {
            for y in &letters {
                space.instances += 1;
                space.evals += 2;
                let (a, b) = match side_at(k) {
                    Side::R => (sf.delta_r(x, y), sg.delta_r(x, y)),
                    Side::L => (sf.delta_l(x, y), sg.delta_l(x, y)),
                };
                let (Ok(a), Ok(b)) = (a, b) else {
                    return bail(
                        space,
                        UnsupportedReason::Incompatible("section evaluation failed".into()),
                        None,
                    );
                };
                if !a.approx_eq(&b, tol) {
                    let pair = Str::from(vec![x.clone(), y.clone()]);
                    return bail(
                        space,
                        UnsupportedReason::PreconditionUnmet(format!(
                            "sections differ at arity {k}"
                        )),
                        Some(Witness { parts: vec![("y", pair)], lhs: a, rhs: Some(b) }),
                    );
                }
            }
        }
    }
    // Main phase: the functions must now agree everywhere on the space.
    let strings: Vec<Str> = match f.domain() {
        DomainDesc::Finite(d) => crate::sample::FiniteSpace::new(d.clone())
            .strings_upto(cap)
            .collect(),
        _ => {
            let mut sampler = crate::sample::Sampler::new(f.domain(), cfg.seed);
            let mut out = Vec::new();
            for n in 1..=cap {
                for _ in 0..cfg.samples {
                    out.push(sampler.string(n));
                }
            }
            out
        }
    };
    for s in strings {
        space.instances += 1;
        space.evals += 2;
        let (Ok(a), Ok(b)) = (f.eval(&s), g.eval(&s)) else {
            return bail(
                space,
                UnsupportedReason::Incompatible("evaluation failed on the space".into()),
                None,
            );
        };
        if !a.approx_eq(&b, tol) {
            space.note = Some(
                "CRITICAL: sections agree but the functions differ (implementation bug)".into(),
            );
            return PropertyReport {
                property: prop,
                status: Status::Fail,
                space,
                witness: Some(Witness { parts: vec![("y", s)], lhs: a, rhs: Some(b) }),
                seed,
                elapsed: start.elapsed(),
                reason: None,
            };
        }
    }
    PropertyReport {
        property: prop,
        status: Status::Pass,
        space,
        witness: None,
        seed,
        elapsed: start.elapsed(),
        reason: None,
    }
}

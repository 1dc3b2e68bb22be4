//! The verification engine: each quantified law becomes a checker producing a
//! pass/fail report with a witness, and equivalence results become
//! cross-checks between checkers.
//!
//! Finite domains are checked exhaustively up to a string-length bound:
//! a pass is decisive on the bounded space and the witness of a fail is the
//! first violation in (length, lexicographic) enumeration order. Numeric and
//! vector domains are sampled deterministically from the configured seed:
//! a pass means "no violation found", never exhaustive truth.

mod exhaustive;
mod extra;
mod sampled;

pub use extra::{
    check_composition_closure, check_determination, check_equivalence_suite, check_propagation,
    is_epsilon_standard, CompositionMaps, CompositionOutcome, EquivFinding, EquivSuite,
    PropagationKind, UnaryMap,
};

use std::time::Instant;

use crate::domain::DomainDesc;
use crate::report::{
    Mode, PropertyId, PropertyReport, SpaceDesc, Status, UnsupportedReason, Witness,
};
use crate::sample::SearchConfig;
use crate::string::Str;
use crate::value::{CoValue, Tol};
use crate::varfn::{EvalError, VarFn};

/// Early exit from a checker loop: a concrete violation or a reason the
/// search cannot continue.
pub(crate) enum Brk {
    Fail(Witness, Option<String>),
    Stop(UnsupportedReason),
}

pub(crate) struct Ctx<'a> {
    pub f: &'a VarFn,
    pub tol: Tol,
    pub budget: u64,
    pub evals: u64,
    pub instances: u64,
}

impl<'a> Ctx<'a> {
    fn new(f: &'a VarFn, tol: Tol, budget: u64) -> Ctx<'a> {
        Ctx { f, tol, budget, evals: 0, instances: 0 }
    }

    /// Evaluates on a string drawn from the search space. Errors here mean
    /// the space and the function disagree, which aborts the check.
    pub fn eval(&mut self, s: &Str) -> Result<CoValue, Brk> {
        if self.evals >= self.budget {
            return Err(Brk::Stop(UnsupportedReason::BudgetExceeded));
        }
        self.evals += 1;
        self.f.eval(s).map_err(|e| {
            Brk::Stop(UnsupportedReason::Incompatible(e.to_string()))
        })
    }

    /// Evaluates a composed string in which function outputs were substituted
    /// back as letters. An output outside the domain makes the instance
    /// undefined: `None`, which checkers treat as a violation (the function is
    /// not closed under its own outputs).
    pub fn eval_composed(&mut self, s: &Str) -> Result<Option<CoValue>, Brk> {
        if self.evals >= self.budget {
            return Err(Brk::Stop(UnsupportedReason::BudgetExceeded));
        }
        self.evals += 1;
        match self.f.eval(s) {
            Ok(v) => Ok(Some(v)),
            Err(EvalError::DomainMismatch { .. }) => Ok(None),
            Err(e) => Err(Brk::Stop(UnsupportedReason::Incompatible(e.to_string()))),
        }
    }

    pub fn count_instance(&mut self) {
        self.instances += 1;
    }
}

/// Largest string length usable for `f` under this config.
pub(crate) fn arity_cap(f: &VarFn, cfg: &SearchConfig) -> usize {
    match f.max_arity() {
        Some(m) => m.min(cfg.max_len),
        None => cfg.max_len,
    }
}

/// Checks one property of `f` over the bounded search space.
pub fn check(f: &VarFn, prop: PropertyId, cfg: &SearchConfig) -> PropertyReport {
    let start = Instant::now();
    let cap = arity_cap(f, cfg);
    let (mode, tol) = match f.domain() {
        DomainDesc::Finite(_) => (Mode::Exhaustive, Tol::EXACT),
        _ => (Mode::Sampled, cfg.tol),
    };
    let mut ctx = Ctx::new(f, tol, cfg.budget);
    let outcome = match f.domain() {
        DomainDesc::Finite(d) => {
            let d = d.clone();
            exhaustive::run(&mut ctx, &d, prop, cap)
        }
        _ => sampled::run(&mut ctx, prop, cap, cfg),
    };
    let mut space = SpaceDesc::new(mode, cap);
    space.instances = ctx.instances;
    space.evals = ctx.evals;
    if mode == Mode::Sampled {
        space.samples_per_shape = Some(cfg.samples);
    }
    let (status, witness, reason) = match outcome {
        Ok(()) => (Status::Pass, None, None),
        Err(Brk::Fail(w, note)) => {
            space.note = note;
            (Status::Fail, Some(w), None)
        }
        Err(Brk::Stop(reason)) => {
            space.note = Some(reason.to_string());
            (Status::Unsupported, None, Some(reason))
        }
    };
    PropertyReport {
        property: prop,
        status,
        space,
        witness,
        seed: cfg.seed,
        elapsed: start.elapsed(),
        reason,
    }
}

/// Convenience wrapper: checks several properties in order.
pub fn check_all(f: &VarFn, props: &[PropertyId], cfg: &SearchConfig) -> Vec<PropertyReport> {
    props.iter().map(|p| check(f, *p, cfg)).collect()
}

pub(crate) fn sort_canonical(domain: &DomainDesc, s: &Str) -> Str {
    let mut atoms = s.atoms().to_vec();
    match domain {
        DomainDesc::Finite(d) => {
            atoms.sort_by_key(|v| d.index_of(v).expect("atom in domain"));
        }
        _ => atoms.sort(),
    }
    Str::from(atoms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins::{
        abs_mean, arith_mean, clamped_sum, f_a, first_proj, geom_mean, length_fn, m_z, max_op,
        sum, tabulate_on,
    };
    use crate::domain::FiniteDomain;
    use crate::report::{PropertyId as P, Status};
    use crate::value::Value;
    use crate::varfn::Side;

    fn cfg() -> SearchConfig {
        SearchConfig::default()
    }

    fn max01() -> VarFn {
        tabulate_on(&max_op(), vec![Value::num(0.0), Value::num(1.0)], 3).unwrap()
    }

    fn sum01() -> VarFn {
        tabulate_on(&sum(), vec![Value::num(0.0), Value::num(1.0)], 2).unwrap()
    }

    /// Re-evaluates a two-sided witness through the function it came from.
    fn witness_reproduces(f: &VarFn, w: &crate::report::Witness, prop: P) -> bool {
        match prop {
            P::BPreassociative | P::BPreassocSimplified => {
                let x = w.part("x").unwrap();
                let y = w.part("y").unwrap();
                let y2 = w.part("y_prime").unwrap();
                let z = w.part("z").unwrap();
                let hyp = f.eval(y).unwrap() == f.eval(y2).unwrap();
                let lhs = f.eval(&Str::cat3(x, y, z)).unwrap();
                let rhs = f.eval(&Str::cat3(x, y2, z)).unwrap();
                hyp && y.len() == y2.len() && lhs != rhs
            }
            P::BAssociative => {
                let x = w.part("x").unwrap();
                let y = w.part("y").unwrap();
                let z = w.part("z").unwrap();
                let lhs = f.eval(&Str::cat3(x, y, z)).unwrap();
                let fy = f.eval(y).unwrap();
                let mid = Str::cat3(x, &crate::string::repeat_co(&fy, y.len()), z);
                match f.eval(&mid) {
                    Ok(rhs) => lhs != rhs,
                    Err(_) => true, // substituted string escaped the domain
                }
            }
            _ => true,
        }
    }

    #[test]
    fn means_are_b_associative_sampled() {
        for f in [arith_mean(), geom_mean()] {
            let r = check(&f, P::BAssociative, &cfg());
            assert_eq!(r.status, Status::Pass, "{}: {r}", f.name());
            assert_eq!(r.space.mode, Mode::Sampled);
            assert!(r.witness.is_none());
        }
    }

    #[test]
    fn sum_fails_b_associativity_with_a_live_witness() {
        let f = sum();
        let r = check(&f, P::BAssociative, &cfg());
        assert_eq!(r.status, Status::Fail);
        let w = r.witness.expect("fail carries a witness");
        assert!(witness_reproduces(&f, &w, P::BAssociative));
        // the shape of the failure: a pair summing to s maps to 2s
        let y = Str::nums(&[1.0, 3.0]);
        assert_eq!(f.eval(&y).unwrap(), CoValue::num(4.0));
        assert_eq!(f.eval(&Str::nums(&[4.0, 4.0])).unwrap(), CoValue::num(8.0));
    }

    #[test]
    fn sum_and_length_are_b_preassociative() {
        for f in [sum(), length_fn()] {
            let r = check(&f, P::BPreassociative, &cfg());
            assert_eq!(r.status, Status::Pass, "{}: {r}", f.name());
        }
    }

    #[test]
    fn abs_mean_fails_b_preassociativity() {
        let f = abs_mean();
        let r = check(&f, P::BPreassociative, &cfg());
        assert_eq!(r.status, Status::Fail);
        let w = r.witness.expect("witness");
        assert!(witness_reproduces(&f, &w, P::BPreassociative));
        // the equal-value pair behind the failure: F(1) = F(−1) but
        // appending 1 separates them
        assert_eq!(f.eval(&Str::nums(&[1.0])).unwrap(), CoValue::num(1.0));
        assert_eq!(f.eval(&Str::nums(&[-1.0])).unwrap(), CoValue::num(1.0));
        assert_eq!(f.eval(&Str::nums(&[1.0, 1.0])).unwrap(), CoValue::num(1.0));
        assert_eq!(f.eval(&Str::nums(&[1.0, -1.0])).unwrap(), CoValue::num(0.0));
    }

    #[test]
    fn clamped_sum_fails_b_preassociativity_with_short_witness() {
        let f = clamped_sum();
        let r = check(&f, P::BPreassociative, &cfg());
        assert_eq!(r.status, Status::Fail);
        let w = r.witness.expect("witness");
        assert!(witness_reproduces(&f, &w, P::BPreassociative));
        // no longer than the classic three-letter instance
        let total = w.part("x").unwrap().len() + w.part("y").unwrap().len()
            + w.part("z").unwrap().len();
        assert!(total <= 3, "witness too long: {w}");
    }

    #[test]
    fn f_a_is_associative_and_b_associative() {
        let dom = FiniteDomain::new(vec![Value::sym("0"), Value::sym("1")]).unwrap();
        let f = f_a(dom, Value::sym("1")).unwrap();
        let r = check(&f, P::BAssociative, &cfg());
        assert_eq!(r.status, Status::Pass, "{r}");
        assert_eq!(r.space.mode, Mode::Exhaustive);
        let r = check(&f, P::Associative, &cfg());
        assert_eq!(r.status, Status::Pass, "{r}");
    }

    #[test]
    fn epsilon_standard_verdicts() {
        assert_eq!(is_epsilon_standard(&arith_mean(), 3).status, Status::Pass);
        // F_a maps "0" to ε: minimal witness is the one-letter string
        let dom = FiniteDomain::new(vec![Value::sym("0"), Value::sym("1")]).unwrap();
        let f = f_a(dom.clone(), Value::sym("1")).unwrap();
        let r = is_epsilon_standard(&f, 3);
        assert_eq!(r.status, Status::Fail);
        assert_eq!(r.witness.unwrap().part("y"), Some(&Str::syms(&["0"])));
        // constant-ε function fails at the first length-1 string
        let c = VarFn::closed(
            "const_eps",
            DomainDesc::Finite(dom.clone()),
            DomainDesc::Finite(dom),
            CoValue::Epsilon,
            None,
            |_| Ok(CoValue::Epsilon),
        );
        let r = is_epsilon_standard(&c, 3);
        assert_eq!(r.status, Status::Fail);
        assert_eq!(r.witness.unwrap().part("y").unwrap().len(), 1);
    }

    #[test]
    fn exhaustive_witnesses_are_minimal() {
        // first projection on {0,1} is B-associative but not symmetric
        let f = sum01();
        let r = check(&f, P::BAssociative, &cfg());
        assert_eq!(r.status, Status::Fail);
        // minimal: the first string whose substitution escapes is "0 1"
        // (value 1 is fine; "1 1" maps to 2 outside the domain); the very
        // first violating instance is at s = "1 1" via escape ordering:
        // strings in (length, lex) order: "0","1","0 0","0 1","1 0","1 1".
        let w = r.witness.unwrap();
        let total = Str::cat3(
            w.part("x").unwrap(),
            w.part("y").unwrap(),
            w.part("z").unwrap(),
        );
        assert!(total <= Str::nums(&[1.0, 1.0]), "not minimal: {w}");
    }

    #[test]
    fn equivalence_suite_on_max_table_agrees_and_passes() {
        let suite = check_equivalence_suite(&max01(), &cfg());
        assert!(suite.all_agree());
        assert!(suite.findings.iter().all(|f| f.decided));
        assert_eq!(suite.status(P::BAssociative), Some(Status::Pass));
        assert_eq!(suite.status(P::BAssocFormIV), Some(Status::Pass));
    }

    #[test]
    fn equivalence_suite_on_restricted_sum_fails_in_agreement() {
        let suite = check_equivalence_suite(&sum01(), &cfg());
        assert!(suite.all_agree(), "findings: {:?}", suite.findings);
        for id in [
            P::BAssociative,
            P::BAssocSimplified,
            P::BAssocFormII,
            P::BAssocFormIII,
            P::BAssocFormIV,
            P::ArityWiseRangeIdempotent,
        ] {
            assert_eq!(suite.status(id), Some(Status::Fail), "{id}");
        }
        assert_eq!(suite.status(P::BPreassociative), Some(Status::Pass));
    }

    #[test]
    fn equivalence_suite_on_sampled_mean_agrees() {
        let suite = check_equivalence_suite(&arith_mean(), &cfg());
        assert!(suite.all_agree());
        assert_eq!(suite.status(P::BAssociative), Some(Status::Pass));
        assert_eq!(suite.status(P::BPreassociative), Some(Status::Pass));
        assert_eq!(suite.status(P::ArityWiseRangeIdempotent), Some(Status::Pass));
    }

    #[test]
    fn awqri_distinguishes_wide_codomain_tables() {
        // 2·max on {0,1} has ran(δ_n) = ran(F_n) = {0,2} at every arity…
        let doubled = VarFn::closed(
            "2max",
            DomainDesc::reals(),
            DomainDesc::reals(),
            CoValue::Epsilon,
            None,
            |xs| {
                let m = xs.iter().filter_map(|v| v.as_num()).fold(f64::NEG_INFINITY, f64::max);
                Ok(CoValue::num(2.0 * m))
            },
        );
        let doubled = crate::builtins::tabulate_on(
            &doubled,
            vec![Value::num(0.0), Value::num(1.0)],
            2,
        )
        .unwrap();
        let r = check(&doubled, P::ArityWiseQuasiRangeIdempotent, &cfg());
        assert_eq!(r.status, Status::Pass, "{r}");
        // …the restricted sum is not: 1 = F(0,1) escapes ran(δ₂) = {0,2}
        let r = check(&sum01(), P::ArityWiseQuasiRangeIdempotent, &cfg());
        assert_eq!(r.status, Status::Fail, "{r}");
        // …and neither is xor, whose diagonal is constantly 0
        let dom = FiniteDomain::new(vec![Value::sym("0"), Value::sym("1")]).unwrap();
        let xor = VarFn::from_rows(
            "xor",
            dom.clone(),
            DomainDesc::Finite(dom),
            CoValue::Epsilon,
            vec![
                vec![CoValue::sym("0"), CoValue::sym("1")],
                vec![
                    CoValue::sym("0"),
                    CoValue::sym("1"),
                    CoValue::sym("1"),
                    CoValue::sym("0"),
                ],
            ],
        )
        .unwrap();
        let r = check(&xor, P::ArityWiseQuasiRangeIdempotent, &cfg());
        assert_eq!(r.status, Status::Fail);
    }

    #[test]
    fn symmetry_checks() {
        assert_eq!(check(&arith_mean(), P::Symmetric(3), &cfg()).status, Status::Pass);
        // the binary part of the z = 2 member is 2x − y: nonsymmetric
        let r = check(&m_z(2.0), P::Symmetric(2), &cfg());
        assert_eq!(r.status, Status::Fail);
    }

    #[test]
    fn monotonicity_and_continuity_heuristics() {
        assert_eq!(
            check(&geom_mean(), P::StrictlyIncreasing(2), &cfg()).status,
            Status::Pass
        );
        let step = VarFn::closed(
            "step",
            DomainDesc::reals(),
            DomainDesc::reals(),
            CoValue::Epsilon,
            None,
            |xs| {
                Ok(CoValue::num(if xs[0].as_num().unwrap() < 0.5 { 0.0 } else { 1.0 }))
            },
        );
        assert_eq!(check(&step, P::StrictlyIncreasing(1), &cfg()).status, Status::Fail);
        assert_eq!(check(&step, P::ContinuousSampled(1), &cfg()).status, Status::Fail);
        assert_eq!(
            check(&arith_mean(), P::ContinuousSampled(2), &cfg()).status,
            Status::Pass
        );
        // heuristics are undefined on finite domains
        assert_eq!(
            check(&max01(), P::ContinuousSampled(1), &cfg()).status,
            Status::Unsupported
        );
    }

    #[test]
    fn right_composition_preserves_preassociativity() {
        let maps = CompositionMaps::Right {
            inner: UnaryMap::numeric("square", |x| x * x),
            inner_domain: DomainDesc::reals(),
        };
        let out = check_composition_closure(&arith_mean(), &maps, &cfg()).unwrap();
        assert_eq!(out.report.status, Status::Pass, "{}", out.report);
    }

    #[test]
    fn left_composition_with_injection_passes() {
        let outer: Vec<UnaryMap> =
            (0..4).map(|_| UnaryMap::numeric("exp", f64::exp)).collect();
        let maps = CompositionMaps::Left {
            outer,
            outer_codomain: DomainDesc::reals(),
            injectivity_claimed: true,
        };
        let out = check_composition_closure(&sum(), &maps, &cfg()).unwrap();
        assert_eq!(out.report.status, Status::Pass, "{}", out.report);
    }

    #[test]
    fn left_composition_with_clamp_fails_honestly() {
        let outer: Vec<UnaryMap> =
            (0..4).map(|_| UnaryMap::numeric("clamp", |x| x.max(0.0))).collect();
        let maps = CompositionMaps::Left {
            outer,
            outer_codomain: DomainDesc::reals(),
            injectivity_claimed: false,
        };
        let out = check_composition_closure(&sum(), &maps, &cfg()).unwrap();
        assert_eq!(out.report.status, Status::Fail);
        let w = out.report.witness.unwrap();
        assert!(witness_reproduces(&out.composed, &w, P::BPreassociative));
        // the classic collapse: g∘sum merges (−1,−2) with (−1,1) but an
        // appended 1 separates them
        let h = out.composed;
        assert_eq!(h.eval(&Str::nums(&[-1.0, -2.0])).unwrap(), CoValue::num(0.0));
        assert_eq!(h.eval(&Str::nums(&[-1.0, 1.0])).unwrap(), CoValue::num(0.0));
        assert_eq!(h.eval(&Str::nums(&[-1.0, -2.0, 1.0])).unwrap(), CoValue::num(0.0));
        assert_eq!(h.eval(&Str::nums(&[-1.0, 1.0, 1.0])).unwrap(), CoValue::num(1.0));
    }

    #[test]
    fn left_composition_needs_enough_maps() {
        let maps = CompositionMaps::Left {
            outer: vec![UnaryMap::identity()],
            outer_codomain: DomainDesc::reals(),
            injectivity_claimed: true,
        };
        assert!(check_composition_closure(&sum(), &maps, &cfg()).is_err());
    }

    #[test]
    fn propagation_checks() {
        // symmetry propagates for the mean
        let r = check_propagation(&arith_mean(), PropagationKind::Symmetry, 2, &cfg());
        assert_eq!(r.status, Status::Pass);
        assert_eq!(r.property, P::Symmetric(3));
        // the z = 2 member is not symmetric at 2: vacuous pass
        let r = check_propagation(&m_z(2.0), PropagationKind::Symmetry, 2, &cfg());
        assert_eq!(r.status, Status::Pass);
        assert!(r.space.note.as_deref().unwrap_or("").contains("vacuous"));
        // constant tabulated operation propagates constancy
        let dom = FiniteDomain::new(vec![Value::sym("0"), Value::sym("1")]).unwrap();
        let c = VarFn::from_rows(
            "const0",
            dom.clone(),
            DomainDesc::Finite(dom),
            CoValue::Epsilon,
            vec![
                vec![CoValue::sym("0"), CoValue::sym("0")],
                vec![CoValue::sym("0"); 4],
            ],
        )
        .unwrap()
        .claim_eps_standard();
        let r = check_propagation(&c, PropagationKind::Constant, 1, &cfg());
        assert_eq!(r.status, Status::Pass, "{r}");
        assert_eq!(r.property, P::Constant(2));
        // inner symmetry at the smallest testable size
        let big = SearchConfig::default().with_max_len(5).with_samples(16);
        let r = check_propagation(&arith_mean(), PropagationKind::InnerSymmetry, 2, &big);
        assert_eq!(r.status, Status::Pass, "{r}");
    }

    #[test]
    fn determination_by_sections() {
        // trivially, a function determines itself
        let r = check_determination(&arith_mean(), &arith_mean(), &[Side::R], &cfg());
        assert_eq!(r.status, Status::Pass, "{r}");
        // the z = 1/2 member of the linear family is the arithmetic mean
        let r = check_determination(&m_z(0.5), &arith_mean(), &[Side::R], &cfg());
        assert_eq!(r.status, Status::Pass, "{r}");
        // sections that differ at arity 2 leave the hypothesis unmet
        let r = check_determination(&arith_mean(), &first_proj(), &[Side::R], &cfg());
        assert_eq!(r.status, Status::Unsupported);
        assert!(matches!(r.reason, Some(UnsupportedReason::PreconditionUnmet(_))));
        assert!(r.witness.is_some());
    }

    #[test]
    fn budget_aborts_deterministically() {
        let tiny = SearchConfig::default().with_budget(10);
        let r = check(&arith_mean(), P::BAssociative, &tiny);
        assert_eq!(r.status, Status::Unsupported);
        assert!(r.budget_exceeded());
        let again = check(&arith_mean(), P::BAssociative, &tiny);
        assert_eq!(r.space.evals, again.space.evals);
    }

    #[test]
    fn mz_passes_b_associativity_for_classic_parameters() {
        let cfg = SearchConfig::default().with_max_len(4).with_samples(32);
        for z in [-1.0, 0.3, 0.5, 1.0, 2.0] {
            let r = check(&m_z(z), P::BAssociative, &cfg);
            assert_eq!(r.status, Status::Pass, "z = {z}: {r}");
        }
    }
}

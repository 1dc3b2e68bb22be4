//! Acceptance suite: one test per criterion, each printing a pass/fail line.
//! Tolerances, search bounds, and runtime limits are pinned here.

use std::time::{Duration, Instant};

use barylab::builtins::{
    abs_mean, arith_mean, barycenter, clamped_sum, geom_mean, harm_mean, length_fn, m_z,
    mz_section_coeffs, pre_mean, product, quasi_arithmetic, sum, GeneratorSpec, Invertible,
};
use barylab::construct::{
    all_tables, enumerate_b_associative, from_sections, mz_sections, FilterFlags,
};
use barylab::factorization::{affine_identifiability, factorize, AffineVerdict, FactorError};
use barylab::{
    check, check_equivalence_suite, CoValue, DomainDesc, FiniteDomain, FiniteSpace, PropertyId,
    SearchConfig, Status, Str, Tol, Value, VarFn,
};

fn announce(criterion: u32, what: &str) {
    println!("criterion {criterion} ({what}): PASS");
}

fn assert_runtime(criterion: u32, elapsed: Duration, limit: Duration) {
    assert!(
        elapsed < limit,
        "criterion {criterion} exceeded its runtime bound: {elapsed:?} > {limit:?}"
    );
}

fn eval_num(f: &VarFn, xs: &[f64]) -> f64 {
    f.eval(&Str::nums(xs)).unwrap().as_val().unwrap().as_num().unwrap()
}

/// Re-evaluates a preassociativity witness and confirms it separates the two
/// extended strings while the bare pair is indistinguishable.
fn preassoc_witness_live(f: &VarFn, w: &barylab::Witness) -> bool {
    let x = w.part("x").unwrap();
    let y = w.part("y").unwrap();
    let y2 = w.part("y_prime").unwrap();
    let z = w.part("z").unwrap();
    y.len() == y2.len()
        && f.eval(y).unwrap() == f.eval(y2).unwrap()
        && f.eval(&Str::cat3(x, y, z)).unwrap() != f.eval(&Str::cat3(x, y2, z)).unwrap()
}

#[test]
fn criterion_1_paper_counterexamples_bit_exact() {
    let start = Instant::now();
    let cfg = SearchConfig::default().with_max_len(3);

    // clamped sum: merged pairs separate under a common extension
    let h = clamped_sum();
    assert_eq!(eval_num(&h, &[-1.0, -2.0]), 0.0);
    assert_eq!(eval_num(&h, &[-1.0, 1.0]), 0.0);
    assert_eq!(eval_num(&h, &[-1.0, -2.0, 1.0]), 0.0);
    assert_eq!(eval_num(&h, &[-1.0, 1.0, 1.0]), 1.0);
    let r = check(&h, PropertyId::BPreassociative, &cfg);
    assert_eq!(r.status, Status::Fail, "{r}");
    let w = r.witness.expect("fail carries a witness");
    assert!(preassoc_witness_live(&h, &w), "witness does not re-evaluate: {w}");
    let total =
        w.part("x").unwrap().len() + w.part("y").unwrap().len() + w.part("z").unwrap().len();
    assert!(total <= 3, "witness longer than the classic instance: {w}");

    // |mean|: ±1 are merged at length one, separated by an appended 1
    let f = abs_mean();
    assert_eq!(eval_num(&f, &[1.0]), 1.0);
    assert_eq!(eval_num(&f, &[-1.0]), 1.0);
    assert_eq!(eval_num(&f, &[1.0, 1.0]), 1.0);
    assert_eq!(eval_num(&f, &[1.0, -1.0]), 0.0);
    let r = check(&f, PropertyId::BPreassociative, &cfg);
    assert_eq!(r.status, Status::Fail, "{r}");
    let w = r.witness.expect("fail carries a witness");
    assert!(preassoc_witness_live(&f, &w));
    let total =
        w.part("x").unwrap().len() + w.part("y").unwrap().len() + w.part("z").unwrap().len();
    assert!(total <= 3, "witness longer than the classic instance: {w}");

    assert_runtime(1, start.elapsed(), Duration::from_secs(1));
    announce(1, "counterexamples reproduced bit-exactly");
}

#[test]
fn criterion_2_positive_claims_verified() {
    let start = Instant::now();
    // lengths ≤ 6, at least 10⁴ instances, tolerance 1e−9 (the default),
    // budget raised to accommodate the bucket searches
    let cfg = SearchConfig::default()
        .with_max_len(6)
        .with_samples(200)
        .with_budget(100_000_000);
    assert_eq!(cfg.tol, Tol { rel: 1e-9, abs: 1e-12 });

    let mut b_assoc: Vec<VarFn> = vec![arith_mean(), geom_mean(), harm_mean()];
    for z in [-1.0, 0.3, 0.5, 1.0, 2.0] {
        b_assoc.push(m_z(z));
    }
    b_assoc.push(barycenter(2).unwrap());
    for f in &b_assoc {
        let r = check(f, PropertyId::BAssociative, &cfg);
        assert_eq!(r.status, Status::Pass, "{}: {r}", f.name());
        assert!(
            r.space.instances >= 10_000,
            "{}: only {} instances",
            f.name(),
            r.space.instances
        );
    }
    for f in [sum(), product(), length_fn()] {
        let r = check(&f, PropertyId::BPreassociative, &cfg);
        assert_eq!(r.status, Status::Pass, "{}: {r}", f.name());
    }
    assert_runtime(2, start.elapsed(), Duration::from_secs(30));
    announce(2, "positive claims verified on sampled spaces");
}

#[test]
fn criterion_3_equivalence_theorem_agreement() {
    let start = Instant::now();
    let domain = FiniteDomain::indexed(2);

    // every ε-standard table at arity ≤ 2
    let cfg2 = SearchConfig::default().with_max_len(2);
    let population = all_tables(&domain, 2, false).unwrap();
    assert_eq!(population.len(), 64);
    for f in &population {
        let suite = check_equivalence_suite(f, &cfg2);
        assert!(suite.findings.iter().all(|fd| fd.decided), "{}", f.name());
        assert!(
            suite.all_agree(),
            "{}: disagreement {:?}",
            f.name(),
            suite.findings
        );
    }

    // a 500-table deterministic random sample at arity ≤ 3
    let cfg3 = SearchConfig::default().with_max_len(3);
    let sample =
        barylab::construct::random_epsilon_standard_tables(&domain, 3, 500, cfg3.seed);
    assert_eq!(sample.len(), 500);
    for f in &sample {
        let suite = check_equivalence_suite(f, &cfg3);
        assert!(suite.findings.iter().all(|fd| fd.decided), "{}", f.name());
        assert!(
            suite.all_agree(),
            "{}: disagreement {:?}",
            f.name(),
            suite.findings
        );
    }
    assert_runtime(3, start.elapsed(), Duration::from_secs(120));
    announce(3, "equivalence theorems agree with zero disagreements");
}

#[test]
fn criterion_4_factorization_round_trip() {
    let start = Instant::now();
    let domain = FiniteDomain::indexed(2);

    // population 1: every ε-standard table at arity ≤ 3;
    // population 2: every table into X ∪ {ε} at arity ≤ 2
    let populations: Vec<(Vec<VarFn>, usize)> = vec![
        (all_tables(&domain, 3, false).unwrap(), 3),
        (all_tables(&domain, 2, true).unwrap(), 2),
    ];
    let mut eligible_total = 0u64;
    for (population, max_len) in populations {
        let cfg = SearchConfig::default().with_max_len(max_len);
        let space = FiniteSpace::new(domain.clone());
        for f in &population {
            let eligible = check(f, PropertyId::BPreassociative, &cfg).passed()
                && check(f, PropertyId::ArityWiseQuasiRangeIdempotent, &cfg).passed();
            match factorize(f, &cfg) {
                Ok(result) => {
                    assert!(eligible, "{}: factorized but gates say ineligible", f.name());
                    eligible_total += 1;
                    assert!(
                        result.checks.h_b_associative.passed(),
                        "{}: inner factor not B-associative",
                        f.name()
                    );
                    assert!(result.checks.h_epsilon_standard.passed());
                    assert!(result.checks.outer_injective.iter().all(|b| *b));
                    assert!(result.checks.outer_inverse_quasi.iter().all(|b| *b));
                    assert!(result.checks.reconstruction_ok);
                    for s in space.strings_upto(max_len) {
                        let fv = f.eval(&s).unwrap();
                        let hv = result.h.eval(&s).unwrap();
                        assert_eq!(
                            result.outer[s.len() - 1].apply(&hv).unwrap(),
                            fv,
                            "{}: recomposition differs at {s}",
                            f.name()
                        );
                    }
                }
                Err(
                    FactorError::NotBPreassociative { .. }
                    | FactorError::NotQuasiRangeIdempotent { .. },
                ) => {
                    assert!(!eligible, "{}: eligible but factorization refused", f.name());
                }
                Err(other) => panic!("{}: unexpected error {other}", f.name()),
            }
        }
    }
    assert!(eligible_total > 0, "the populations contain eligible tables");

    // numeric spot checks at reconstruction tolerance 1e−12 (relative)
    let tight = Tol { rel: 1e-12, abs: 1e-15 };
    let cfg = SearchConfig::default().with_max_len(4);
    let grid = [0.25, 0.5, 1.0, 2.0, 3.0, 4.0];

    let result = factorize(&sum(), &cfg).unwrap();
    assert!(result.checks.all_ok());
    let mean = arith_mean();
    for a in grid {
        for b in grid {
            let h = eval_num(&result.h, &[a, b]);
            assert!(tight.num_eq(h, eval_num(&mean, &[a, b])), "H(sum) is not the mean");
            for (n, outer) in result.outer.iter().enumerate() {
                let got = outer.apply(&CoValue::num(a)).unwrap();
                assert!(
                    got.approx_eq(&CoValue::num((n + 1) as f64 * a), tight),
                    "outer map of sum at arity {} is not n·x",
                    n + 1
                );
            }
        }
    }

    let result = factorize(&product(), &cfg).unwrap();
    assert!(result.checks.all_ok());
    let geo = geom_mean();
    for a in grid {
        for b in grid {
            let h = eval_num(&result.h, &[a, b]);
            assert!(
                tight.num_eq(h, eval_num(&geo, &[a, b])),
                "H(product) is not the geometric mean: {h}"
            );
        }
    }
    for (n, outer) in result.outer.iter().enumerate() {
        for a in grid {
            let got = outer.apply(&CoValue::num(a)).unwrap();
            assert!(
                got.approx_eq(&CoValue::num(a.powi((n + 1) as i32)), tight),
                "outer map of product at arity {} is not x^n",
                n + 1
            );
        }
    }
    assert_runtime(4, start.elapsed(), Duration::from_secs(120));
    announce(4, "factorization round-trips on all eligible tables");
}

#[test]
fn criterion_5_section_reconstruction() {
    let start = Instant::now();
    let tol = Tol::DEFAULT; // 1e−9 relative
    let cfg = SearchConfig::default().with_max_len(5);
    let grid = [-2.0, -0.5, 0.5, 1.0, 2.0, 3.0];
    for z in [0.5, 2.0] {
        let spec = mz_sections(z, 5);
        let built = from_sections(&spec, 5, &cfg)
            .unwrap_or_else(|e| panic!("construction failed at z = {z}: {e}"));
        let direct = m_z(z);
        for n in 1..=5usize {
            let mut odometer = vec![0usize; n];
            loop {
                let xs: Vec<f64> = odometer.iter().map(|&i| grid[i]).collect();
                let got = eval_num(&built, &xs);
                let want = eval_num(&direct, &xs);
                assert!(
                    tol.num_eq(got, want),
                    "z = {z}, {xs:?}: built {got} vs direct {want}"
                );
                let mut pos = n;
                let done = loop {
                    if pos == 0 {
                        break true;
                    }
                    pos -= 1;
                    odometer[pos] += 1;
                    if odometer[pos] < grid.len() {
                        break false;
                    }
                    odometer[pos] = 0;
                };
                if done {
                    break;
                }
            }
        }
    }

    // the coefficients sum to one exactly, and satisfy the recurrence system
    // a_{k+1}·b_i = a_i·b_{i−1}·(1 − Π_{j≤k+1} a_j) within 1e−9
    for z in [0.5, 2.0, -1.0, 0.3] {
        let mut a = vec![1.0f64]; // a₁ = 1 (identity unary part)
        let mut b = vec![1.0f64]; // b₁ = 1 by convention
        for k in 1..=5 {
            let (ak1, bk1) = mz_section_coeffs(z, k);
            assert_eq!(ak1 + bk1, 1.0, "z = {z}, k = {k}: coefficients must sum to 1 exactly");
            a.push(ak1);
            b.push(bk1);
        }
        for k in 2..=5usize {
            let prod: f64 = a[..=k].iter().product();
            for i in 2..=k + 1 {
                let lhs = a[k] * b[i - 1];
                let rhs = a[i - 1] * b[i - 2] * (1.0 - prod);
                assert!(
                    tol.num_eq(lhs, rhs),
                    "z = {z}, k = {k}, i = {i}: {lhs} vs {rhs}"
                );
            }
        }
    }
    assert_runtime(5, start.elapsed(), Duration::from_secs(30));
    announce(5, "section data reconstructs the linear family");
}

#[test]
fn criterion_6_enumeration_matches_oracle() {
    let start = Instant::now();
    let domain = FiniteDomain::indexed(2);
    let cfg = SearchConfig::default().with_max_len(2);

    // unary census: 3 retractions among the 4 unary maps
    let unary = enumerate_b_associative(&domain, 1, FilterFlags::default(), &cfg).unwrap();
    assert_eq!(unary.census.total, 4);
    assert_eq!(unary.census.b_associative, 3);

    // arity-2 set equality against the brute-force filter
    let enumerated = enumerate_b_associative(&domain, 2, FilterFlags::default(), &cfg).unwrap();
    let all = all_tables(&domain, 2, false).unwrap();
    let fingerprint = |f: &VarFn| -> Vec<Vec<CoValue>> {
        let t = f.table().unwrap();
        (1..=t.max_arity()).map(|n| t.outputs(n).to_vec()).collect()
    };
    let mut brute: Vec<_> = all
        .iter()
        .filter(|f| check(f, PropertyId::BAssociative, &cfg).passed())
        .map(fingerprint)
        .collect();
    let mut ours: Vec<_> = enumerated.functions.iter().map(fingerprint).collect();
    brute.sort();
    ours.sort();
    assert_eq!(ours, brute, "enumeration and oracle disagree");
    assert_eq!(enumerated.census.b_associative as usize, brute.len());
    assert_eq!(enumerated.census.total, 64);
    assert_runtime(6, start.elapsed(), Duration::from_secs(30));
    announce(6, "enumeration agrees with the brute-force oracle");
}

#[test]
fn criterion_7_quasi_arithmetic_direction() {
    let start = Instant::now();
    let cfg = SearchConfig::default().with_max_len(4).with_samples(64);

    // the log-generated mean satisfies all axioms of the characterization
    let qa = quasi_arithmetic(&GeneratorSpec::mean(
        DomainDesc::positive_reals(),
        Invertible::natural_log(),
    ))
    .unwrap();
    for n in 2..=4 {
        assert!(check(&qa, PropertyId::Symmetric(n), &cfg).passed(), "symmetry at {n}");
        assert!(
            check(&qa, PropertyId::StrictlyIncreasing(n), &cfg).passed(),
            "monotonicity at {n}"
        );
    }
    assert!(check(&qa, PropertyId::Idempotent, &cfg).passed());
    assert!(check(&qa, PropertyId::BAssociative, &cfg).passed());

    // the sum as a pre-mean is B-preassociative, and its representation is
    // recovered by factorization (the criterion-4 sum case re-asserted)
    let pm = pre_mean(&GeneratorSpec::sum_premean()).unwrap();
    assert!(check(&pm, PropertyId::BPreassociative, &cfg).passed());
    let result = factorize(&pm, &cfg).unwrap();
    assert!(result.checks.all_ok());
    let tight = Tol { rel: 1e-12, abs: 1e-15 };
    assert!(tight.num_eq(eval_num(&result.h, &[1.0, 3.0]), 2.0));

    // a deliberately broken mixed-generator function: arithmetic mean at
    // even arities, geometric at odd ones — not B-preassociative
    let mixed = VarFn::closed(
        "mixed_mean",
        DomainDesc::positive_reals(),
        DomainDesc::positive_reals(),
        CoValue::Epsilon,
        None,
        |xs| {
            let n = xs.len() as f64;
            let v = if xs.len() % 2 == 0 {
                xs.iter().filter_map(|v| v.as_num()).sum::<f64>() / n
            } else {
                (xs.iter().filter_map(|v| v.as_num()).map(f64::ln).sum::<f64>() / n).exp()
            };
            Ok(CoValue::num(v))
        },
    )
    .claim_eps_standard();
    let r = check(&mixed, PropertyId::BPreassociative, &cfg);
    assert_eq!(r.status, Status::Fail, "{r}");
    let w = r.witness.expect("witness");
    assert!(preassoc_witness_live(&mixed, &w), "mixed-generator witness is stale: {w}");

    assert_runtime(7, start.elapsed(), Duration::from_secs(30));
    announce(7, "quasi-arithmetic mean and pre-mean direction checks");
}

#[test]
fn criterion_8_affine_identifiability() {
    let start = Instant::now();
    let cfg = SearchConfig::default();

    // the pair (f, 2f + 3) is equivalent with r = 2, s = 3
    let base = GeneratorSpec::mean(DomainDesc::positive_reals(), Invertible::natural_log());
    let moved = base.affinely_transformed(2.0, 3.0);
    match affine_identifiability(&base, &moved, &cfg).unwrap() {
        AffineVerdict::Equivalent { r, s, max_fit_error } => {
            assert!((r - 2.0).abs() <= 1e-9, "r = {r}");
            assert!((s - 3.0).abs() <= 1e-9, "s = {s}");
            assert!(max_fit_error <= 1e-9, "fit error {max_fit_error}");
        }
        AffineVerdict::Distinct { witness } => panic!("expected equivalence, got {witness:?}"),
    }

    // (id, cube) is distinct, witnessed by a Jensen-equality violation
    let id = GeneratorSpec::mean(DomainDesc::reals(), Invertible::identity());
    let cube = GeneratorSpec::mean(DomainDesc::reals(), Invertible::cube());
    match affine_identifiability(&id, &cube, &cfg).unwrap() {
        AffineVerdict::Distinct { witness } => {
            let h = |z: f64| z * z * z;
            let mid = (witness.at + witness.partner) / 2.0;
            assert!(
                !Tol::DEFAULT.num_eq(h(mid), (h(witness.at) + h(witness.partner)) / 2.0),
                "Jensen witness does not re-evaluate: {witness:?}"
            );
        }
        AffineVerdict::Equivalent { .. } => panic!("cube transfer map is not affine"),
    }
    assert_runtime(8, start.elapsed(), Duration::from_secs(30));
    announce(8, "generator pairs identified up to affine transformations");
}

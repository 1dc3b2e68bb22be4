//! Sampled checkers for numeric and vector domains. Verdicts are honest about
//! their mode: a pass means no violation was found on the seeded sample, not
//! exhaustive truth. Counterexample searches lean on a lattice of simple
//! values so that equal-value string pairs actually occur.

use std::collections::BTreeMap;

use super::{sort_canonical, Brk, Ctx};
use crate::domain::DomainDesc;
use crate::report::{PropertyId, UnsupportedReason, Witness};
use crate::sample::{lattice_pool, SearchConfig, Sampler};
use crate::string::{repeat_co, Str};
use crate::value::{CoValue, Value};

const LATTICE_STRING_CAP: usize = 4096;
const PAIR_CAP: usize = 256;
const CONTEXT_CAP: usize = 24;

pub(super) fn run(
    ctx: &mut Ctx,
    prop: PropertyId,
    cap: usize,
    cfg: &SearchConfig,
) -> Result<(), Brk> {
    let domain = ctx.f.domain().clone();
    let mut sampler = Sampler::new(&domain, cfg.seed);
    match prop {
        PropertyId::BAssociative => b_assoc(ctx, &mut sampler, cap, None, cfg.samples),
        PropertyId::BAssocSimplified => b_assoc(ctx, &mut sampler, cap, Some(1), cfg.samples),
        PropertyId::BAssocFormII => form_ii(ctx, &mut sampler, cap, cfg.samples),
        PropertyId::BAssocFormIII => form_iii(ctx, &mut sampler, cap, cfg.samples),
        PropertyId::BAssocFormIV => form_iv(ctx, &mut sampler, cap, cfg.samples),
        PropertyId::BPreassociative => b_preassoc(ctx, &domain, cap, None),
        PropertyId::BPreassocSimplified => b_preassoc(ctx, &domain, cap, Some(1)),
        PropertyId::BPreassocTwoEq => b_preassoc_two_eq(ctx, &domain, cap),
        PropertyId::Preassociative => preassoc(ctx, &domain, cap),
        PropertyId::Associative => associative(ctx, &mut sampler, cap, cfg.samples),
        PropertyId::Idempotent => idempotent(ctx, &domain, &mut sampler, cap, cfg.samples),
        PropertyId::ArityWiseRangeIdempotent => awri(ctx, &mut sampler, cap, cfg.samples),
        PropertyId::ArityWiseQuasiRangeIdempotent => awqri(ctx, &mut sampler, cap, cfg.samples),
        PropertyId::Symmetric(n) => symmetric(ctx, &mut sampler, cap, n, cfg.samples),
        PropertyId::Constant(n) => constant(ctx, &mut sampler, cap, n, cfg.samples),
        PropertyId::StrictlyIncreasing(n) => {
            strictly_increasing(ctx, &domain, &mut sampler, cap, n, cfg.samples)
        }
        PropertyId::ContinuousSampled(n) => {
            continuous(ctx, &domain, &mut sampler, cap, n, cfg.samples)
        }
        PropertyId::EpsilonStandard => epsilon_standard(ctx, &mut sampler, cap, cfg.samples),
        PropertyId::InnerSymmetric(_) | PropertyId::Determination => {
            Err(Brk::Stop(UnsupportedReason::Incompatible(
                "derived check; use its dedicated entry point".into(),
            )))
        }
    }
}

fn check_arity(n: usize, cap: usize) -> Result<(), Brk> {
    if n == 0 || n > cap {
        return Err(Brk::Stop(UnsupportedReason::Incompatible(format!(
            "arity {n} outside the checkable range 1..={cap}"
        ))));
    }
    Ok(())
}

fn escape_note(rhs: &Option<CoValue>) -> Option<String> {
    if rhs.is_none() {
        Some("substituted output left the domain; instance undefined".into())
    } else {
        None
    }
}

/// Lattice product strings of a fixed length in lexicographic order, capped.
fn lattice_strings(pool: &[Value], len: usize, cap: usize) -> Vec<Str> {
    if len == 0 {
        return vec![Str::empty()];
    }
    let mut out = Vec::new();
    let mut odometer = vec![0usize; len];
    loop {
        out.push(Str::from(
            odometer.iter().map(|&i| pool[i].clone()).collect::<Vec<_>>(),
        ));
        if out.len() >= cap {
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

fn b_assoc(
    ctx: &mut Ctx,
    sampler: &mut Sampler,
    cap: usize,
    xz_cap: Option<usize>,
    samples: usize,
) -> Result<(), Brk> {
    for n in 1..=cap {
        for i in 0..n {
            for j in 1..=(n - i) {
                let k = n - i - j;
                if let Some(limit) = xz_cap {
                    if i + k > limit {
                        continue;
                    }
                }
                for _ in 0..samples {
                    ctx.count_instance();
                    let x = sampler.string(i);
                    let y = sampler.string(j);
                    let z = sampler.string(k);
                    let s = Str::cat3(&x, &y, &z);
                    let fs = ctx.eval(&s)?;
                    let fy = ctx.eval(&y)?;
                    let mid = Str::cat3(&x, &repeat_co(&fy, j), &z);
                    let rhs = ctx.eval_composed(&mid)?;
                    let equal = matches!(&rhs, Some(v) if v.approx_eq(&fs, ctx.tol));
                    if !equal {
                        let note = escape_note(&rhs);
                        return Err(Brk::Fail(
                            Witness { parts: vec![("x", x), ("y", y), ("z", z)], lhs: fs, rhs },
                            note,
                        ));
                    }
                }
            }
        }
    }
    Ok(())
}

fn form_ii(ctx: &mut Ctx, sampler: &mut Sampler, cap: usize, samples: usize) -> Result<(), Brk> {
    for n in 1..=cap {
        for _ in 0..samples {
            let s = sampler.string(n);
            let fs = ctx.eval(&s)?;
            for i in 0..=n {
                for j in 1..=(n - i) {
                    ctx.count_instance();
                    let y = s.sub(i, i + j);
                    let fy = ctx.eval(&y)?;
                    let mid = Str::cat3(&s.sub(0, i), &repeat_co(&fy, j), &s.sub(i + j, n));
                    let rhs = ctx.eval_composed(&mid)?;
                    let equal = matches!(&rhs, Some(v) if v.approx_eq(&fs, ctx.tol));
                    if !equal {
                        let note = escape_note(&rhs);
                        return Err(Brk::Fail(
                            Witness {
                                parts: vec![
                                    ("x", s.sub(0, i)),
                                    ("y", y),
                                    ("z", s.sub(i + j, n)),
                                    ("x_prime", s.clone()),
                                    ("y_prime", Str::empty()),
                                    ("z_prime", Str::empty()),
                                ],
                                lhs: fs,
                                rhs,
                            },
                            note,
                        ));
                    }
                }
            }
        }
    }
    Ok(())
}

fn form_iii(ctx: &mut Ctx, sampler: &mut Sampler, cap: usize, samples: usize) -> Result<(), Brk> {
    for n in 1..=cap {
        for _ in 0..samples {
            let s = sampler.string(n);
            for i in 0..=n {
                for j in 0..=(n - i) {
                    ctx.count_instance();
                    let xy = s.sub(0, i + j);
                    let yz = s.sub(i, n);
                    let fxy = ctx.eval(&xy)?;
                    let fyz = ctx.eval(&yz)?;
                    let lhs_str = repeat_co(&fxy, i + j).concat(&s.sub(i + j, n));
                    let rhs_str = s.sub(0, i).concat(&repeat_co(&fyz, n - i));
                    let lhs = ctx.eval_composed(&lhs_str)?;
                    let rhs = ctx.eval_composed(&rhs_str)?;
                    let equal = match (&lhs, &rhs) {
                        (Some(a), Some(b)) => a.approx_eq(b, ctx.tol),
                        _ => false,
                    };
                    if !equal {
                        let note = if lhs.is_none() || rhs.is_none() {
                            Some("substituted output left the domain; instance undefined".into())
                        } else {
                            None
                        };
                        return Err(Brk::Fail(
                            Witness {
                                parts: vec![
                                    ("x", s.sub(0, i)),
                                    ("y", s.sub(i, i + j)),
                                    ("z", s.sub(i + j, n)),
                                ],
                                lhs: lhs.unwrap_or(CoValue::Epsilon),
                                rhs,
                            },
                            note,
                        ));
                    }
                }
            }
        }
    }
    Ok(())
}

fn form_iv(ctx: &mut Ctx, sampler: &mut Sampler, cap: usize, samples: usize) -> Result<(), Brk> {
    for n in 1..=cap {
        for _ in 0..samples {
            let s = sampler.string(n);
            let fs = ctx.eval(&s)?;
            for i in 0..=n {
                ctx.count_instance();
                let x = s.sub(0, i);
                let y = s.sub(i, n);
                let fx = ctx.eval(&x)?;
                let fy = ctx.eval(&y)?;
                let rhs_str = repeat_co(&fx, i).concat(&repeat_co(&fy, n - i));
                let rhs = ctx.eval_composed(&rhs_str)?;
                let equal = matches!(&rhs, Some(v) if v.approx_eq(&fs, ctx.tol));
                if !equal {
                    let note = escape_note(&rhs);
                    return Err(Brk::Fail(
                        Witness { parts: vec![("x", x), ("y", y)], lhs: fs, rhs },
                        note,
                    ));
                }
            }
        }
    }
    Ok(())
}

/// Equal-value string pairs of one length, found by exact value collision on
/// the lattice product. Returned in (first, second) lexicographic order.
fn lattice_pairs(
    ctx: &mut Ctx,
    pool: &[Value],
    len: usize,
) -> Result<Vec<(Str, Str)>, Brk> {
    let mut buckets: BTreeMap<CoValue, Vec<Str>> = BTreeMap::new();
    for y in lattice_strings(pool, len, LATTICE_STRING_CAP) {
        let v = ctx.eval(&y)?;
        buckets.entry(v).or_default().push(y);
    }
    let mut pairs = Vec::new();
    for group in buckets.values() {
        for i in 0..group.len() {
            for j in (i + 1)..group.len() {
                pairs.push((group[i].clone(), group[j].clone()));
            }
        }
    }
    pairs.sort();
    pairs.truncate(PAIR_CAP);
    Ok(pairs)
}

fn context_strings(pool: &[Value], len: usize) -> Vec<Str> {
    lattice_strings(pool, len, CONTEXT_CAP)
}

fn b_preassoc(
    ctx: &mut Ctx,
    domain: &DomainDesc,
    cap: usize,
    xz_len: Option<usize>,
) -> Result<(), Brk> {
    let pool = lattice_pool(domain);
    for m in 1..cap {
        let pairs = lattice_pairs(ctx, &pool, m)?;
        for (y, y2) in &pairs {
            for t in 1..=(cap - m) {
                if let Some(required) = xz_len {
                    if t != required {
                        continue;
                    }
                }
                for xl in 0..=t {
                    let zl = t - xl;
                    for x in context_strings(&pool, xl) {
                        for z in context_strings(&pool, zl) {
                            ctx.count_instance();
                            let lhs = ctx.eval(&Str::cat3(&x, y, &z))?;
                            let rhs = ctx.eval(&Str::cat3(&x, y2, &z))?;
                            if !lhs.approx_eq(&rhs, ctx.tol) {
                                return Err(Brk::Fail(
                                    Witness {
                                        parts: vec![
                                            ("x", x),
                                            ("y", y.clone()),
                                            ("y_prime", y2.clone()),
                                            ("z", z),
                                        ],
                                        lhs,
                                        rhs: Some(rhs),
                                    },
                                    None,
                                ));
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

fn b_preassoc_two_eq(ctx: &mut Ctx, domain: &DomainDesc, cap: usize) -> Result<(), Brk> {
    let pool = lattice_pool(domain);
    for m1 in 1..cap {
        for m2 in 1..=(cap - m1) {
            let left = lattice_pairs(ctx, &pool, m1)?;
            let right = lattice_pairs(ctx, &pool, m2)?;
            // identity pairs on one side exercise the one-sided instances
            let left_ids: Vec<(Str, Str)> = lattice_strings(&pool, m1, CONTEXT_CAP)
                .into_iter()
                .map(|s| (s.clone(), s))
                .collect();
            let right_ids: Vec<(Str, Str)> = lattice_strings(&pool, m2, CONTEXT_CAP)
                .into_iter()
                .map(|s| (s.clone(), s))
                .collect();
            let lefts: Vec<&(Str, Str)> = left.iter().chain(left_ids.iter()).collect();
            let rights: Vec<&(Str, Str)> = right.iter().chain(right_ids.iter()).collect();
            for (x, x2) in &lefts {
                for (y, y2) in &rights {
                    if x == x2 && y == y2 {
                        continue;
                    }
                    ctx.count_instance();
                    let lhs = ctx.eval(&x.concat(y))?;
                    let rhs = ctx.eval(&x2.concat(y2))?;
                    if !lhs.approx_eq(&rhs, ctx.tol) {
                        return Err(Brk::Fail(
                            Witness {
                                parts: vec![
                                    ("x", x.clone()),
                                    ("x_prime", x2.clone()),
                                    ("y", y.clone()),
                                    ("y_prime", y2.clone()),
                                ],
                                lhs,
                                rhs: Some(rhs),
                            },
                            None,
                        ));
                    }
                }
            }
        }
    }
    Ok(())
}

fn preassoc(ctx: &mut Ctx, domain: &DomainDesc, cap: usize) -> Result<(), Brk> {
    let pool = lattice_pool(domain);
    let mut buckets: BTreeMap<CoValue, Vec<Str>> = BTreeMap::new();
    let empty = Str::empty();
    let v = ctx.eval(&empty)?;
    buckets.entry(v).or_default().push(empty);
    for m in 1..cap {
        for y in lattice_strings(&pool, m, LATTICE_STRING_CAP / cap.max(1)) {
            let v = ctx.eval(&y)?;
            buckets.entry(v).or_default().push(y);
        }
    }
    let mut pairs = Vec::new();
    for group in buckets.values() {
        for i in 0..group.len() {
            for j in (i + 1)..group.len() {
                pairs.push((group[i].clone(), group[j].clone()));
            }
        }
    }
    pairs.sort();
    pairs.truncate(PAIR_CAP);
    for (y, y2) in &pairs {
        let longest = y.len().max(y2.len());
        for t in 1..=(cap - longest) {
            for xl in 0..=t {
                let zl = t - xl;
                for x in context_strings(&pool, xl) {
                    for z in context_strings(&pool, zl) {
                        ctx.count_instance();
                        let lhs = ctx.eval(&Str::cat3(&x, y, &z))?;
                        let rhs = ctx.eval(&Str::cat3(&x, y2, &z))?;
                        if !lhs.approx_eq(&rhs, ctx.tol) {
                            return Err(Brk::Fail(
                                Witness {
                                    parts: vec![
                                        ("x", x),
                                        ("y", y.clone()),
                                        ("y_prime", y2.clone()),
                                        ("z", z),
                                    ],
                                    lhs,
                                    rhs: Some(rhs),
                                },
                                None,
                            ));
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

fn associative(ctx: &mut Ctx, sampler: &mut Sampler, cap: usize, samples: usize) -> Result<(), Brk> {
    for n in 1..=cap {
        for i in 0..n {
            for j in 1..=(n - i) {
                let k = n - i - j;
                for _ in 0..samples {
                    ctx.count_instance();
                    let x = sampler.string(i);
                    let y = sampler.string(j);
                    let z = sampler.string(k);
                    let s = Str::cat3(&x, &y, &z);
                    let fs = ctx.eval(&s)?;
                    let fy = ctx.eval(&y)?;
                    let mid = Str::cat3(&x, &repeat_co(&fy, 1), &z);
                    let rhs = ctx.eval_composed(&mid)?;
                    let equal = matches!(&rhs, Some(v) if v.approx_eq(&fs, ctx.tol));
                    if !equal {
                        let note = escape_note(&rhs);
                        return Err(Brk::Fail(
                            Witness { parts: vec![("x", x), ("y", y), ("z", z)], lhs: fs, rhs },
                            note,
                        ));
                    }
                }
            }
        }
    }
    Ok(())
}

fn idempotent(
    ctx: &mut Ctx,
    domain: &DomainDesc,
    sampler: &mut Sampler,
    cap: usize,
    samples: usize,
) -> Result<(), Brk> {
    let mut points = lattice_pool(domain);
    for _ in 0..samples {
        points.push(sampler.value());
    }
    for n in 1..=cap {
        for a in &points {
            ctx.count_instance();
            let s = Str::one(a.clone()).power(n);
            let v = ctx.eval(&s)?;
            let expected = CoValue::Val(a.clone());
            if !v.approx_eq(&expected, ctx.tol) {
                return Err(Brk::Fail(
                    Witness { parts: vec![("y", s)], lhs: v, rhs: Some(expected) },
                    None,
                ));
            }
        }
    }
    Ok(())
}

fn awri(ctx: &mut Ctx, sampler: &mut Sampler, cap: usize, samples: usize) -> Result<(), Brk> {
    for n in 1..=cap {
        for _ in 0..samples {
            ctx.count_instance();
            let s = sampler.string(n);
            let fs = ctx.eval(&s)?;
            let rep = repeat_co(&fs, n);
            let rhs = ctx.eval_composed(&rep)?;
            let equal = matches!(&rhs, Some(v) if v.approx_eq(&fs, ctx.tol));
            if !equal {
                let note = escape_note(&rhs);
                return Err(Brk::Fail(Witness { parts: vec![("y", s)], lhs: fs, rhs }, note));
            }
        }
    }
    Ok(())
}

/// Quasi-range-idempotence on a numeric domain needs the closed-form diagonal
/// inverse from the registry: it certifies F(x) ∈ ran(δ) by inverting δ.
fn awqri(ctx: &mut Ctx, sampler: &mut Sampler, cap: usize, samples: usize) -> Result<(), Brk> {
    let diag = match &ctx.f.meta().diag {
        Some(d) => d.clone(),
        None => {
            return Err(Brk::Stop(UnsupportedReason::Incompatible(
                "no closed-form diagonal inverse registered for this function".into(),
            )))
        }
    };
    let inv = match &diag.inv {
        Some(i) => i.clone(),
        None => {
            return Err(Brk::Stop(UnsupportedReason::Incompatible(
                "diagonal section has no registered inverse".into(),
            )))
        }
    };
    let domain = ctx.f.domain().clone();
    for n in 1..=cap {
        for _ in 0..samples {
            ctx.count_instance();
            let s = sampler.string(n);
            let v = ctx.eval(&s)?;
            let Some(num) = v.as_val().and_then(|x| x.as_num()) else {
                return Err(Brk::Stop(UnsupportedReason::Incompatible(
                    "diagonal inversion needs numeric outputs".into(),
                )));
            };
            let u = inv(n, num);
            let round_trip = (diag.fwd)(n, u);
            let ok = u.is_finite()
                && domain.contains(&Value::num(u))
                && ctx.tol.num_eq(round_trip, num);
            if !ok {
                return Err(Brk::Fail(
                    Witness { parts: vec![("y", s)], lhs: v, rhs: None },
                    Some(format!("value outside the diagonal range at arity {n}")),
                ));
            }
        }
    }
    Ok(())
}

fn symmetric(
    ctx: &mut Ctx,
    sampler: &mut Sampler,
    cap: usize,
    n: usize,
    samples: usize,
) -> Result<(), Brk> {
    check_arity(n, cap)?;
    let domain = ctx.f.domain().clone();
    for _ in 0..samples {
        ctx.count_instance();
        let s = sampler.string(n);
        let sorted = sort_canonical(&domain, &s);
        if sorted == s {
            continue;
        }
        let lhs = ctx.eval(&s)?;
        let rhs = ctx.eval(&sorted)?;
        if !lhs.approx_eq(&rhs, ctx.tol) {
            return Err(Brk::Fail(
                Witness { parts: vec![("y", s), ("y_prime", sorted)], lhs, rhs: Some(rhs) },
                None,
            ));
        }
    }
    Ok(())
}

fn constant(
    ctx: &mut Ctx,
    sampler: &mut Sampler,
    cap: usize,
    n: usize,
    samples: usize,
) -> Result<(), Brk> {
    check_arity(n, cap)?;
    let mut first: Option<(Str, CoValue)> = None;
    for _ in 0..samples {
        ctx.count_instance();
        let s = sampler.string(n);
        let v = ctx.eval(&s)?;
        match &first {
            None => first = Some((s, v)),
            Some((s0, v0)) => {
                if !v.approx_eq(v0, ctx.tol) {
                    return Err(Brk::Fail(
                        Witness {
                            parts: vec![("y", s0.clone()), ("y_prime", s)],
                            lhs: v0.clone(),
                            rhs: Some(v),
                        },
                        None,
                    ));
                }
            }
        }
    }
    Ok(())
}

/// Monotonicity on each coordinate over the sorted lattice grid; labeled
/// heuristic (a grid can only ever refute, not prove, strict monotonicity).
fn strictly_increasing(
    ctx: &mut Ctx,
    domain: &DomainDesc,
    sampler: &mut Sampler,
    cap: usize,
    n: usize,
    samples: usize,
) -> Result<(), Brk> {
    check_arity(n, cap)?;
    if !domain.is_numeric() {
        return Err(Brk::Stop(UnsupportedReason::Incompatible(
            "monotonicity grid needs a real interval domain".into(),
        )));
    }
    let grid: Vec<f64> = lattice_pool(domain)
        .iter()
        .filter_map(|v| v.as_num())
        .collect();
    let bases = 1 + samples / 8;
    for _ in 0..bases {
        let base = sampler.string(n);
        for pos in 0..n {
            let mut prev: Option<(Str, f64)> = None;
            for &g in &grid {
                ctx.count_instance();
                let mut atoms = base.atoms().to_vec();
                atoms[pos] = Value::num(g);
                let s = Str::from(atoms);
                let v = ctx.eval(&s)?;
                let Some(num) = v.as_val().and_then(|x| x.as_num()) else {
                    return Err(Brk::Stop(UnsupportedReason::Incompatible(
                        "monotonicity grid needs numeric outputs".into(),
                    )));
                };
                if let Some((s0, prev_num)) = &prev {
                    if !(num > *prev_num) {
                        return Err(Brk::Fail(
                            Witness {
                                parts: vec![("y", s0.clone()), ("y_prime", s)],
                                lhs: CoValue::num(*prev_num),
                                rhs: Some(CoValue::num(num)),
                            },
                            Some(format!("not strictly increasing in coordinate {pos}")),
                        ));
                    }
                }
                prev = Some((s, num));
            }
        }
    }
    Ok(())
}

/// Oscillation must shrink under grid refinement; an explicitly labeled
/// heuristic, since continuity is not testable from finitely many points.
fn continuous(
    ctx: &mut Ctx,
    domain: &DomainDesc,
    sampler: &mut Sampler,
    cap: usize,
    n: usize,
    samples: usize,
) -> Result<(), Brk> {
    check_arity(n, cap)?;
    let DomainDesc::RealInterval(iv) = domain else {
        return Err(Brk::Stop(UnsupportedReason::Incompatible(
            "refinement heuristic needs a real interval domain".into(),
        )));
    };
    let span = if iv.lo.is_finite() && iv.hi.is_finite() {
        iv.hi - iv.lo
    } else {
        8.0
    };
    let h = span / 8.0;
    let bases = 1 + samples / 8;
    for _ in 0..bases {
        let base = sampler.string(n);
        for pos in 0..n {
            let c = base.atoms()[pos].as_num().unwrap_or(0.0);
            if !iv.contains(c + h) {
                continue;
            }
            let eval_at = |ctx: &mut Ctx, x: f64, base: &Str| -> Result<Option<f64>, Brk> {
                let mut atoms = base.atoms().to_vec();
                atoms[pos] = Value::num(x);
                let v = ctx.eval(&Str::from(atoms))?;
                Ok(v.as_val().and_then(|u| u.as_num()))
            };
            ctx.count_instance();
            let (Some(f0), Some(f1), Some(fh)) = (
                eval_at(ctx, c, &base)?,
                eval_at(ctx, c + h, &base)?,
                eval_at(ctx, c + h / 2.0, &base)?,
            ) else {
                return Err(Brk::Stop(UnsupportedReason::Incompatible(
                    "refinement heuristic needs numeric outputs".into(),
                )));
            };
            let scale = f0.abs().max(f1.abs()).max(1.0);
            let osc = (f1 - f0).abs();
            let osc_half = (fh - f0).abs();
            if osc <= 1e-9 * scale {
                continue;
            }
            if osc_half > 0.95 * osc + 1e-9 * scale {
                let mut y = base.atoms().to_vec();
                y[pos] = Value::num(c + h / 2.0);
                let mut y2 = base.atoms().to_vec();
                y2[pos] = Value::num(c + h);
                return Err(Brk::Fail(
                    Witness {
                        parts: vec![("y", Str::from(y)), ("y_prime", Str::from(y2))],
                        lhs: CoValue::num(fh),
                        rhs: Some(CoValue::num(f1)),
                    },
                    Some("oscillation did not shrink under refinement (heuristic)".into()),
                ));
            }
        }
    }
    Ok(())
}

fn epsilon_standard(
    ctx: &mut Ctx,
    sampler: &mut Sampler,
    cap: usize,
    samples: usize,
) -> Result<(), Brk> {
    ctx.count_instance();
    let default = ctx.eval(&Str::empty())?;
    if !default.is_epsilon() {
        return Err(Brk::Fail(
            Witness {
                parts: vec![("y", Str::empty())],
                lhs: default,
                rhs: Some(CoValue::Epsilon),
            },
            Some("the default value must be ε".into()),
        ));
    }
    for n in 1..=cap {
        for _ in 0..samples {
            ctx.count_instance();
            let s = sampler.string(n);
            let v = ctx.eval(&s)?;
            if v.is_epsilon() {
                return Err(Brk::Fail(
                    Witness { parts: vec![("y", s)], lhs: v, rhs: None },
                    Some("nonempty string mapped to ε".into()),
                ));
            }
        }
    }
    Ok(())
}

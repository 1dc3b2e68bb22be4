//! Exhaustive checkers for finite domains. Instances are enumerated in
//! (length, lexicographic) order; the first violation is returned, so
//! reported witnesses are minimal for that order.

use std::collections::{BTreeMap, BTreeSet};

use super::{sort_canonical, Brk, Ctx};
use crate::domain::{DomainDesc, FiniteDomain};
use crate::report::{PropertyId, UnsupportedReason, Witness};
use crate::sample::FiniteSpace;
use crate::string::{repeat_co, Str};
use crate::value::CoValue;

pub(super) fn run(
    ctx: &mut Ctx,
    domain: &FiniteDomain,
    prop: PropertyId,
    cap: usize,
) -> Result<(), Brk> {
    let space = FiniteSpace::new(domain.clone());
    match prop {
        PropertyId::BAssociative => b_assoc(ctx, &space, cap, None),
        PropertyId::BAssocSimplified => b_assoc(ctx, &space, cap, Some(1)),
        PropertyId::BAssocFormII => form_ii(ctx, &space, cap),
        PropertyId::BAssocFormIII => form_iii(ctx, &space, cap),
        PropertyId::BAssocFormIV => form_iv(ctx, &space, cap),
        PropertyId::BPreassociative => b_preassoc(ctx, &space, cap, None),
        PropertyId::BPreassocSimplified => b_preassoc(ctx, &space, cap, Some(1)),
        PropertyId::BPreassocTwoEq => b_preassoc_two_eq(ctx, &space, cap),
        PropertyId::Preassociative => preassoc(ctx, &space, cap),
        PropertyId::Associative => associative(ctx, &space, cap),
        PropertyId::Idempotent => idempotent(ctx, &space, cap),
        PropertyId::ArityWiseRangeIdempotent => awri(ctx, &space, cap),
        PropertyId::ArityWiseQuasiRangeIdempotent => awqri(ctx, &space, cap),
        PropertyId::Symmetric(n) => symmetric(ctx, &space, cap, n),
        PropertyId::Constant(n) => constant(ctx, &space, cap, n),
        PropertyId::EpsilonStandard => epsilon_standard(ctx, &space, cap),
        PropertyId::StrictlyIncreasing(_) | PropertyId::ContinuousSampled(_) => {
            Err(Brk::Stop(UnsupportedReason::Incompatible(
                "sampled numeric heuristic; not defined on finite domains".into(),
            )))
        }
        PropertyId::InnerSymmetric(_) | PropertyId::Determination => {
            Err(Brk::Stop(UnsupportedReason::Incompatible(
                "derived check; use its dedicated entry point".into(),
            )))
        }
    }
}

fn escape_note(rhs: &Option<CoValue>) -> Option<String> {
    if rhs.is_none() {
        Some("substituted output left the domain; instance undefined".into())
    } else {
        None
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

/// F(xyz) = F(x F(y)^{|y|} z) for every split; `xz_cap` restricts |xz|.
fn b_assoc(
    ctx: &mut Ctx,
    space: &FiniteSpace,
    cap: usize,
    xz_cap: Option<usize>,
) -> Result<(), Brk> {
    for s in space.strings_upto(cap) {
        let n = s.len();
        let fs = ctx.eval(&s)?;
        for i in 0..=n {
            for j in 1..=(n - i) {
                if let Some(limit) = xz_cap {
                    if n - j > limit {
                        continue;
                    }
                }
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
                            parts: vec![("x", s.sub(0, i)), ("y", y), ("z", s.sub(i + j, n))],
                            lhs: fs,
                            rhs,
                        },
                        note,
                    ));
                }
            }
        }
    }
    Ok(())
}

/// All three-way decompositions of a string yield the same substituted value.
fn form_ii(ctx: &mut Ctx, space: &FiniteSpace, cap: usize) -> Result<(), Brk> {
    for s in space.strings_upto(cap) {
        let n = s.len();
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
    Ok(())
}

/// F(F(xy)^{|xy|} z) = F(x F(yz)^{|yz|}) for every split.
fn form_iii(ctx: &mut Ctx, space: &FiniteSpace, cap: usize) -> Result<(), Brk> {
    for s in space.strings_upto(cap) {
        let n = s.len();
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
                            parts: vec![("x", s.sub(0, i)), ("y", s.sub(i, i + j)), ("z", s.sub(i + j, n))],
                            lhs: lhs.unwrap_or(CoValue::Epsilon),
                            rhs,
                        },
                        note,
                    ));
                }
            }
        }
    }
    Ok(())
}

/// F(xy) = F(F(x)^{|x|} F(y)^{|y|}) for every two-way split.
fn form_iv(ctx: &mut Ctx, space: &FiniteSpace, cap: usize) -> Result<(), Brk> {
    for s in space.strings_upto(cap) {
        let n = s.len();
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
    Ok(())
}

fn same_length_pairs(
    ctx: &mut Ctx,
    space: &FiniteSpace,
    len: usize,
) -> Result<Vec<(Str, Str)>, Brk> {
    let mut buckets: BTreeMap<CoValue, Vec<Str>> = BTreeMap::new();
    for y in space.strings(len) {
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
    Ok(pairs)
}

/// |y| = |y'| and F(y) = F(y') imply F(xyz) = F(xy'z); `xz_len` pins |xz|.
fn b_preassoc(
    ctx: &mut Ctx,
    space: &FiniteSpace,
    cap: usize,
    xz_len: Option<usize>,
) -> Result<(), Brk> {
    for m in 1..=cap {
        let pairs = same_length_pairs(ctx, space, m)?;
        if pairs.is_empty() {
            continue;
        }
        for (y, y2) in &pairs {
            for t in 1..=(cap - m) {
                if let Some(required) = xz_len {
                    if t != required {
                        continue;
                    }
                }
                for xl in 0..=t {
                    let zl = t - xl;
                    for x in space.strings(xl) {
                        for z in space.strings(zl) {
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

/// F(x) = F(x') and F(y) = F(y') (same lengths) imply F(xy) = F(x'y').
fn b_preassoc_two_eq(ctx: &mut Ctx, space: &FiniteSpace, cap: usize) -> Result<(), Brk> {
    for m1 in 1..=cap {
        for m2 in 1..=(cap - m1).min(cap) {
            if m1 + m2 > cap {
                continue;
            }
            let left: Vec<(Str, Str)> = {
                let mut pairs = same_length_pairs(ctx, space, m1)?;
                let identities: Vec<(Str, Str)> =
                    space.strings(m1).map(|s| (s.clone(), s)).collect();
                pairs.extend(identities);
                pairs.sort();
                pairs
            };
            let right: Vec<(Str, Str)> = {
                let mut pairs = same_length_pairs(ctx, space, m2)?;
                let identities: Vec<(Str, Str)> =
                    space.strings(m2).map(|s| (s.clone(), s)).collect();
                pairs.extend(identities);
                pairs.sort();
                pairs
            };
            for (x, x2) in &left {
                for (y, y2) in &right {
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

/// Preassociativity without the equal-length restriction: F(y) = F(y')
/// implies F(xyz) = F(xy'z) whenever both sides stay within the space.
fn preassoc(ctx: &mut Ctx, space: &FiniteSpace, cap: usize) -> Result<(), Brk> {
    let mut buckets: BTreeMap<CoValue, Vec<Str>> = BTreeMap::new();
    let empty = Str::empty();
    let v = ctx.eval(&empty)?;
    buckets.entry(v).or_default().push(empty);
    for y in space.strings_upto(cap) {
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
    for (y, y2) in &pairs {
        let longest = y.len().max(y2.len());
        for t in 1..=(cap - longest) {
            for xl in 0..=t {
                let zl = t - xl;
                for x in space.strings(xl) {
                    for z in space.strings(zl) {
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

/// F(xyz) = F(x F(y) z): the substring is replaced by its single-letter value.
fn associative(ctx: &mut Ctx, space: &FiniteSpace, cap: usize) -> Result<(), Brk> {
    for s in space.strings_upto(cap) {
        let n = s.len();
        let fs = ctx.eval(&s)?;
        for i in 0..=n {
            for j in 0..=(n - i) {
                let y = s.sub(i, i + j);
                let fy = ctx.eval(&y)?;
                if j == 0 && fy.is_epsilon() {
                    continue; // substitution is the original string
                }
                let mid = Str::cat3(&s.sub(0, i), &repeat_co(&fy, 1), &s.sub(i + j, n));
                if mid.len() > cap {
                    continue; // outside the bounded space
                }
                ctx.count_instance();
                let rhs = ctx.eval_composed(&mid)?;
                let equal = matches!(&rhs, Some(v) if v.approx_eq(&fs, ctx.tol));
                if !equal {
                    let note = escape_note(&rhs);
                    return Err(Brk::Fail(
                        Witness {
                            parts: vec![("x", s.sub(0, i)), ("y", y), ("z", s.sub(i + j, n))],
                            lhs: fs,
                            rhs,
                        },
                        note,
                    ));
                }
            }
        }
    }
    Ok(())
}

/// δ at every arity is the identity on atoms.
fn idempotent(ctx: &mut Ctx, space: &FiniteSpace, cap: usize) -> Result<(), Brk> {
    for n in 1..=cap {
        for a in space.domain().atoms() {
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

/// F(F(x)^{|x|}) = F(x) on every string.
fn awri(ctx: &mut Ctx, space: &FiniteSpace, cap: usize) -> Result<(), Brk> {
    for s in space.strings_upto(cap) {
        ctx.count_instance();
        let fs = ctx.eval(&s)?;
        let rep = repeat_co(&fs, s.len());
        let rhs = ctx.eval_composed(&rep)?;
        let equal = matches!(&rhs, Some(v) if v.approx_eq(&fs, ctx.tol));
        if !equal {
            let note = escape_note(&rhs);
            return Err(Brk::Fail(
                Witness { parts: vec![("y", s)], lhs: fs, rhs },
                note,
            ));
        }
    }
    Ok(())
}

/// ran(F_n) ⊆ ran(δ_{F_n}) for every arity (the other inclusion is trivial).
fn awqri(ctx: &mut Ctx, space: &FiniteSpace, cap: usize) -> Result<(), Brk> {
    for n in 1..=cap {
        let mut range = BTreeSet::new();
        for a in space.domain().atoms() {
            range.insert(ctx.eval(&Str::one(a.clone()).power(n))?);
        }
        for s in space.strings(n) {
            ctx.count_instance();
            let v = ctx.eval(&s)?;
            if !range.contains(&v) {
                return Err(Brk::Fail(
                    Witness { parts: vec![("y", s)], lhs: v, rhs: None },
                    Some(format!("value outside the diagonal range at arity {n}")),
                ));
            }
        }
    }
    Ok(())
}

fn symmetric(ctx: &mut Ctx, space: &FiniteSpace, cap: usize, n: usize) -> Result<(), Brk> {
    check_arity(n, cap)?;
    let domain = DomainDesc::Finite(space.domain().clone());
    for s in space.strings(n) {
        ctx.count_instance();
        let sorted = sort_canonical(&domain, &s);
        if sorted == s {
            continue;
        }
        let lhs = ctx.eval(&s)?;
        let rhs = ctx.eval(&sorted)?;
        if !lhs.approx_eq(&rhs, ctx.tol) {
            return Err(Brk::Fail(
                Witness {
                    parts: vec![("y", s), ("y_prime", sorted)],
                    lhs,
                    rhs: Some(rhs),
                },
                None,
            ));
        }
    }
    Ok(())
}

fn constant(ctx: &mut Ctx, space: &FiniteSpace, cap: usize, n: usize) -> Result<(), Brk> {
    check_arity(n, cap)?;
    let mut first: Option<(Str, CoValue)> = None;
    for s in space.strings(n) {
        ctx.count_instance();
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

/// F(x) = ε exactly on x = ε.
fn epsilon_standard(ctx: &mut Ctx, space: &FiniteSpace, cap: usize) -> Result<(), Brk> {
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
    for s in space.strings_upto(cap) {
        ctx.count_instance();
        let v = ctx.eval(&s)?;
        if v.is_epsilon() {
            return Err(Brk::Fail(
                Witness { parts: vec![("y", s)], lhs: v, rhs: None },
                Some("nonempty string mapped to ε".into()),
            ));
        }
    }
    Ok(())
}

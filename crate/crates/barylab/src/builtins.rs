//! The concrete function families shipped with the library, each exposed as
//! a `VarFn` factory: means, sums and products, projections, the
//! nonsymmetric linear family M^z, quasi-arithmetic means and pre-means, and
//! the small zoo of counterexample functions.

use std::sync::Arc;

use num::rational::BigRational;
use num::{FromPrimitive, ToPrimitive, Zero};
use thiserror::Error;

use crate::domain::{DomainDesc, FiniteDomain};
use crate::value::{CoValue, Tol, Value};
use crate::varfn::{DiagForm, FnMeta, VarFn};

#[derive(Debug, Error)]
pub enum BuiltinError {
    #[error("unknown builtin name: {0}")]
    UnknownName(String),
    #[error("builtin {name} needs parameter {param}")]
    MissingParam { name: String, param: &'static str },
    #[error("generator {name} failed its inverse check at x = {at}: f⁻¹(f(x)) = {got}")]
    GeneratorNotInvertible { name: String, at: f64, got: f64 },
    #[error("generator {name} is not strictly increasing on the sample grid near x = {at}")]
    GeneratorNotIncreasing { name: String, at: f64 },
    #[error(transparent)]
    Domain(#[from] crate::domain::DomainError),
}

fn nums(xs: &[Value]) -> Vec<f64> {
    xs.iter().map(|v| v.as_num().expect("numeric domain")).collect()
}

fn closed_real(
    name: &str,
    domain: DomainDesc,
    f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
) -> VarFn {
    let codomain = domain.clone();
    VarFn::closed(name, domain, codomain, CoValue::Epsilon, None, move |xs| {
        Ok(CoValue::num(f(&nums(xs))))
    })
    .claim_eps_standard()
}

fn identity_diag() -> FnMeta {
    FnMeta {
        diag: Some(DiagForm {
            name: "id".into(),
            fwd: Arc::new(|_, x| x),
            inv: Some(Arc::new(|_, y| y)),
        }),
    }
}

/// Arithmetic mean over ℝ as an ε-standard operation.
pub fn arith_mean() -> VarFn {
    closed_real("arith_mean", DomainDesc::reals(), |xs| {
        xs.iter().sum::<f64>() / xs.len() as f64
    })
    .with_meta(identity_diag())
}

/// Geometric mean over (0, ∞).
pub fn geom_mean() -> VarFn {
    closed_real("geom_mean", DomainDesc::positive_reals(), |xs| {
        (xs.iter().map(|x| x.ln()).sum::<f64>() / xs.len() as f64).exp()
    })
    .with_meta(identity_diag())
}

/// Harmonic mean over (0, ∞).
pub fn harm_mean() -> VarFn {
    closed_real("harm_mean", DomainDesc::positive_reals(), |xs| {
        xs.len() as f64 / xs.iter().map(|x| 1.0 / x).sum::<f64>()
    })
    .with_meta(identity_diag())
}

/// Sum over ℝ; diagonal δₙ(x) = n·x.
pub fn sum() -> VarFn {
    closed_real("sum", DomainDesc::reals(), |xs| xs.iter().sum()).with_meta(FnMeta {
        diag: Some(DiagForm {
            name: "n*x".into(),
            fwd: Arc::new(|n, x| n as f64 * x),
            inv: Some(Arc::new(|n, y| y / n as f64)),
        }),
    })
}

/// Product over (0, ∞); diagonal δₙ(x) = xⁿ.
pub fn product() -> VarFn {
    closed_real("product", DomainDesc::positive_reals(), |xs| xs.iter().product()).with_meta(
        FnMeta {
            diag: Some(DiagForm {
                name: "x^n".into(),
                fwd: Arc::new(|n, x| x.powi(n as i32)),
                inv: Some(Arc::new(|n, y| y.powf(1.0 / n as f64))),
            }),
        },
    )
}

/// String length as an ℝ-valued function; F(ε) = 0.
pub fn length_fn() -> VarFn {
    VarFn::closed(
        "length_fn",
        DomainDesc::reals(),
        DomainDesc::reals(),
        CoValue::num(0.0),
        None,
        |xs| Ok(CoValue::num(xs.len() as f64)),
    )
}

pub fn first_proj() -> VarFn {
    closed_real("first_proj", DomainDesc::reals(), |xs| xs[0]).with_meta(identity_diag())
}

pub fn last_proj() -> VarFn {
    closed_real("last_proj", DomainDesc::reals(), |xs| xs[xs.len() - 1]).with_meta(identity_diag())
}

pub fn max_op() -> VarFn {
    closed_real("max_op", DomainDesc::reals(), |xs| {
        xs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    })
    .with_meta(identity_diag())
}

/// |arithmetic mean|: equal values at ±x make it non-B-preassociative.
pub fn abs_mean() -> VarFn {
    closed_real("abs_mean", DomainDesc::reals(), |xs| {
        (xs.iter().sum::<f64>() / xs.len() as f64).abs()
    })
    .with_meta(FnMeta {
        diag: Some(DiagForm {
            name: "|x|".into(),
            fwd: Arc::new(|_, x| x.abs()),
            inv: None,
        }),
    })
}

/// max(Σx, 0): the sum post-composed with a map that is not one-to-one on
/// the sum's range, which destroys B-preassociativity.
pub fn clamped_sum() -> VarFn {
    closed_real("clamped_sum", DomainDesc::reals(), |xs| {
        xs.iter().sum::<f64>().max(0.0)
    })
}

/// The operation that maps any string containing `a` to `a` and every other
/// nonempty string to ε. Both associative and B-associative, and the standard
/// example forcing an ε default.
pub fn f_a(domain: FiniteDomain, a: Value) -> Result<VarFn, BuiltinError> {
    if domain.index_of(&a).is_none() {
        return Err(BuiltinError::MissingParam { name: "f_a".into(), param: "a in domain" });
    }
    let marker = a.clone();
    Ok(VarFn::closed(
        &format!("f_a({a})"),
        DomainDesc::Finite(domain.clone()),
        DomainDesc::Finite(domain),
        CoValue::Epsilon,
        None,
        move |xs| {
            if xs.contains(&marker) {
                Ok(CoValue::Val(marker.clone()))
            } else {
                Ok(CoValue::Epsilon)
            }
        },
    ))
}

/// Uniform-mass barycenter of points in ℝ^dim. Coordinates accumulate as
/// exact rationals and are rounded once at the end, so associativity
/// identities verify exactly whenever the exact result is representable.
pub fn barycenter(dim: usize) -> Result<VarFn, BuiltinError> {
    let domain = DomainDesc::vector_space(dim)?;
    let codomain = domain.clone();
    Ok(VarFn::closed(
        &format!("barycenter({dim})"),
        domain,
        codomain,
        CoValue::Epsilon,
        None,
        move |xs| {
            let n = BigRational::from_usize(xs.len()).expect("nonzero length");
            let mut acc = vec![BigRational::zero(); dim];
            for v in xs {
                let p = v.as_point().expect("vector domain");
                for (slot, c) in acc.iter_mut().zip(p.iter()) {
                    *slot += BigRational::from_f64(*c).expect("finite coordinate");
                }
            }
            let coords: Vec<f64> = acc
                .into_iter()
                .map(|c| (c / n.clone()).to_f64().expect("finite mean"))
                .collect();
            Ok(CoValue::Val(Value::point(coords)))
        },
    )
    .claim_eps_standard()
    .with_meta(identity_diag()))
}

/// Normalizer Δₙ = Σ_{i=1}^{n} z^{n-i}(1-z)^{i-1}. Nonzero for every real z:
/// (zⁿ − (1−z)ⁿ)/(2z−1) away from z = 1/2, and n·2^{1−n} at z = 1/2.
pub fn mz_normalizer(z: f64, n: usize) -> f64 {
    (1..=n).map(|i| z.powi((n - i) as i32) * (1.0 - z).powi((i - 1) as i32)).sum()
}

/// The nonsymmetric B-associative operation with weights z^{n-i}(1-z)^{i-1}.
pub fn m_z(z: f64) -> VarFn {
    assert!(z.is_finite(), "m_z needs a finite parameter");
    closed_real(&format!("m_z({z})"), DomainDesc::reals(), move |xs| {
        let n = xs.len();
        let mut num = 0.0;
        let mut den = 0.0;
        for (i, x) in xs.iter().enumerate() {
            let w = z.powi((n - 1 - i) as i32) * (1.0 - z).powi(i as i32);
            num += w * x;
            den += w;
        }
        debug_assert!(den != 0.0, "normalizer vanished");
        num / den
    })
    .with_meta(identity_diag())
}

/// Right-section coefficients of M^z: the pair (a_{k+1}, b_{k+1}) with
/// a_{k+1} = z·Δ_k/Δ_{k+1} and b_{k+1} = 1 − a_{k+1}, so that
/// δʳ at arity k+1 is x,y ↦ a_{k+1}·x + b_{k+1}·y.
///
/// The returned pair sums to 1 exactly: after computing b = 1 − a the pair
/// is readjusted by at most one ulp (1 − b is exact whenever b lands in
/// [1/2, 2], so the readjusted sum is exactly 1).
pub fn mz_section_coeffs(z: f64, k: usize) -> (f64, f64) {
    assert!(k >= 1, "section coefficients start at k = 1");
    let mut a = z * mz_normalizer(z, k) / mz_normalizer(z, k + 1);
    let mut b = 1.0 - a;
    for _ in 0..4 {
        if a + b == 1.0 {
            break;
        }
        a = 1.0 - b;
        if a + b == 1.0 {
            break;
        }
        b = 1.0 - a;
    }
    (a, b)
}

/// A strictly monotone continuous map with an explicit inverse.
#[derive(Clone)]
pub struct Invertible {
    pub name: String,
    fwd: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    inv: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl Invertible {
    pub fn new(
        name: &str,
        fwd: impl Fn(f64) -> f64 + Send + Sync + 'static,
        inv: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Invertible {
        Invertible { name: name.into(), fwd: Arc::new(fwd), inv: Arc::new(inv) }
    }

    pub fn identity() -> Invertible {
        Invertible::new("id", |x| x, |y| y)
    }

    pub fn natural_log() -> Invertible {
        Invertible::new("ln", |x| x.ln(), |y| y.exp())
    }

    pub fn reciprocal() -> Invertible {
        Invertible::new("1/x", |x| 1.0 / x, |y| 1.0 / y)
    }

    pub fn cube() -> Invertible {
        Invertible::new("x^3", |x| x * x * x, |y| y.cbrt())
    }

    pub fn affine(r: f64, s: f64) -> Invertible {
        assert!(r != 0.0);
        Invertible::new(&format!("{r}*x+{s}"), move |x| r * x + s, move |y| (y - s) / r)
    }

    /// r·f + s, with the matching inverse.
    pub fn then_affine(&self, r: f64, s: f64) -> Invertible {
        assert!(r != 0.0);
        let f = self.fwd.clone();
        let g = self.inv.clone();
        Invertible::new(
            &format!("{r}*{}+{s}", self.name),
            move |x| r * f(x) + s,
            move |y| g((y - s) / r),
        )
    }

    pub fn fwd(&self, x: f64) -> f64 {
        (self.fwd)(x)
    }

    pub fn inv(&self, y: f64) -> f64 {
        (self.inv)(y)
    }
}

/// Generator data for quasi-arithmetic means and pre-means: an inner
/// generator f on the interval, and (for pre-means) per-arity outer
/// generators fₙ on ℝ.
#[derive(Clone)]
pub struct GeneratorSpec {
    pub interval: DomainDesc,
    pub inner: Invertible,
    pub outer: Option<Arc<dyn Fn(usize) -> Invertible + Send + Sync>>,
}

impl GeneratorSpec {
    pub fn mean(interval: DomainDesc, inner: Invertible) -> GeneratorSpec {
        GeneratorSpec { interval, inner, outer: None }
    }

    pub fn pre_mean(
        interval: DomainDesc,
        inner: Invertible,
        outer: impl Fn(usize) -> Invertible + Send + Sync + 'static,
    ) -> GeneratorSpec {
        GeneratorSpec { interval, inner, outer: Some(Arc::new(outer)) }
    }

    /// The sum function as a pre-mean: f = id, fₙ(x) = n·x.
    pub fn sum_premean() -> GeneratorSpec {
        GeneratorSpec::pre_mean(DomainDesc::reals(), Invertible::identity(), |n| {
            Invertible::new(&format!("{n}*x"), move |x| n as f64 * x, move |y| y / n as f64)
        })
    }

    /// The product function as a pre-mean: f = ln, fₙ(x) = exp(n·x).
    pub fn product_premean() -> GeneratorSpec {
        GeneratorSpec::pre_mean(DomainDesc::positive_reals(), Invertible::natural_log(), |n| {
            Invertible::new(
                &format!("exp({n}*x)"),
                move |x| (n as f64 * x).exp(),
                move |y| y.ln() / n as f64,
            )
        })
    }

    /// Same induced functions as `self` with generators transformed by
    /// g = r·f + s and gₙ(x) = fₙ((x − s)/r).
    pub fn affinely_transformed(&self, r: f64, s: f64) -> GeneratorSpec {
        let inner = self.inner.then_affine(r, s);
        match &self.outer {
            None => {
                // keep a quasi-arithmetic mean a mean: fₙ = f⁻¹ tracks the inner map
                GeneratorSpec { interval: self.interval.clone(), inner, outer: None }
            }
            Some(outer) => {
                let outer = outer.clone();
                GeneratorSpec {
                    interval: self.interval.clone(),
                    inner,
                    outer: Some(Arc::new(move |n| {
                        let base = outer(n);
                        let f = move |x: f64| base.fwd((x - s) / r);
                        let binv = outer(n);
                        let g = move |y: f64| r * binv.inv(y) + s;
                        Invertible::new(&format!("f_{n}((x-{s})/{r})"), f, g)
                    })),
                }
            }
        }
    }
}

fn validation_grid(interval: &DomainDesc) -> Vec<f64> {
    crate::sample::lattice_pool(interval)
        .iter()
        .filter_map(|v| v.as_num())
        .collect()
}

fn validate_generator(name: &str, g: &Invertible, grid: &[f64]) -> Result<(), BuiltinError> {
    let tol = Tol::DEFAULT;
    for &x in grid {
        let round = g.inv(g.fwd(x));
        if !tol.num_eq(round, x) {
            return Err(BuiltinError::GeneratorNotInvertible {
                name: name.into(),
                at: x,
                got: round,
            });
        }
    }
    let mut sorted = grid.to_vec();
    sorted.sort_by(f64::total_cmp);
    for w in sorted.windows(2) {
        if g.fwd(w[0]) == g.fwd(w[1]) {
            return Err(BuiltinError::GeneratorNotIncreasing { name: name.into(), at: w[0] });
        }
    }
    Ok(())
}

/// Quasi-arithmetic mean f⁻¹((1/n)·Σ f(xᵢ)): ε-standard and idempotent by
/// construction.
pub fn quasi_arithmetic(g: &GeneratorSpec) -> Result<VarFn, BuiltinError> {
    let grid = validation_grid(&g.interval);
    validate_generator(&g.inner.name, &g.inner, &grid)?;
    let f = g.inner.clone();
    Ok(VarFn::closed(
        &format!("quasi_arithmetic({})", f.name),
        g.interval.clone(),
        g.interval.clone(),
        CoValue::Epsilon,
        None,
        move |xs| {
            let mean = xs.iter().map(|v| f.fwd(v.as_num().expect("numeric"))).sum::<f64>()
                / xs.len() as f64;
            Ok(CoValue::num(f.inv(mean)))
        },
    )
    .claim_eps_standard()
    .with_meta(identity_diag()))
}

/// Quasi-arithmetic pre-mean fₙ((1/n)·Σ f(xᵢ)): generally not idempotent.
/// Its diagonal δₙ = fₙ ∘ f is registered with an explicit inverse so the
/// numeric factorization path applies.
pub fn pre_mean(g: &GeneratorSpec) -> Result<VarFn, BuiltinError> {
    let outer = g.outer.clone().ok_or(BuiltinError::MissingParam {
        name: "pre_mean".into(),
        param: "outer generators f_n",
    })?;
    let grid = validation_grid(&g.interval);
    validate_generator(&g.inner.name, &g.inner, &grid)?;
    for n in [1usize, 2, 3] {
        let f_n = outer(n);
        let outer_grid: Vec<f64> = grid.iter().map(|&x| g.inner.fwd(x)).collect();
        validate_generator(&f_n.name, &f_n, &outer_grid)?;
    }
    let inner = g.inner.clone();
    let inner_meta = g.inner.clone();
    let outer_eval = outer.clone();
    let outer_fwd = outer.clone();
    let outer_inv = outer;
    Ok(VarFn::closed(
        &format!("pre_mean({}, f_n)", inner.name),
        g.interval.clone(),
        DomainDesc::reals(),
        CoValue::Epsilon,
        None,
        move |xs| {
            let mean = xs
                .iter()
                .map(|v| inner.fwd(v.as_num().expect("numeric")))
                .sum::<f64>()
                / xs.len() as f64;
            Ok(CoValue::num(outer_eval(xs.len()).fwd(mean)))
        },
    )
    .with_meta(FnMeta {
        diag: Some(DiagForm {
            name: "f_n∘f".into(),
            fwd: Arc::new(move |n, x| outer_fwd(n).fwd(inner_meta.fwd(x))),
            inv: {
                let inner = g.inner.clone();
                Some(Arc::new(move |n, y| inner.inv(outer_inv(n).inv(y))))
            },
        }),
    }))
}

/// Parameters for builtin lookup by name.
#[derive(Clone, Debug, Default)]
pub struct BuiltinParams {
    pub z: Option<f64>,
    pub a: Option<Value>,
    pub atoms: Option<Vec<Value>>,
    pub dim: Option<usize>,
}

/// The CLI/name registry of builtin functions.
pub fn named_builtin(name: &str, params: &BuiltinParams) -> Result<VarFn, BuiltinError> {
    match name {
        "arith_mean" => Ok(arith_mean()),
        "geom_mean" => Ok(geom_mean()),
        "harm_mean" => Ok(harm_mean()),
        "sum" => Ok(sum()),
        "product" => Ok(product()),
        "length_fn" => Ok(length_fn()),
        "first_proj" => Ok(first_proj()),
        "last_proj" => Ok(last_proj()),
        "max_op" => Ok(max_op()),
        "abs_mean" => Ok(abs_mean()),
        "clamped_sum" => Ok(clamped_sum()),
        "f_a" => {
            let a = params.a.clone().ok_or(BuiltinError::MissingParam {
                name: name.into(),
                param: "a",
            })?;
            let atoms = params
                .atoms
                .clone()
                .unwrap_or_else(|| vec![Value::sym("0"), Value::sym("1")]);
            Ok(f_a(FiniteDomain::new(atoms)?, a)?)
        }
        "barycenter" => {
            let dim = params.dim.ok_or(BuiltinError::MissingParam {
                name: name.into(),
                param: "dim",
            })?;
            barycenter(dim)
        }
        "m_z" => {
            let z = params.z.ok_or(BuiltinError::MissingParam {
                name: name.into(),
                param: "z",
            })?;
            Ok(m_z(z))
        }
        "quasi_arithmetic_ln" => {
            quasi_arithmetic(&GeneratorSpec::mean(DomainDesc::positive_reals(), Invertible::natural_log()))
        }
        other => Err(BuiltinError::UnknownName(other.into())),
    }
}

/// Tabulates a closed-form function on an explicit finite atom set. The
/// codomain becomes the sorted set of observed outputs.
pub fn tabulate_on(
    f: &VarFn,
    atoms: Vec<Value>,
    max_arity: usize,
) -> Result<VarFn, crate::varfn::TableError> {
    let domain = FiniteDomain::new(atoms)?;
    let space = crate::sample::FiniteSpace::new(domain.clone());
    let mut entries = Vec::new();
    let mut outputs = Vec::new();
    for s in space.strings_upto(max_arity) {
        let out = f.eval(&s).map_err(|_| {
            crate::varfn::TableError::InputOutsideDomain(s.to_string())
        })?;
        if let CoValue::Val(v) = &out {
            if !outputs.contains(v) {
                outputs.push(v.clone());
            }
        }
        entries.push((s, out));
    }
    outputs.sort();
    let default = f.default().clone();
    if let CoValue::Val(v) = &default {
        if !outputs.contains(v) {
            outputs.push(v.clone());
            outputs.sort();
        }
    }
    let codomain = DomainDesc::Finite(FiniteDomain::new(outputs)?);
    VarFn::from_table(
        &format!("{}|tab", f.name()),
        domain,
        codomain,
        max_arity,
        default,
        &entries,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::string::Str;
    use crate::value::Tol;

    fn eval_num(f: &VarFn, xs: &[f64]) -> f64 {
        f.eval(&Str::nums(xs)).unwrap().as_val().unwrap().as_num().unwrap()
    }

    #[test]
    fn eval_examples() {
        assert_eq!(eval_num(&sum(), &[1.0, 2.0, 3.0]), 6.0);
        assert_eq!(length_fn().eval(&Str::empty()).unwrap(), CoValue::num(0.0));
        assert_eq!(eval_num(&arith_mean(), &[1.0, 2.0, 3.0]), 2.0);
    }

    #[test]
    fn diagonal_sections_of_builtins() {
        // the mean fixes constant strings; the sum scales them
        let s = arith_mean().sections(3).unwrap();
        assert_eq!(s.delta(&Value::num(5.0)).unwrap(), CoValue::num(5.0));
        let s = sum().sections(3).unwrap();
        assert_eq!(s.delta(&Value::num(2.0)).unwrap(), CoValue::num(6.0));
    }

    #[test]
    fn f_a_maps_avoiding_strings_to_epsilon() {
        let dom = FiniteDomain::new(vec![Value::sym("0"), Value::sym("1")]).unwrap();
        let f = f_a(dom, Value::sym("1")).unwrap();
        assert_eq!(f.eval(&Str::syms(&["0", "0"])).unwrap(), CoValue::Epsilon);
        assert_eq!(f.eval(&Str::syms(&["0", "1"])).unwrap(), CoValue::sym("1"));
        assert_eq!(f.eval(&Str::empty()).unwrap(), CoValue::Epsilon);
    }

    #[test]
    fn quasi_arithmetic_means() {
        let id = quasi_arithmetic(&GeneratorSpec::mean(
            DomainDesc::reals(),
            Invertible::identity(),
        ))
        .unwrap();
        assert_eq!(eval_num(&id, &[1.0, 2.0, 3.0]), 2.0);
        // f = log gives the geometric mean: exp((ln 2 + ln 8)/2) = 4
        let geo = quasi_arithmetic(&GeneratorSpec::mean(
            DomainDesc::positive_reals(),
            Invertible::natural_log(),
        ))
        .unwrap();
        assert!(Tol::DEFAULT.num_eq(eval_num(&geo, &[2.0, 8.0]), 4.0));
        // f = 1/x on (0,∞): idempotence at a repeated point
        let harm = quasi_arithmetic(&GeneratorSpec::mean(
            DomainDesc::positive_reals(),
            Invertible::reciprocal(),
        ))
        .unwrap();
        assert!(Tol::DEFAULT.num_eq(eval_num(&harm, &[1.0, 1.0]), 1.0));
    }

    #[test]
    fn generator_validation_rejects_wrong_inverse() {
        let broken = Invertible::new("broken", |x| x + 1.0, |y| y + 1.0);
        let err =
            quasi_arithmetic(&GeneratorSpec::mean(DomainDesc::reals(), broken)).unwrap_err();
        assert!(matches!(err, BuiltinError::GeneratorNotInvertible { .. }));
    }

    #[test]
    fn pre_mean_examples() {
        let s = pre_mean(&GeneratorSpec::sum_premean()).unwrap();
        assert_eq!(eval_num(&s, &[1.0, 2.0, 3.0]), 6.0);
        let p = pre_mean(&GeneratorSpec::product_premean()).unwrap();
        assert!(Tol::DEFAULT.num_eq(eval_num(&p, &[2.0, 3.0]), 6.0));
        // degenerate pre-mean: f_n = f⁻¹ = id reduces to the mean
        let m = pre_mean(&GeneratorSpec::pre_mean(
            DomainDesc::reals(),
            Invertible::identity(),
            |_| Invertible::identity(),
        ))
        .unwrap();
        assert_eq!(eval_num(&m, &[5.0, 5.0]), 5.0);
    }

    #[test]
    fn pre_mean_with_inverse_outer_equals_mean() {
        // f = ln with f_n = f⁻¹ = exp must agree with the geometric mean
        let qa = quasi_arithmetic(&GeneratorSpec::mean(
            DomainDesc::positive_reals(),
            Invertible::natural_log(),
        ))
        .unwrap();
        let pm = pre_mean(&GeneratorSpec::pre_mean(
            DomainDesc::positive_reals(),
            Invertible::natural_log(),
            |_| Invertible::new("exp", |x| x.exp(), |y| y.ln()),
        ))
        .unwrap();
        for xs in [[1.0, 2.0], [0.5, 4.0], [3.0, 3.0]] {
            assert!(Tol::DEFAULT.num_eq(eval_num(&qa, &xs), eval_num(&pm, &xs)));
        }
    }

    #[test]
    fn m_z_values() {
        // equal weights at z = 1/2 give the arithmetic mean
        assert!(Tol::DEFAULT.num_eq(eval_num(&m_z(0.5), &[1.0, 2.0, 3.0]), 2.0));
        // z = 1 keeps only the first argument
        assert_eq!(eval_num(&m_z(1.0), &[7.0, 9.0, 4.0]), 7.0);
        // z = 0 keeps only the last argument
        assert_eq!(eval_num(&m_z(0.0), &[7.0, 9.0, 4.0]), 4.0);
        // z = 2 on a pair: (2·3 + (1−2)·1)/Δ₂ with Δ₂ = 1
        assert_eq!(eval_num(&m_z(2.0), &[3.0, 1.0]), 5.0);
    }

    #[test]
    fn mz_normalizer_matches_closed_forms() {
        for z in [-1.0, 0.3, 0.5, 1.0, 2.0] {
            for n in 1..=6usize {
                let direct = mz_normalizer(z, n);
                let closed = if (z - 0.5).abs() < 1e-12 {
                    n as f64 * 2f64.powi(1 - n as i32)
                } else {
                    (z.powi(n as i32) - (1.0 - z).powi(n as i32)) / (2.0 * z - 1.0)
                };
                assert!(
                    Tol::DEFAULT.num_eq(direct, closed),
                    "normalizer mismatch at z={z}, n={n}: {direct} vs {closed}"
                );
                assert!(direct != 0.0);
            }
        }
        assert_eq!(mz_normalizer(0.7, 1), 1.0);
    }

    #[test]
    fn mz_section_coefficients() {
        // Δ_k = k·2^{1-k} at z = 1/2, so a_{k+1} = k/(k+1)
        let (a3, b3) = mz_section_coeffs(0.5, 2);
        assert!(Tol::DEFAULT.num_eq(a3, 2.0 / 3.0));
        assert!(Tol::DEFAULT.num_eq(b3, 1.0 / 3.0));
        // Δ₁ = Δ₂ = 1 for every z, so a₂ = z
        for z in [-1.0, 0.3, 2.0, 5.5] {
            let (a2, b2) = mz_section_coeffs(z, 1);
            assert_eq!(a2, z);
            assert_eq!(b2, 1.0 - z);
        }
        // Δ₃ at z = 2 is 4 − 2 + 1 = 3
        let (a3, _) = mz_section_coeffs(2.0, 2);
        assert!(Tol::DEFAULT.num_eq(a3, 2.0 / 3.0));
    }

    #[test]
    fn mz_right_section_is_affine() {
        // δʳ of the binary part of M² is 2x − y
        let f = m_z(2.0);
        let s = f.sections(2).unwrap();
        for (x, y) in [(0.0, 0.0), (1.0, 2.0), (-1.5, 3.0), (0.25, -2.0)] {
            let got = s
                .delta_r(&Value::num(x), &Value::num(y))
                .unwrap()
                .as_val()
                .unwrap()
                .as_num()
                .unwrap();
            assert!(Tol::DEFAULT.num_eq(got, 2.0 * x - y), "δʳ({x},{y}) = {got}");
        }
    }

    #[test]
    fn counterexample_values_are_bit_exact() {
        let h = clamped_sum();
        assert_eq!(eval_num(&h, &[-1.0, -2.0]), 0.0);
        assert_eq!(eval_num(&h, &[-1.0, 1.0]), 0.0);
        assert_eq!(eval_num(&h, &[-1.0, -2.0, 1.0]), 0.0);
        assert_eq!(eval_num(&h, &[-1.0, 1.0, 1.0]), 1.0);
        let f = abs_mean();
        assert_eq!(eval_num(&f, &[1.0]), 1.0);
        assert_eq!(eval_num(&f, &[-1.0]), 1.0);
        assert_eq!(eval_num(&f, &[1.0, 1.0]), 1.0);
        assert_eq!(eval_num(&f, &[1.0, -1.0]), 0.0);
    }

    #[test]
    fn barycenter_of_two_points_is_midpoint() {
        let f = barycenter(2).unwrap();
        let s = Str::from(vec![
            Value::point(vec![0.0, 0.0]),
            Value::point(vec![2.0, 0.0]),
        ]);
        assert_eq!(
            f.eval(&s).unwrap(),
            CoValue::Val(Value::point(vec![1.0, 0.0]))
        );
    }

    #[test]
    fn registry_dispatch() {
        assert!(named_builtin("arith_mean", &BuiltinParams::default()).is_ok());
        assert!(matches!(
            named_builtin("no_such", &BuiltinParams::default()),
            Err(BuiltinError::UnknownName(_))
        ));
        assert!(matches!(
            named_builtin("m_z", &BuiltinParams::default()),
            Err(BuiltinError::MissingParam { .. })
        ));
    }

    #[test]
    fn tabulate_restricts_closed_forms() {
        let t = tabulate_on(&sum(), vec![Value::num(0.0), Value::num(1.0)], 2).unwrap();
        assert_eq!(t.eval(&Str::nums(&[1.0, 1.0])).unwrap(), CoValue::num(2.0));
        assert!(t.eval(&Str::nums(&[2.0])).is_err());
    }
}

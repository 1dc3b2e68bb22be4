//! Variadic (∗-ary) aggregation functions over arbitrary domains.
//!
//! The crate provides:
//!
//! - a data model for strings over a domain and functions F: X* → Y ∪ {ε}
//!   ([`Str`], [`VarFn`], [`CoValue`]), with diagonal sections;
//! - builtin function families (means, sums/products, the nonsymmetric
//!   linear family `m_z`, quasi-arithmetic means and pre-means, barycenters);
//! - a property engine checking barycentric associativity and
//!   preassociativity (and their equivalent forms) exhaustively on finite
//!   domains and by deterministic seeded sampling on numeric ones;
//! - quasi-inverse machinery and factorization of B-preassociative
//!   quasi-range-idempotent functions as F_n = f_n ∘ H_n with H B-associative;
//! - constructors: section-based building, arity-by-arity extension,
//!   constant tails, exhaustive enumeration on tiny domains, and
//!   open-problem probes.

pub mod builtins;
pub mod construct;
pub mod domain;
pub mod factorization;
pub mod io;
pub mod properties;
pub mod report;
pub mod sample;
pub mod string;
pub mod value;
pub mod varfn;

pub use builtins::{
    abs_mean, arith_mean, barycenter, clamped_sum, f_a, first_proj, geom_mean, harm_mean,
    last_proj, length_fn, m_z, max_op, mz_section_coeffs, named_builtin, pre_mean, product,
    quasi_arithmetic, sum, BuiltinError, BuiltinParams, GeneratorSpec, Invertible,
};
pub use construct::{
    constant_tail, enumerate_b_associative, from_sections, probe_open_problems, Census,
    ConstantTail, ConstructionError, Enumeration, ExtendVerdict, FilterFlags, OpenProblem,
    ProbeOutcome, ProbeReport, SectionSpec,
};
pub use domain::{DomainDesc, DomainError, FiniteDomain, Interval};
pub use factorization::{
    affine_identifiability, factorize, idempotizable_decompose, quasi_inverse,
    range_idempotent_factor, AffineVerdict, FactorError, FactorizationResult, QuasiInverse,
    UnaryFn,
};
pub use properties::{
    check, check_all, check_composition_closure, check_determination, check_equivalence_suite,
    check_propagation, is_epsilon_standard, CompositionMaps, CompositionOutcome, EquivFinding,
    EquivSuite, PropagationKind, UnaryMap,
};
pub use report::{Mode, PropertyId, PropertyReport, SpaceDesc, Status, Witness};
pub use sample::{lattice_pool, FiniteSpace, Sampler, SearchConfig};
pub use string::{power, repeat_co, Str};
pub use value::{CoValue, Tol, Value};
pub use varfn::{
    DiagonalSections, EvalError, NaryPart, NaryTable, Side, TableError, VarFn,
    DEFAULT_TABLE_ARITY,
};

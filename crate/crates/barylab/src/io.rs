//! File formats: tabulated functions, function specs, and result
//! serialization. Atoms serialize as JSON scalars (strings, numbers, or
//! coordinate arrays); strings as arrays of atoms (ε is the empty array);
//! ε outputs as the keyword "epsilon".

use serde_json::{json, Map, Value as Json};
use thiserror::Error;

use crate::builtins::{named_builtin, BuiltinError, BuiltinParams};
use crate::domain::{DomainDesc, DomainError, FiniteDomain};
use crate::factorization::{FactorizationResult, OuterMap};
use crate::string::Str;
use crate::value::{CoValue, Value};
use crate::varfn::{TableError, VarFn};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid table file: {0}")]
    Format(String),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(transparent)]
    Builtin(#[from] BuiltinError),
}

fn atom_from_json(v: &Json) -> Result<Value, IoError> {
    match v {
        Json::String(s) => {
            if s == "epsilon" {
                Err(IoError::Format("\"epsilon\" cannot be used as an atom".into()))
            } else {
                Ok(Value::sym(s))
            }
        }
        Json::Number(n) => {
            let x = n
                .as_f64()
                .ok_or_else(|| IoError::Format(format!("non-finite number {n}")))?;
            Ok(Value::num(x))
        }
        Json::Array(coords) => {
            let mut out = Vec::with_capacity(coords.len());
            for c in coords {
                let x = c
                    .as_f64()
                    .ok_or_else(|| IoError::Format("point coordinates must be numbers".into()))?;
                out.push(x);
            }
            Ok(Value::point(out))
        }
        other => Err(IoError::Format(format!("unsupported atom {other}"))),
    }
}

fn covalue_from_json(v: &Json) -> Result<CoValue, IoError> {
    if v == &json!("epsilon") {
        return Ok(CoValue::Epsilon);
    }
    Ok(CoValue::Val(atom_from_json(v)?))
}

pub fn value_to_json(v: &Value) -> Json {
    serde_json::to_value(v).expect("values serialize")
}

pub fn covalue_to_json(v: &CoValue) -> Json {
    serde_json::to_value(v).expect("covalues serialize")
}

/// Parses a tabulated function from its JSON file format:
/// `{"domain": [...], "codomain": [...]|"same_plus_epsilon", "max_arity": k,
///   "default": "epsilon"|atom, "table": [{"in": [...], "out": ...}, ...]}`.
pub fn table_from_json(doc: &Json) -> Result<VarFn, IoError> {
    let obj = doc
        .as_object()
        .ok_or_else(|| IoError::Format("table file must be a JSON object".into()))?;
    let domain_atoms = obj
        .get("domain")
        .and_then(Json::as_array)
        .ok_or_else(|| IoError::Format("missing \"domain\" array".into()))?;
    let domain = FiniteDomain::new(
        domain_atoms.iter().map(atom_from_json).collect::<Result<Vec<_>, _>>()?,
    )?;
    let codomain = match obj.get("codomain") {
        None => DomainDesc::Finite(domain.clone()),
        Some(Json::String(s)) if s == "same_plus_epsilon" => DomainDesc::Finite(domain.clone()),
        Some(Json::Array(atoms)) => DomainDesc::Finite(FiniteDomain::new(
            atoms.iter().map(atom_from_json).collect::<Result<Vec<_>, _>>()?,
        )?),
        Some(other) => return Err(IoError::Format(format!("bad codomain: {other}"))),
    };
    let max_arity = match obj.get("max_arity") {
        None => crate::varfn::DEFAULT_TABLE_ARITY,
        Some(v) => v
            .as_u64()
            .filter(|&k| k >= 1)
            .ok_or_else(|| IoError::Format("max_arity must be a positive integer".into()))?
            as usize,
    };
    let default = match obj.get("default") {
        None => CoValue::Epsilon,
        Some(v) => covalue_from_json(v)?,
    };
    let table = obj
        .get("table")
        .and_then(Json::as_array)
        .ok_or_else(|| IoError::Format("missing \"table\" array".into()))?;
    let mut entries = Vec::with_capacity(table.len());
    for entry in table {
        let e = entry
            .as_object()
            .ok_or_else(|| IoError::Format("table entries must be objects".into()))?;
        let input = e
            .get("in")
            .and_then(Json::as_array)
            .ok_or_else(|| IoError::Format("table entry needs an \"in\" array".into()))?;
        let input: Vec<Value> =
            input.iter().map(atom_from_json).collect::<Result<Vec<_>, _>>()?;
        let out = e
            .get("out")
            .ok_or_else(|| IoError::Format("table entry needs an \"out\" value".into()))?;
        entries.push((Str::from(input), covalue_from_json(out)?));
    }
    let name = obj.get("name").and_then(Json::as_str).unwrap_or("table");
    Ok(VarFn::from_table(name, domain, codomain, max_arity, default, &entries)?)
}

pub fn table_from_str(text: &str) -> Result<VarFn, IoError> {
    let doc: Json = serde_json::from_str(text)?;
    table_from_json(&doc)
}

/// Serializes a tabulated function back into the file format.
pub fn table_to_json(f: &VarFn) -> Result<Json, IoError> {
    let domain = f
        .domain()
        .as_finite()
        .ok_or_else(|| IoError::Format("only finite tabulated functions serialize".into()))?;
    let table = f
        .table()
        .ok_or_else(|| IoError::Format("only tabulated bodies serialize".into()))?;
    let mut entries = Vec::new();
    let space = crate::sample::FiniteSpace::new(domain.clone());
    for n in 1..=table.max_arity() {
        for (s, out) in space.strings(n).zip(table.outputs(n).iter()) {
            entries.push(json!({
                "in": serde_json::to_value(&s)?,
                "out": covalue_to_json(out),
            }));
        }
    }
    let codomain = if f.codomain() == f.domain() {
        json!("same_plus_epsilon")
    } else {
        match f.codomain() {
            DomainDesc::Finite(c) => {
                Json::Array(c.atoms().iter().map(value_to_json).collect())
            }
            _ => return Err(IoError::Format("non-finite codomain".into())),
        }
    };
    Ok(json!({
        "name": f.name(),
        "domain": Json::Array(domain.atoms().iter().map(value_to_json).collect()),
        "codomain": codomain,
        "max_arity": table.max_arity(),
        "default": covalue_to_json(f.default()),
        "table": entries,
    }))
}

/// Resolves a function spec: either `{"name": ..., params...}` referencing a
/// builtin, or `{"table": {...}}` with an inline tabulated function.
pub fn fn_from_spec_json(doc: &Json) -> Result<VarFn, IoError> {
    let obj = doc
        .as_object()
        .ok_or_else(|| IoError::Format("function spec must be a JSON object".into()))?;
    if let Some(table) = obj.get("table") {
        return table_from_json(table);
    }
    let name = obj
        .get("name")
        .and_then(Json::as_str)
        .ok_or_else(|| IoError::Format("function spec needs \"name\" or \"table\"".into()))?;
    let params = BuiltinParams {
        z: obj.get("z").and_then(Json::as_f64),
        a: obj.get("a").map(atom_from_json).transpose()?,
        atoms: obj
            .get("atoms")
            .and_then(Json::as_array)
            .map(|a| a.iter().map(atom_from_json).collect::<Result<Vec<_>, _>>())
            .transpose()?,
        dim: obj.get("dim").and_then(Json::as_u64).map(|d| d as usize),
    };
    Ok(named_builtin(name, &params)?)
}

/// Serializes a factorization: the inner operation in the tabulated file
/// format (or by name when closed-form), plus the outer maps.
pub fn factorization_to_json(result: &FactorizationResult) -> Result<Json, IoError> {
    let h = if result.h.table().is_some() {
        table_to_json(&result.h)?
    } else {
        json!({ "name": result.h.name() })
    };
    let outer: Vec<Json> = result
        .outer
        .iter()
        .enumerate()
        .map(|(i, o)| match o {
            OuterMap::Table(t) => {
                let entries: Vec<Json> = t
                    .dom()
                    .iter()
                    .map(|d| {
                        json!({
                            "in": covalue_to_json(d),
                            "out": covalue_to_json(t.apply(d).expect("total")),
                        })
                    })
                    .collect();
                json!({ "n": i + 1, "table": entries })
            }
            OuterMap::Closed { name, .. } => json!({ "n": i + 1, "closed": name }),
        })
        .collect();
    let mut checks = Map::new();
    checks.insert(
        "h_b_associative".into(),
        json!(result.checks.h_b_associative.status.as_str()),
    );
    checks.insert(
        "h_epsilon_standard".into(),
        json!(result.checks.h_epsilon_standard.status.as_str()),
    );
    if let Some(r) = &result.checks.h_idempotent {
        checks.insert("h_idempotent".into(), json!(r.status.as_str()));
    }
    checks.insert("outer_injective".into(), json!(result.checks.outer_injective));
    checks.insert("reconstruction_ok".into(), json!(result.checks.reconstruction_ok));
    checks.insert(
        "outer_inverse_quasi".into(),
        json!(result.checks.outer_inverse_quasi),
    );
    Ok(json!({ "h": h, "outer": outer, "checks": Json::Object(checks) }))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MAX_TABLE: &str = r#"{
        "domain": ["0", "1"],
        "codomain": "same_plus_epsilon",
        "max_arity": 2,
        "default": "epsilon",
        "table": [
            {"in": ["0"], "out": "0"},
            {"in": ["1"], "out": "1"},
            {"in": ["0","0"], "out": "0"},
            {"in": ["0","1"], "out": "1"},
            {"in": ["1","0"], "out": "1"},
            {"in": ["1","1"], "out": "1"}
        ]
    }"#;

    #[test]
    fn parse_and_eval_table_file() {
        let f = table_from_str(MAX_TABLE).unwrap();
        assert_eq!(f.eval(&Str::syms(&["0", "1"])).unwrap(), CoValue::sym("1"));
        assert_eq!(f.eval(&Str::empty()).unwrap(), CoValue::Epsilon);
        assert!(f.claims_eps_standard());
    }

    #[test]
    fn table_round_trips_through_json() {
        let f = table_from_str(MAX_TABLE).unwrap();
        let doc = table_to_json(&f).unwrap();
        let g = table_from_json(&doc).unwrap();
        let space = crate::sample::FiniteSpace::new(f.domain().as_finite().unwrap().clone());
        for s in space.strings_upto(2) {
            assert_eq!(f.eval(&s).unwrap(), g.eval(&s).unwrap());
        }
        assert_eq!(f.default(), g.default());
    }

    #[test]
    fn rejects_partial_and_reserved() {
        let partial = r#"{"domain": ["a"], "max_arity": 1, "table": []}"#;
        assert!(table_from_str(partial).is_err());
        let reserved = r#"{"domain": ["epsilon"], "max_arity": 1,
                           "table": [{"in": ["epsilon"], "out": "epsilon"}]}"#;
        assert!(table_from_str(reserved).is_err());
    }

    #[test]
    fn epsilon_outputs_parse() {
        let doc = r#"{
            "domain": ["0", "1"], "max_arity": 1, "default": "epsilon",
            "table": [
                {"in": ["0"], "out": "epsilon"},
                {"in": ["1"], "out": "1"}
            ]
        }"#;
        let f = table_from_str(doc).unwrap();
        assert_eq!(f.eval(&Str::syms(&["0"])).unwrap(), CoValue::Epsilon);
        assert!(!f.claims_eps_standard());
    }

    #[test]
    fn builtin_specs_resolve() {
        let f = fn_from_spec_json(&json!({"name": "m_z", "z": 2.0})).unwrap();
        let v = f.eval(&Str::nums(&[3.0, 1.0])).unwrap();
        assert_eq!(v, CoValue::num(5.0));
        assert!(fn_from_spec_json(&json!({"name": "nope"})).is_err());
    }
}

//! The JSON metadata document format.
//!
//! Types are encoded as `"int"`, `"double"`, `"bool"`, `"str"`,
//! `{"list": T}`, `{"map": [K, V]}` and `{"opt": T}`. Map values are arrays
//! of `[key, value]` pairs (objects are also accepted when keys are strings).

use std::collections::BTreeMap;

use serde_json::{json, Map as JsonMap, Number, Value as Json};

use super::{Alignment, Param, Problem, ProblemError, Signature, TestCase, TypeExpr, Value};

fn schema(msg: impl Into<String>) -> ProblemError {
    ProblemError::SchemaViolation(msg.into())
}

pub fn parse_type(j: &Json) -> Result<TypeExpr, ProblemError> {
    let t = parse_type_unchecked(j)?;
    t.validate()?;
    Ok(t)
}

fn parse_type_unchecked(j: &Json) -> Result<TypeExpr, ProblemError> {
    match j {
        Json::String(s) => match s.as_str() {
            "int" => Ok(TypeExpr::Int),
            "double" => Ok(TypeExpr::Double),
            "bool" => Ok(TypeExpr::Bool),
            "str" => Ok(TypeExpr::Str),
            other => Err(schema(format!("unknown type tag {other:?}"))),
        },
        Json::Object(obj) if obj.len() == 1 => {
            let (tag, body) = obj.iter().next().expect("one entry");
            match tag.as_str() {
                "list" => Ok(TypeExpr::list(parse_type_unchecked(body)?)),
                "opt" => Ok(TypeExpr::optional(parse_type_unchecked(body)?)),
                "map" => match body {
                    Json::Array(kv) if kv.len() == 2 => Ok(TypeExpr::map(
                        parse_type_unchecked(&kv[0])?,
                        parse_type_unchecked(&kv[1])?,
                    )),
                    _ => Err(schema("map type must be [key, value]")),
                },
                other => Err(schema(format!("unknown type tag {other:?}"))),
            }
        }
        other => Err(schema(format!("invalid type encoding {other}"))),
    }
}

pub fn type_to_json(t: &TypeExpr) -> Json {
    match t {
        TypeExpr::Int => json!("int"),
        TypeExpr::Double => json!("double"),
        TypeExpr::Bool => json!("bool"),
        TypeExpr::Str => json!("str"),
        TypeExpr::List(e) => json!({ "list": type_to_json(e) }),
        TypeExpr::Map(k, v) => json!({ "map": [type_to_json(k), type_to_json(v)] }),
        TypeExpr::Optional(e) => json!({ "opt": type_to_json(e) }),
    }
}

/// Decodes a JSON value guided by its declared type. Errors carry a path
/// description but no case index; callers attach it.
pub fn value_from_json(j: &Json, t: &TypeExpr) -> Result<Value, String> {
    match (t, j) {
        (TypeExpr::Optional(_), Json::Null) => Ok(Value::Null),
        (TypeExpr::Optional(inner), _) => value_from_json(j, inner),
        (TypeExpr::Int, Json::Number(n)) => n
            .as_i64()
            .map(Value::Int)
            .ok_or_else(|| format!("{n} is not a signed 64-bit integer")),
        (TypeExpr::Double, Json::Number(n)) => n
            .as_f64()
            .filter(|d| d.is_finite())
            .map(Value::Double)
            .ok_or_else(|| format!("{n} is not a finite double")),
        (TypeExpr::Bool, Json::Bool(b)) => Ok(Value::Bool(*b)),
        (TypeExpr::Str, Json::String(s)) => Ok(Value::Str(s.clone())),
        (TypeExpr::List(elem), Json::Array(items)) => items
            .iter()
            .enumerate()
            .map(|(i, x)| value_from_json(x, elem).map_err(|e| format!("[{i}]: {e}")))
            .collect::<Result<Vec<_>, _>>()
            .map(Value::List),
        (TypeExpr::Map(kt, vt), Json::Array(pairs)) => {
            let mut entries: Vec<(Value, Value)> = Vec::with_capacity(pairs.len());
            for (i, pair) in pairs.iter().enumerate() {
                let Json::Array(kv) = pair else {
                    return Err(format!("map entry {i} is not a [key, value] pair"));
                };
                if kv.len() != 2 {
                    return Err(format!("map entry {i} is not a [key, value] pair"));
                }
                let k = value_from_json(&kv[0], kt).map_err(|e| format!("key {i}: {e}"))?;
                let v = value_from_json(&kv[1], vt).map_err(|e| format!("value {i}: {e}"))?;
                if entries.iter().any(|(k2, _)| *k2 == k) {
                    return Err(format!("duplicate map key at entry {i}"));
                }
                entries.push((k, v));
            }
            Ok(Value::Map(entries))
        }
        (TypeExpr::Map(kt, vt), Json::Object(obj)) if **kt == TypeExpr::Str => obj
            .iter()
            .map(|(k, v)| {
                value_from_json(v, vt)
                    .map(|v| (Value::Str(k.clone()), v))
                    .map_err(|e| format!("[{k:?}]: {e}"))
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Value::Map),
        (t, j) => Err(format!("expected {t}, found {j}")),
    }
}

pub fn value_to_json(v: &Value) -> Json {
    match v {
        Value::Int(i) => json!(i),
        Value::Double(d) => Number::from_f64(*d).map(Json::Number).unwrap_or(Json::Null),
        Value::Bool(b) => json!(b),
        Value::Str(s) => json!(s),
        Value::List(items) => Json::Array(items.iter().map(value_to_json).collect()),
        Value::Map(entries) => Json::Array(
            entries
                .iter()
                .map(|(k, v)| json!([value_to_json(k), value_to_json(v)]))
                .collect(),
        ),
        Value::Null => Json::Null,
    }
}

fn field<'a>(obj: &'a JsonMap<String, Json>, name: &str, ctx: &str) -> Result<&'a Json, ProblemError> {
    obj.get(name)
        .ok_or_else(|| schema(format!("{ctx}: missing field `{name}`")))
}

fn string_field(obj: &JsonMap<String, Json>, name: &str, ctx: &str) -> Result<String, ProblemError> {
    field(obj, name, ctx)?
        .as_str()
        .map(str::to_string)
        .ok_or_else(|| schema(format!("{ctx}: `{name}` must be a string")))
}

fn parse_signature(j: &Json) -> Result<Signature, ProblemError> {
    let obj = j
        .as_object()
        .ok_or_else(|| schema("signature must be an object"))?;
    let name = string_field(obj, "name", "signature")?;
    let params_json = field(obj, "params", "signature")?
        .as_array()
        .ok_or_else(|| schema("signature.params must be an array"))?;
    let mut params = Vec::with_capacity(params_json.len());
    for (i, pj) in params_json.iter().enumerate() {
        let ctx = format!("signature.params[{i}]");
        let pobj = pj
            .as_object()
            .ok_or_else(|| schema(format!("{ctx} must be an object")))?;
        params.push(Param {
            name: string_field(pobj, "name", &ctx)?,
            ty: parse_type(field(pobj, "type", &ctx)?)?,
        });
    }
    let returns = parse_type(field(obj, "returns", "signature")?)?;
    let sig = Signature {
        name,
        params,
        returns,
    };
    sig.validate()?;
    Ok(sig)
}

fn parse_case(j: &Json, sig: &Signature, index: usize) -> Result<TestCase, ProblemError> {
    let ctx = format!("cases[{index}]");
    let obj = j
        .as_object()
        .ok_or_else(|| schema(format!("{ctx} must be an object")))?;
    let inputs = field(obj, "inputs", &ctx)?
        .as_array()
        .ok_or_else(|| schema(format!("{ctx}.inputs must be an array")))?;
    let expected = field(obj, "expected", &ctx)?;
    if inputs.len() != sig.params.len() {
        return Err(ProblemError::in_case(
            index,
            format!("{} inputs for {} parameters", inputs.len(), sig.params.len()),
        ));
    }
    let inputs = inputs
        .iter()
        .zip(&sig.params)
        .enumerate()
        .map(|(i, (x, p))| {
            value_from_json(x, &p.ty)
                .map_err(|e| ProblemError::in_case(index, format!("input {i}: {e}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let expected = value_from_json(expected, &sig.returns)
        .map_err(|e| ProblemError::in_case(index, format!("expected: {e}")))?;
    let case = TestCase { inputs, expected };
    case.validate(sig, index)?;
    Ok(case)
}

fn string_map(j: Option<&Json>, name: &str) -> Result<BTreeMap<String, String>, ProblemError> {
    let Some(j) = j else {
        return Ok(BTreeMap::new());
    };
    let obj = j
        .as_object()
        .ok_or_else(|| schema(format!("`{name}` must be an object")))?;
    obj.iter()
        .map(|(k, v)| {
            v.as_str()
                .map(|s| (k.clone(), s.to_string()))
                .ok_or_else(|| schema(format!("`{name}.{k}` must be a string")))
        })
        .collect()
}

fn string_list(j: &Json, ctx: &str) -> Result<Vec<String>, ProblemError> {
    j.as_array()
        .ok_or_else(|| schema(format!("{ctx} must be an array of strings")))?
        .iter()
        .map(|x| {
            x.as_str()
                .map(str::to_string)
                .ok_or_else(|| schema(format!("{ctx} must be an array of strings")))
        })
        .collect()
}

fn parse_alignments(
    j: Option<&Json>,
) -> Result<BTreeMap<(String, String), Alignment>, ProblemError> {
    let mut out = BTreeMap::new();
    let Some(j) = j else {
        return Ok(out);
    };
    let obj = j
        .as_object()
        .ok_or_else(|| schema("`alignments` must be an object"))?;
    for (pair, lines) in obj {
        let (src, tgt) = pair
            .split_once("->")
            .ok_or_else(|| schema(format!("alignment key {pair:?} must be `source->target`")))?;
        let rows = lines
            .as_array()
            .ok_or_else(|| schema(format!("alignments.{pair} must be an array")))?;
        let mut aligned = Vec::with_capacity(rows.len());
        for row in rows {
            let cells = string_list(row, &format!("alignments.{pair}[]"))?;
            if cells.len() != 2 {
                return Err(schema(format!("alignments.{pair} rows must be [source, target]")));
            }
            aligned.push((cells[0].clone(), cells[1].clone()));
        }
        out.insert((src.to_string(), tgt.to_string()), aligned);
    }
    Ok(out)
}

/// Parses and validates one metadata document.
pub fn parse_problem(doc: &str) -> Result<Problem, ProblemError> {
    let j: Json =
        serde_json::from_str(doc).map_err(|e| ProblemError::MalformedDocument(e.to_string()))?;
    let obj = j
        .as_object()
        .ok_or_else(|| schema("document root must be an object"))?;
    let id = string_field(obj, "id", "problem")?;
    let description = string_field(obj, "description", "problem")?;
    let signature = parse_signature(field(obj, "signature", "problem")?)?;
    let cases_json = field(obj, "cases", "problem")?
        .as_array()
        .ok_or_else(|| schema("`cases` must be an array"))?;
    let cases = cases_json
        .iter()
        .enumerate()
        .map(|(i, c)| parse_case(c, &signature, i))
        .collect::<Result<Vec<_>, _>>()?;
    let solutions = string_map(obj.get("solutions"), "solutions")?;
    let mut imports = BTreeMap::new();
    if let Some(imp) = obj.get("imports") {
        let iobj = imp
            .as_object()
            .ok_or_else(|| schema("`imports` must be an object"))?;
        for (lang, list) in iobj {
            imports.insert(lang.clone(), string_list(list, &format!("imports.{lang}"))?);
        }
    }
    let alignments = parse_alignments(obj.get("alignments"))?;
    let problem = Problem {
        id,
        description,
        signature,
        cases,
        solutions,
        imports,
        alignments,
    };
    problem.validate()?;
    Ok(problem)
}

/// Serializes a problem to a pretty-printed metadata document.
pub fn emit_problem(p: &Problem) -> String {
    let mut obj = JsonMap::new();
    obj.insert("id".into(), json!(p.id));
    obj.insert("description".into(), json!(p.description));
    obj.insert(
        "signature".into(),
        json!({
            "name": p.signature.name,
            "params": p.signature.params.iter().map(|q| json!({
                "name": q.name,
                "type": type_to_json(&q.ty),
            })).collect::<Vec<_>>(),
            "returns": type_to_json(&p.signature.returns),
        }),
    );
    obj.insert(
        "cases".into(),
        Json::Array(
            p.cases
                .iter()
                .map(|c| {
                    json!({
                        "inputs": c.inputs.iter().map(value_to_json).collect::<Vec<_>>(),
                        "expected": value_to_json(&c.expected),
                    })
                })
                .collect(),
        ),
    );
    if !p.solutions.is_empty() {
        obj.insert("solutions".into(), json!(p.solutions));
    }
    if !p.imports.is_empty() {
        obj.insert("imports".into(), json!(p.imports));
    }
    if !p.alignments.is_empty() {
        let mut a = JsonMap::new();
        for ((s, t), rows) in &p.alignments {
            a.insert(
                format!("{s}->{t}"),
                Json::Array(rows.iter().map(|(x, y)| json!([x, y])).collect()),
            );
        }
        obj.insert("alignments".into(), Json::Object(a));
    }
    let mut out = serde_json::to_string_pretty(&Json::Object(obj)).expect("serializable");
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const ADD: &str = r#"{
        "id": "add",
        "description": "Add two numbers.",
        "signature": {"name": "add", "params": [{"name": "a", "type": "int"}, {"name": "b", "type": "int"}], "returns": "int"},
        "cases": [{"inputs": [2, 3], "expected": 5}]
    }"#;

    #[test]
    fn minimal_document() {
        let p = parse_problem(ADD).unwrap();
        assert_eq!(p.id, "add");
        assert_eq!(p.cases.len(), 1);
        assert_eq!(p.cases[0].expected, Value::Int(5));
    }

    #[test]
    fn arity_mismatch_names_case() {
        let doc = ADD.replace("[2, 3]", "[2, 3, 4]");
        assert_eq!(
            parse_problem(&doc).unwrap_err(),
            ProblemError::InvariantViolation {
                case: Some(0),
                message: "3 inputs for 2 parameters".into()
            }
        );
    }

    #[test]
    fn non_scalar_map_key_is_schema_violation() {
        let doc = ADD.replace(
            r#""returns": "int""#,
            r#""returns": {"map": [{"list": "int"}, "int"]}"#,
        );
        assert!(matches!(
            parse_problem(&doc),
            Err(ProblemError::SchemaViolation(_))
        ));
    }

    #[test]
    fn malformed_and_missing_fields() {
        assert!(matches!(
            parse_problem("{ not json"),
            Err(ProblemError::MalformedDocument(_))
        ));
        let doc = ADD.replace(r#""id": "add","#, "");
        assert!(matches!(
            parse_problem(&doc),
            Err(ProblemError::SchemaViolation(_))
        ));
        let doc = ADD.replace(r#""int"}], "returns""#, r#""integer"}], "returns""#);
        assert!(matches!(
            parse_problem(&doc),
            Err(ProblemError::SchemaViolation(_))
        ));
    }

    #[test]
    fn wrong_value_type_names_case() {
        let doc = ADD.replace(r#""expected": 5"#, r#""expected": "five""#);
        assert!(matches!(
            parse_problem(&doc),
            Err(ProblemError::InvariantViolation { case: Some(0), .. })
        ));
        let doc = ADD.replace(r#""expected": 5"#, r#""expected": 5.5"#);
        assert!(matches!(
            parse_problem(&doc),
            Err(ProblemError::InvariantViolation { case: Some(0), .. })
        ));
    }

    #[test]
    fn string_keyed_map_accepts_object() {
        let t = TypeExpr::map(TypeExpr::Str, TypeExpr::Int);
        let v = value_from_json(&json!({"a": 1}), &t).unwrap();
        assert_eq!(v, Value::Map(vec![(Value::Str("a".into()), Value::Int(1))]));
        let t = TypeExpr::map(TypeExpr::Int, TypeExpr::Int);
        assert!(value_from_json(&json!([[1, 2], [1, 3]]), &t).is_err());
    }

    #[test]
    fn half_round_trips_exactly() {
        let doc = ADD
            .replace(r#""returns": "int""#, r#""returns": "double""#)
            .replace(r#""expected": 5"#, r#""expected": 0.5"#);
        let p = parse_problem(&doc).unwrap();
        let text = emit_problem(&p);
        assert!(text.contains("0.5"));
        let q = parse_problem(&text).unwrap();
        match q.cases[0].expected {
            Value::Double(d) => assert_eq!(d.to_bits(), 0.5f64.to_bits()),
            ref other => panic!("{other:?}"),
        }
    }

    #[test]
    fn empty_description_retained() {
        let doc = ADD.replace("Add two numbers.", "");
        let p = parse_problem(&doc).unwrap();
        let text = emit_problem(&p);
        assert!(text.contains(r#""description": """#));
        assert_eq!(parse_problem(&text).unwrap(), p);
    }
}

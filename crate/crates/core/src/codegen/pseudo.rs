use std::fmt::Write;

use super::{float_repr, function_name, map_type, param_name, placeholder_line, quote, render_cases, CodegenError, Dialect, LanguageProfile};
use crate::problem::{Problem, Signature, TypeExpr, Value};

pub(super) const RESERVED: &[&str] = &[
    "fn", "let", "if", "else", "while", "for", "in", "return", "break", "continue", "true", "false", "null", "int",
    "double", "bool", "str", "list", "map", "opt", "main", "failures",
];

pub(super) fn literal(v: &Value, t: &TypeExpr) -> String {
    match (v, t) {
        (Value::Null, _) => "null".into(),
        (v, TypeExpr::Optional(inner)) => literal(v, inner),
        (Value::Int(i), _) => i.to_string(),
        (Value::Double(d), _) => float_repr(*d),
        (Value::Bool(b), _) => b.to_string(),
        (Value::Str(s), _) => quote(s, |c| format!("\\u{{{:x}}}", c as u32)),
        (Value::List(items), TypeExpr::List(elem)) => {
            let parts: Vec<_> = items.iter().map(|x| literal(x, elem)).collect();
            format!("[{}]", parts.join(", "))
        }
        (Value::Map(entries), TypeExpr::Map(kt, vt)) => {
            let parts: Vec<_> = entries
                .iter()
                .map(|(k, v)| format!("{}: {}", literal(k, kt), literal(v, vt)))
                .collect();
            format!("{{{}}}", parts.join(", "))
        }
        _ => unreachable!("value conformance checked by caller"),
    }
}

pub(super) fn signature(sig: &Signature, profile: &LanguageProfile) -> Result<String, CodegenError> {
    let params = sig
        .params
        .iter()
        .map(|p| Ok(format!("{}: {}", param_name(&p.name, profile), map_type(&p.ty, profile)?)))
        .collect::<Result<Vec<_>, CodegenError>>()?;
    Ok(format!(
        "fn {}({}) -> {}",
        function_name(&sig.name, profile),
        params.join(", "),
        map_type(&sig.returns, profile)?
    ))
}

pub(super) fn driver(p: &Problem, profile: &LanguageProfile) -> Result<String, CodegenError> {
    signature(&p.signature, profile)?;
    let cases = render_cases(p, profile)?;
    let fname = function_name(&p.signature.name, profile);
    let mut s = String::new();
    writeln!(s, "// Test program for `{}` (generated)", p.id).unwrap();
    s.push_str(&placeholder_line(Dialect::Pseudo));
    s.push_str("\n\nfn main() -> int {\n    let failures = 0;\n");
    for (i, c) in cases.iter().enumerate() {
        writeln!(
            s,
            "    if deep_eq({fname}({}), {}) {{",
            c.args.join(", "),
            c.expected
        )
        .unwrap();
        writeln!(s, "        print(\"CASE {i} PASS\");").unwrap();
        s.push_str("    } else {\n");
        writeln!(s, "        print(\"CASE {i} FAIL\");").unwrap();
        s.push_str("        failures = failures + 1;\n    }\n");
    }
    s.push_str("    if failures == 0 {\n        return 0;\n    }\n    return 1;\n}\n");
    Ok(s)
}

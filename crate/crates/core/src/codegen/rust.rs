use std::fmt::Write;

use super::{float_repr, function_name, map_type, param_name, placeholder_line, render_cases, replace_placeholder, quote, CodegenError, Dialect, LanguageProfile};
use crate::problem::{Problem, Signature, TypeExpr, Value};

pub(super) const RESERVED: &[&str] = &[
    "as", "break", "const", "continue", "crate", "else", "enum", "extern", "false", "fn", "for", "if", "impl", "in",
    "let", "loop", "match", "mod", "move", "mut", "pub", "ref", "return", "self", "Self", "static", "struct",
    "super", "trait", "true", "type", "unsafe", "use", "where", "while", "async", "await", "dyn", "abstract",
    "become", "box", "do", "final", "macro", "override", "priv", "typeof", "unsized", "virtual", "yield", "try",
    "main", "failures", "expected", "actual",
];

const DRIVER_USES: &[&str] = &["use std::collections::HashMap;"];

pub(super) fn literal(v: &Value, t: &TypeExpr) -> Result<String, CodegenError> {
    Ok(match (v, t) {
        (Value::Null, TypeExpr::Optional(_)) => "None".into(),
        (v, TypeExpr::Optional(inner)) => format!("Some({})", literal(v, inner)?),
        (Value::Int(i), _) => {
            if *i == i64::MIN {
                "i64::MIN".into()
            } else {
                format!("{i}i64")
            }
        }
        (Value::Double(d), _) => format!("{}f64", float_repr(*d)),
        (Value::Bool(b), _) => b.to_string(),
        (Value::Str(s), _) => format!("String::from({})", quote(s, |c| format!("\\u{{{:x}}}", c as u32))),
        (Value::List(items), TypeExpr::List(elem)) => {
            let parts = items
                .iter()
                .map(|x| literal(x, elem))
                .collect::<Result<Vec<_>, _>>()?;
            format!("vec![{}]", parts.join(", "))
        }
        (Value::Map(entries), TypeExpr::Map(kt, vt)) => {
            if entries.is_empty() {
                "HashMap::new()".into()
            } else {
                let parts = entries
                    .iter()
                    .map(|(k, v)| Ok(format!("({}, {})", literal(k, kt)?, literal(v, vt)?)))
                    .collect::<Result<Vec<_>, CodegenError>>()?;
                format!("HashMap::from([{}])", parts.join(", "))
            }
        }
        _ => unreachable!("value conformance checked by caller"),
    })
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

const HELPERS: &str = r#"trait TtEq {
    fn tt_eq(&self, e: &Self) -> bool;
}

impl TtEq for i64 {
    fn tt_eq(&self, e: &Self) -> bool {
        self == e
    }
}

impl TtEq for f64 {
    fn tt_eq(&self, e: &Self) -> bool {
        if !self.is_finite() {
            return false;
        }
        let d = (self - e).abs();
        d <= 1e-6 || d <= 1e-6 * self.abs().max(e.abs())
    }
}

impl TtEq for bool {
    fn tt_eq(&self, e: &Self) -> bool {
        self == e
    }
}

impl TtEq for String {
    fn tt_eq(&self, e: &Self) -> bool {
        self == e
    }
}

impl<T: TtEq> TtEq for Vec<T> {
    fn tt_eq(&self, e: &Self) -> bool {
        self.len() == e.len() && self.iter().zip(e.iter()).all(|(x, y)| x.tt_eq(y))
    }
}

impl<K: std::hash::Hash + Eq, V: TtEq> TtEq for HashMap<K, V> {
    fn tt_eq(&self, e: &Self) -> bool {
        self.len() == e.len() && e.iter().all(|(k, v)| self.get(k).map_or(false, |x| x.tt_eq(v)))
    }
}

impl<T: TtEq> TtEq for Option<T> {
    fn tt_eq(&self, e: &Self) -> bool {
        match (self, e) {
            (Some(x), Some(y)) => x.tt_eq(y),
            (None, None) => true,
            _ => false,
        }
    }
}
"#;

pub(super) fn driver(p: &Problem, profile: &LanguageProfile) -> Result<String, CodegenError> {
    let cases = render_cases(p, profile)?;
    let fname = function_name(&p.signature.name, profile);
    let arg_types = p
        .signature
        .params
        .iter()
        .map(|q| map_type(&q.ty, profile))
        .collect::<Result<Vec<_>, _>>()?;
    let ret = map_type(&p.signature.returns, profile)?;
    let mut s = String::new();
    writeln!(s, "// Test program for `{}` (generated)", p.id).unwrap();
    s.push_str("#![allow(unused_imports, unused_mut, unused_variables, dead_code, non_snake_case)]\n");
    for u in DRIVER_USES {
        s.push_str(u);
        s.push('\n');
    }
    s.push('\n');
    s.push_str(&placeholder_line(Dialect::Rust));
    s.push_str("\n\n");
    s.push_str(HELPERS);
    s.push_str("\nfn main() {\n    let mut failures = 0;\n");
    for (i, c) in cases.iter().enumerate() {
        s.push_str("    {\n");
        let mut names = Vec::with_capacity(c.args.len());
        for (j, (arg, ty)) in c.args.iter().zip(&arg_types).enumerate() {
            writeln!(s, "        let a{j}: {ty} = {arg};").unwrap();
            names.push(format!("a{j}"));
        }
        writeln!(s, "        let expected: {ret} = {};", c.expected).unwrap();
        writeln!(s, "        let actual: {ret} = {fname}({});", names.join(", ")).unwrap();
        s.push_str("        if actual.tt_eq(&expected) {\n");
        writeln!(s, "            println!(\"CASE {i} PASS\");").unwrap();
        s.push_str("        } else {\n");
        writeln!(s, "            println!(\"CASE {i} FAIL\");").unwrap();
        s.push_str("            failures += 1;\n        }\n    }\n");
    }
    s.push_str("    if failures > 0 {\n        std::process::exit(1);\n    }\n}\n");
    Ok(s)
}

/// Drops candidate lines that would clash with the driver prelude.
pub(super) fn splice(source: &str, candidate: &str) -> String {
    let body = candidate
        .lines()
        .filter(|l| {
            let t = l.trim();
            !t.starts_with("#![") && !DRIVER_USES.contains(&t)
        })
        .collect::<Vec<_>>()
        .join("\n");
    replace_placeholder(source, Dialect::Rust, &body)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literals() {
        let t = TypeExpr::map(TypeExpr::Str, TypeExpr::list(TypeExpr::optional(TypeExpr::Double)));
        let v = Value::Map(vec![(
            Value::Str("k".into()),
            Value::List(vec![Value::Double(-0.5), Value::Null]),
        )]);
        assert_eq!(
            literal(&v, &t).unwrap(),
            r#"HashMap::from([(String::from("k"), vec![Some(-0.5f64), None])])"#
        );
        assert_eq!(
            literal(&Value::Map(vec![]), &TypeExpr::map(TypeExpr::Int, TypeExpr::Int)).unwrap(),
            "HashMap::new()"
        );
    }

    #[test]
    fn splice_drops_duplicate_use() {
        let src = "use std::collections::HashMap;\n// @@CANDIDATE@@\n";
        let out = splice(src, "use std::collections::HashMap;\nfn f() -> i64 { 1 }\n");
        assert_eq!(out.matches("use std::collections::HashMap;").count(), 1);
        assert!(out.contains("fn f() -> i64 { 1 }"));
    }
}

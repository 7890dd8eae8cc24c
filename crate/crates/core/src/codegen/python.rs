use std::fmt::Write;

use super::{float_repr, function_name, map_type, param_name, placeholder_line, quote, render_cases, CodegenError, Dialect, LanguageProfile};
use crate::problem::{Problem, Signature, TypeExpr, Value};

pub(super) const RESERVED: &[&str] = &[
    "False", "None", "True", "and", "as", "assert", "async", "await", "break", "class", "continue", "def", "del",
    "elif", "else", "except", "finally", "for", "from", "global", "if", "import", "in", "is", "lambda", "nonlocal",
    "not", "or", "pass", "raise", "return", "try", "while", "with", "yield",
];

pub(super) fn literal(v: &Value, t: &TypeExpr) -> String {
    match (v, t) {
        (Value::Null, _) => "None".into(),
        (v, TypeExpr::Optional(inner)) => literal(v, inner),
        (Value::Int(i), _) => i.to_string(),
        (Value::Double(d), _) => float_repr(*d),
        (Value::Bool(b), _) => if *b { "True" } else { "False" }.into(),
        (Value::Str(s), _) => quote(s, |c| format!("\\x{:02x}", c as u32)),
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
        "def {}({}) -> {}:",
        function_name(&sig.name, profile),
        params.join(", "),
        map_type(&sig.returns, profile)?
    ))
}

const HELPERS: &str = r#"def _tt_close(a, e):
    if _tt_math.isnan(a) or _tt_math.isinf(a):
        return False
    d = abs(a - e)
    return d <= 1e-6 or d <= 1e-6 * max(abs(a), abs(e))


def _tt_eq(a, e):
    if e is None:
        return a is None
    if isinstance(e, bool):
        return isinstance(a, bool) and a == e
    if isinstance(e, int):
        return isinstance(a, int) and not isinstance(a, bool) and a == e
    if isinstance(e, float):
        if isinstance(a, bool) or not isinstance(a, (int, float)):
            return False
        return _tt_close(float(a), e)
    if isinstance(e, str):
        return isinstance(a, str) and a == e
    if isinstance(e, list):
        if not isinstance(a, (list, tuple)) or len(a) != len(e):
            return False
        return all(_tt_eq(x, y) for x, y in zip(a, e))
    if isinstance(e, dict):
        if not isinstance(a, dict) or len(a) != len(e):
            return False
        for k, v in e.items():
            if k not in a or not _tt_eq(a[k], v):
                return False
        return True
    return a == e
"#;

pub(super) fn driver(p: &Problem, profile: &LanguageProfile) -> Result<String, CodegenError> {
    // validates that every type has a rule
    signature(&p.signature, profile)?;
    let cases = render_cases(p, profile)?;
    let fname = function_name(&p.signature.name, profile);
    let mut s = String::new();
    writeln!(s, "# Test program for `{}` (generated)", p.id).unwrap();
    s.push_str("import math as _tt_math\nimport sys as _tt_sys\nfrom typing import *\n\n");
    s.push_str(&placeholder_line(Dialect::Python));
    s.push_str("\n\n\n");
    s.push_str(HELPERS);
    s.push_str("\n\ndef _tt_main():\n    failures = 0\n");
    for (i, c) in cases.iter().enumerate() {
        writeln!(s, "    _tt_actual = {fname}({})", c.args.join(", ")).unwrap();
        writeln!(s, "    if _tt_eq(_tt_actual, {}):", c.expected).unwrap();
        writeln!(s, "        print(\"CASE {i} PASS\", flush=True)").unwrap();
        s.push_str("    else:\n");
        writeln!(s, "        print(\"CASE {i} FAIL\", flush=True)").unwrap();
        s.push_str("        failures += 1\n");
    }
    s.push_str("    _tt_sys.exit(0 if failures == 0 else 1)\n\n\nif __name__ == \"__main__\":\n    _tt_main()\n");
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literals() {
        let t = TypeExpr::map(TypeExpr::Bool, TypeExpr::optional(TypeExpr::Str));
        let v = Value::Map(vec![
            (Value::Bool(true), Value::Null),
            (Value::Bool(false), Value::Str("x\n\u{1}é".into())),
        ]);
        assert_eq!(literal(&v, &t), r#"{True: None, False: "x\n\x01é"}"#);
        assert_eq!(literal(&Value::Double(2.0), &TypeExpr::Double), "2.0");
        assert_eq!(literal(&Value::Int(i64::MIN), &TypeExpr::Int), "-9223372036854775808");
    }
}

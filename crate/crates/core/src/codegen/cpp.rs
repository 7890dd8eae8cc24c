use std::fmt::Write;

use super::{float_repr, function_name, map_type, param_name, placeholder_line, quote, render_cases, CodegenError, Dialect, LanguageProfile};
use crate::problem::{Problem, Signature, TypeExpr, Value};

pub(super) const RESERVED: &[&str] = &[
    "alignas", "alignof", "and", "and_eq", "asm", "auto", "bitand", "bitor", "bool", "break", "case", "catch",
    "char", "class", "compl", "const", "constexpr", "const_cast", "continue", "decltype", "default", "delete", "do",
    "double", "dynamic_cast", "else", "enum", "explicit", "export", "extern", "false", "float", "for", "friend",
    "goto", "if", "inline", "int", "long", "mutable", "namespace", "new", "noexcept", "not", "not_eq", "nullptr",
    "operator", "or", "or_eq", "private", "protected", "public", "register", "reinterpret_cast", "return", "short",
    "signed", "sizeof", "static", "static_assert", "static_cast", "struct", "switch", "template", "this",
    "thread_local", "throw", "true", "try", "typedef", "typeid", "typename", "union", "unsigned", "using",
    "virtual", "void", "volatile", "wchar_t", "while", "xor", "xor_eq", "main", "std", "failures", "expected",
    "actual",
];

pub(super) fn literal(v: &Value, t: &TypeExpr, profile: &LanguageProfile) -> Result<String, CodegenError> {
    Ok(match (v, t) {
        (Value::Null, TypeExpr::Optional(_)) => format!("{}()", map_type(t, profile)?),
        (v, TypeExpr::Optional(inner)) => {
            format!("{}({})", map_type(t, profile)?, literal(v, inner, profile)?)
        }
        (Value::Int(i), _) => {
            if *i == i64::MIN {
                "INT64_MIN".into()
            } else if *i < 0 {
                format!("-INT64_C({})", i.unsigned_abs())
            } else {
                format!("INT64_C({i})")
            }
        }
        (Value::Double(d), _) => float_repr(*d),
        (Value::Bool(b), _) => b.to_string(),
        (Value::Str(s), _) => format!(
            "{}({})",
            map_type(t, profile)?,
            quote(s, |c| format!("\\{:03o}", c as u32))
        ),
        (Value::List(items), TypeExpr::List(elem)) => {
            let parts = items
                .iter()
                .map(|x| literal(x, elem, profile))
                .collect::<Result<Vec<_>, _>>()?;
            format!("{}{{{}}}", map_type(t, profile)?, parts.join(", "))
        }
        (Value::Map(entries), TypeExpr::Map(kt, vt)) => {
            let parts = entries
                .iter()
                .map(|(k, v)| Ok(format!("{{{}, {}}}", literal(k, kt, profile)?, literal(v, vt, profile)?)))
                .collect::<Result<Vec<_>, CodegenError>>()?;
            format!("{}{{{}}}", map_type(t, profile)?, parts.join(", "))
        }
        _ => unreachable!("value conformance checked by caller"),
    })
}

pub(super) fn signature(sig: &Signature, profile: &LanguageProfile) -> Result<String, CodegenError> {
    let params = sig
        .params
        .iter()
        .map(|p| Ok(format!("{} {}", map_type(&p.ty, profile)?, param_name(&p.name, profile))))
        .collect::<Result<Vec<_>, CodegenError>>()?;
    Ok(format!(
        "{} {}({})",
        map_type(&sig.returns, profile)?,
        function_name(&sig.name, profile),
        params.join(", ")
    ))
}

const HEADERS: &str = "#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>
";

const HELPERS: &str = r#"namespace tt_driver {
bool eq(int64_t a, int64_t e);
bool eq(double a, double e);
bool eq(bool a, bool e);
bool eq(const std::string& a, const std::string& e);
template <class T> bool eq(const std::vector<T>& a, const std::vector<T>& e);
template <class K, class V> bool eq(const std::map<K, V>& a, const std::map<K, V>& e);
template <class T> bool eq(const std::optional<T>& a, const std::optional<T>& e);

bool eq(int64_t a, int64_t e) { return a == e; }
bool eq(double a, double e) {
    if (std::isnan(a) || std::isinf(a)) return false;
    double d = std::fabs(a - e);
    return d <= 1e-6 || d <= 1e-6 * std::max(std::fabs(a), std::fabs(e));
}
bool eq(bool a, bool e) { return a == e; }
bool eq(const std::string& a, const std::string& e) { return a == e; }
template <class T> bool eq(const std::vector<T>& a, const std::vector<T>& e) {
    if (a.size() != e.size()) return false;
    for (size_t i = 0; i < e.size(); ++i) {
        const T x = a[i];
        const T y = e[i];
        if (!eq(x, y)) return false;
    }
    return true;
}
template <class K, class V> bool eq(const std::map<K, V>& a, const std::map<K, V>& e) {
    if (a.size() != e.size()) return false;
    for (const auto& kv : e) {
        auto it = a.find(kv.first);
        if (it == a.end() || !eq(it->second, kv.second)) return false;
    }
    return true;
}
template <class T> bool eq(const std::optional<T>& a, const std::optional<T>& e) {
    if (!a.has_value() || !e.has_value()) return a.has_value() == e.has_value();
    return eq(*a, *e);
}
}  // namespace tt_driver
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
    s.push_str(HEADERS);
    s.push('\n');
    s.push_str(&placeholder_line(Dialect::Cpp));
    s.push_str("\n\n");
    s.push_str(HELPERS);
    s.push_str("\nint main() {\n    int failures = 0;\n");
    for (i, c) in cases.iter().enumerate() {
        s.push_str("    {\n");
        let mut names = Vec::with_capacity(c.args.len());
        for (j, (arg, ty)) in c.args.iter().zip(&arg_types).enumerate() {
            writeln!(s, "        {ty} a{j} = {arg};").unwrap();
            names.push(format!("a{j}"));
        }
        writeln!(s, "        {ret} expected = {};", c.expected).unwrap();
        writeln!(s, "        {ret} actual = {fname}({});", names.join(", ")).unwrap();
        s.push_str("        if (tt_driver::eq(actual, expected)) {\n");
        writeln!(s, "            std::cout << \"CASE {i} PASS\" << std::endl;").unwrap();
        s.push_str("        } else {\n");
        writeln!(s, "            std::cout << \"CASE {i} FAIL\" << std::endl;").unwrap();
        s.push_str("            ++failures;\n        }\n    }\n");
    }
    s.push_str("    return failures == 0 ? 0 : 1;\n}\n");
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literals() {
        let cpp = LanguageProfile::cpp();
        let t = TypeExpr::map(TypeExpr::Int, TypeExpr::optional(TypeExpr::Str));
        let v = Value::Map(vec![
            (Value::Int(-1), Value::Null),
            (Value::Int(2), Value::Str("a\u{7}".into())),
        ]);
        assert_eq!(
            literal(&v, &t, &cpp).unwrap(),
            r#"std::map<int64_t, std::optional<std::string>>{{-INT64_C(1), std::optional<std::string>()}, {INT64_C(2), std::optional<std::string>(std::string("a\007"))}}"#
        );
        assert_eq!(literal(&Value::Int(i64::MIN), &TypeExpr::Int, &cpp).unwrap(), "INT64_MIN");
    }
}

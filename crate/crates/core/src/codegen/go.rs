use std::fmt::Write;

use super::{float_repr, function_name, map_type, param_name, placeholder_line, quote, render_cases, replace_placeholder, CodegenError, Dialect, LanguageProfile};
use crate::problem::{Problem, Signature, TypeExpr, Value};

pub(super) const RESERVED: &[&str] = &[
    "break", "case", "chan", "const", "continue", "default", "defer", "else", "fallthrough", "for", "func", "go",
    "goto", "if", "import", "interface", "map", "package", "range", "return", "select", "struct", "switch", "type",
    "var", "bool", "string", "int", "int64", "float64", "byte", "rune", "any", "error", "len", "cap", "append",
    "make", "new", "nil", "true", "false", "copy", "delete", "panic", "print", "println", "max", "min", "main",
    "fmt", "os", "math", "reflect", "ttEq", "ttPtr", "ttClose", "failures", "expected", "actual",
];

const IMPORTS_MARKER: &str = "\t// @@IMPORTS@@";
const DRIVER_IMPORTS: &[&str] = &["\"fmt\"", "\"math\"", "\"os\"", "\"reflect\""];

pub(super) fn literal(v: &Value, t: &TypeExpr, profile: &LanguageProfile) -> Result<String, CodegenError> {
    Ok(match (v, t) {
        (Value::Null, TypeExpr::Optional(_)) => format!("({})(nil)", map_type(t, profile)?),
        (v, TypeExpr::Optional(inner)) => {
            format!("ttPtr[{}]({})", map_type(inner, profile)?, literal(v, inner, profile)?)
        }
        (Value::Int(i), _) => i.to_string(),
        (Value::Double(d), _) => float_repr(*d),
        (Value::Bool(b), _) => b.to_string(),
        (Value::Str(s), _) => quote(s, |c| format!("\\x{:02x}", c as u32)),
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
                .map(|(k, v)| Ok(format!("{}: {}", literal(k, kt, profile)?, literal(v, vt, profile)?)))
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
        .map(|p| Ok(format!("{} {}", param_name(&p.name, profile), map_type(&p.ty, profile)?)))
        .collect::<Result<Vec<_>, CodegenError>>()?;
    Ok(format!(
        "func {}({}) {}",
        function_name(&sig.name, profile),
        params.join(", "),
        map_type(&sig.returns, profile)?
    ))
}

const HELPERS: &str = r#"func ttPtr[T any](v T) *T { return &v }

func ttClose(a, e float64) bool {
	if math.IsNaN(a) || math.IsInf(a, 0) {
		return false
	}
	d := math.Abs(a - e)
	return d <= 1e-6 || d <= 1e-6*math.Max(math.Abs(a), math.Abs(e))
}

func ttEq(a, e reflect.Value) bool {
	switch e.Kind() {
	case reflect.Float64:
		return a.Kind() == reflect.Float64 && ttClose(a.Float(), e.Float())
	case reflect.Slice:
		if a.Len() != e.Len() {
			return false
		}
		for i := 0; i < e.Len(); i++ {
			if !ttEq(a.Index(i), e.Index(i)) {
				return false
			}
		}
		return true
	case reflect.Map:
		if a.Len() != e.Len() {
			return false
		}
		iter := e.MapRange()
		for iter.Next() {
			av := a.MapIndex(iter.Key())
			if !av.IsValid() || !ttEq(av, iter.Value()) {
				return false
			}
		}
		return true
	case reflect.Ptr:
		if a.IsNil() || e.IsNil() {
			return a.IsNil() && e.IsNil()
		}
		return ttEq(a.Elem(), e.Elem())
	default:
		return a.Interface() == e.Interface()
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
    s.push_str("package main\n\nimport (\n");
    for imp in DRIVER_IMPORTS {
        writeln!(s, "\t{imp}").unwrap();
    }
    s.push_str(IMPORTS_MARKER);
    s.push_str("\n)\n\n");
    s.push_str(&placeholder_line(Dialect::Go));
    s.push_str("\n\n");
    s.push_str(HELPERS);
    s.push_str("\nfunc main() {\n\tfailures := 0\n");
    for (i, c) in cases.iter().enumerate() {
        s.push_str("\t{\n");
        let mut names = Vec::with_capacity(c.args.len());
        for (j, (arg, ty)) in c.args.iter().zip(&arg_types).enumerate() {
            writeln!(s, "\t\tvar a{j} {ty} = {arg}").unwrap();
            names.push(format!("a{j}"));
        }
        writeln!(s, "\t\tvar expected {ret} = {}", c.expected).unwrap();
        writeln!(s, "\t\tvar actual {ret} = {fname}({})", names.join(", ")).unwrap();
        s.push_str("\t\tif ttEq(reflect.ValueOf(actual), reflect.ValueOf(expected)) {\n");
        writeln!(s, "\t\t\tfmt.Println(\"CASE {i} PASS\")").unwrap();
        s.push_str("\t\t} else {\n");
        writeln!(s, "\t\t\tfmt.Println(\"CASE {i} FAIL\")").unwrap();
        s.push_str("\t\t\tfailures++\n\t\t}\n\t}\n");
    }
    s.push_str("\tif failures > 0 {\n\t\tos.Exit(1)\n\t}\n}\n");
    Ok(s)
}

/// Splits candidate Go code into import specs and the remaining body,
/// dropping any package clause.
pub(crate) fn split_imports(candidate: &str) -> (Vec<String>, String) {
    let mut specs = Vec::new();
    let mut body = Vec::new();
    let mut in_block = false;
    for line in candidate.lines() {
        let t = line.trim();
        if in_block {
            if t.starts_with(')') {
                in_block = false;
            } else if !t.is_empty() && !t.starts_with("//") {
                specs.push(t.to_string());
            }
            continue;
        }
        if t.starts_with("package ") {
            continue;
        }
        if let Some(rest) = t.strip_prefix("import") {
            let rest = rest.trim();
            if let Some(inner) = rest.strip_prefix('(') {
                let inner = inner.trim();
                if let Some(one_line) = inner.strip_suffix(')') {
                    specs.extend(
                        one_line
                            .split(';')
                            .map(str::trim)
                            .filter(|x| !x.is_empty())
                            .map(str::to_string),
                    );
                } else {
                    in_block = true;
                    if !inner.is_empty() {
                        specs.push(inner.to_string());
                    }
                }
                continue;
            }
            if rest.contains('"') {
                specs.push(rest.to_string());
                continue;
            }
        }
        body.push(line);
    }
    (specs, body.join("\n"))
}

pub(super) fn splice(source: &str, candidate: &str) -> String {
    let (specs, body) = split_imports(candidate);
    let mut extra = String::new();
    let mut seen: Vec<String> = DRIVER_IMPORTS.iter().map(|s| s.to_string()).collect();
    for spec in specs {
        if !seen.contains(&spec) {
            writeln!(extra, "\t{spec}").unwrap();
            seen.push(spec);
        }
    }
    let with_imports = source.replacen(&format!("{IMPORTS_MARKER}\n"), &extra, 1);
    replace_placeholder(&with_imports, Dialect::Go, &body)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literals() {
        let go = LanguageProfile::go();
        let t = TypeExpr::list(TypeExpr::optional(TypeExpr::Int));
        let v = Value::List(vec![Value::Int(3), Value::Null]);
        assert_eq!(literal(&v, &t, &go).unwrap(), "[]*int64{ttPtr[int64](3), (*int64)(nil)}");
        let t = TypeExpr::map(TypeExpr::Str, TypeExpr::list(TypeExpr::Int));
        let v = Value::Map(vec![(Value::Str("a".into()), Value::List(vec![]))]);
        assert_eq!(literal(&v, &t, &go).unwrap(), r#"map[string][]int64{"a": []int64{}}"#);
    }

    #[test]
    fn import_hoisting() {
        let cand = "package main\n\nimport (\n\t\"fmt\"\n\t\"strings\"\n)\nimport \"sort\"\n\nfunc f() {}\n";
        let (specs, body) = split_imports(cand);
        assert_eq!(specs, vec!["\"fmt\"", "\"strings\"", "\"sort\""]);
        assert_eq!(body.trim(), "func f() {}");
        let src = format!("import (\n\t\"fmt\"\n{IMPORTS_MARKER}\n)\n\n// @@CANDIDATE@@\n");
        let out = splice(&src, cand);
        assert_eq!(out.matches("\"fmt\"").count(), 1);
        assert!(out.contains("\t\"strings\"\n\t\"sort\"\n)"));
        assert!(out.contains("func f() {}"));
        assert!(!out.contains("package main\n\nimport"));
    }
}

//! Return-value mutants of canonical solutions.
//!
//! A mutant renames the original function to `<name>_mut_orig` and adds a
//! wrapper with the original signature that alters the result. Tests that
//! are sound must report at least one `FAIL` for every mutant.

use std::fmt::Write;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::codegen::{function_name, param_name, render_literal, render_signature, CodegenError, Dialect, LanguageProfile};
use crate::problem::{Signature, TypeExpr, Value};

const ORIG_SUFFIX: &str = "_mut_orig";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mutation {
    /// Type-directed change of the returned value: `+1` on ints, negation
    /// on bools, an extra element on lists, and so on.
    PerturbReturn,
    /// Ignores the input and returns the zero value of the return type.
    ConstantReturn,
}

pub const STANDARD_MUTATIONS: [Mutation; 2] = [Mutation::PerturbReturn, Mutation::ConstantReturn];

impl Mutation {
    pub fn name(self) -> &'static str {
        match self {
            Mutation::PerturbReturn => "perturb_return",
            Mutation::ConstantReturn => "constant_return",
        }
    }
}

/// The zero value of a type: `0`, `0.0`, `false`, `""`, empty containers, null.
pub fn default_value(t: &TypeExpr) -> Value {
    match t {
        TypeExpr::Int => Value::Int(0),
        TypeExpr::Double => Value::Double(0.0),
        TypeExpr::Bool => Value::Bool(false),
        TypeExpr::Str => Value::Str(String::new()),
        TypeExpr::List(_) => Value::List(vec![]),
        TypeExpr::Map(_, _) => Value::Map(vec![]),
        TypeExpr::Optional(_) => Value::Null,
    }
}

/// Applies `m` to a solution of `sig` written for `profile`.
pub fn mutate(solution: &str, sig: &Signature, profile: &LanguageProfile, m: Mutation) -> Result<String, CodegenError> {
    let fname = function_name(&sig.name, profile);
    let re = Regex::new(&format!(r"\b{}\b", regex::escape(&fname))).expect("valid regex");
    let renamed = re.replace_all(solution, format!("{fname}{ORIG_SUFFIX}").as_str());
    let args: Vec<String> = sig.params.iter().map(|p| param_name(&p.name, profile)).collect();
    let call = format!("{fname}{ORIG_SUFFIX}({})", args.join(", "));
    let header = render_signature(sig, profile)?;
    let d = profile.dialect;
    let r = result_var(d);
    let mut body: Vec<String> = Vec::new();
    match m {
        Mutation::ConstantReturn => {
            let lit = render_literal(&default_value(&sig.returns), &sig.returns, profile)?;
            body.push(match d {
                Dialect::Python | Dialect::Go => format!("return {lit}"),
                _ => format!("return {lit};"),
            });
        }
        Mutation::PerturbReturn => {
            body.push(match d {
                Dialect::Python => format!("{r} = {call}"),
                Dialect::Go => format!("{r} := {call}"),
                Dialect::Cpp => format!("auto {r} = {call};"),
                Dialect::Rust => format!("let mut {r} = {call};"),
                Dialect::Pseudo => format!("let {r} = {call};"),
            });
            body.extend(perturb(&sig.returns, d, profile)?);
            body.push(match d {
                Dialect::Python | Dialect::Go => format!("return {r}"),
                _ => format!("return {r};"),
            });
        }
    }
    let mut out = renamed.trim_end().to_string();
    out.push_str("\n\n");
    match d {
        Dialect::Python => {
            writeln!(out, "{header}").unwrap();
            for line in body {
                writeln!(out, "    {line}").unwrap();
            }
        }
        _ => {
            writeln!(out, "{header} {{").unwrap();
            for line in body {
                writeln!(out, "    {line}").unwrap();
            }
            out.push_str("}\n");
        }
    }
    Ok(out)
}

fn result_var(d: Dialect) -> &'static str {
    match d {
        Dialect::Python => "_tt_r",
        Dialect::Go => "ttR",
        _ => "tt_r",
    }
}

fn perturb(t: &TypeExpr, d: Dialect, profile: &LanguageProfile) -> Result<Vec<String>, CodegenError> {
    let r = result_var(d);
    let lit = |v: &Value, t: &TypeExpr| render_literal(v, t, profile);
    let lines: Vec<String> = match (t, d) {
        (TypeExpr::Int, Dialect::Python) => vec![format!("{r} = {r} - 1 if {r} == 9223372036854775807 else {r} + 1")],
        (TypeExpr::Int, Dialect::Go) => vec![format!("if {r} == math.MaxInt64 {{ {r}-- }} else {{ {r}++ }}")],
        (TypeExpr::Int, Dialect::Cpp) => vec![format!("{r} = {r} == INT64_MAX ? {r} - 1 : {r} + 1;")],
        (TypeExpr::Int, Dialect::Rust) => vec![format!("{r} = if {r} == i64::MAX {{ {r} - 1 }} else {{ {r} + 1 }};")],
        (TypeExpr::Int, Dialect::Pseudo) => {
            vec![format!("if {r} == 9223372036854775807 {{ {r} = {r} - 1; }} else {{ {r} = {r} + 1; }}")]
        }
        (TypeExpr::Double, Dialect::Python) => vec![format!("{r} = {r} + 1.0 + abs({r})")],
        (TypeExpr::Double, Dialect::Go) => vec![format!("{r} = {r} + 1.0 + math.Abs({r})")],
        (TypeExpr::Double, Dialect::Cpp) => vec![format!("{r} = {r} + 1.0 + std::fabs({r});")],
        (TypeExpr::Double, Dialect::Rust) => vec![format!("{r} = {r} + 1.0 + {r}.abs();")],
        (TypeExpr::Double, Dialect::Pseudo) => vec![format!("{r} = {r} + 1.0 + abs({r});")],
        (TypeExpr::Bool, Dialect::Python) => vec![format!("{r} = not {r}")],
        (TypeExpr::Bool, Dialect::Go) => vec![format!("{r} = !{r}")],
        (TypeExpr::Bool, _) => vec![format!("{r} = !{r};")],
        (TypeExpr::Str, Dialect::Python) => vec![format!("{r} = {r} + \"x\"")],
        (TypeExpr::Str, Dialect::Go) => vec![format!("{r} = {r} + \"x\"")],
        (TypeExpr::Str, Dialect::Cpp) => vec![format!("{r} += \"x\";")],
        (TypeExpr::Str, Dialect::Rust) => vec![format!("{r}.push_str(\"x\");")],
        (TypeExpr::Str, Dialect::Pseudo) => vec![format!("{r} = {r} + \"x\";")],
        (TypeExpr::List(e), _) => {
            let x = lit(&default_value(e), e)?;
            vec![match d {
                Dialect::Python => format!("{r} = list({r}) + [{x}]"),
                Dialect::Go => format!("{r} = append({r}, {x})"),
                Dialect::Cpp => format!("{r}.push_back({x});"),
                Dialect::Rust => format!("{r}.push({x});"),
                Dialect::Pseudo => format!("{r} = append({r}, {x});"),
            }]
        }
        (TypeExpr::Map(k, v), _) => {
            let (dk, dv) = (lit(&default_value(k), k)?, lit(&default_value(v), v)?);
            match d {
                Dialect::Python => vec![
                    format!("if {r}:"),
                    format!("    {r} = dict(list({r}.items())[1:])"),
                    "else:".into(),
                    format!("    {r} = {{{dk}: {dv}}}"),
                ],
                Dialect::Go => vec![
                    format!("if len({r}) == 0 {{"),
                    format!(
                        "    {r} = {}",
                        lit(&Value::Map(vec![(default_value(k), default_value(v))]), t)?
                    ),
                    "} else {".into(),
                    format!("    for ttK := range {r} {{"),
                    format!("        delete({r}, ttK)"),
                    "        break".into(),
                    "    }".into(),
                    "}".into(),
                ],
                Dialect::Cpp => vec![format!("if ({r}.empty()) {r}[{dk}] = {dv}; else {r}.erase({r}.begin());")],
                Dialect::Rust => vec![
                    format!("if {r}.is_empty() {{"),
                    format!("    {r}.insert({dk}, {dv});"),
                    "} else {".into(),
                    format!("    let tt_k = {r}.keys().next().unwrap().clone();"),
                    format!("    {r}.remove(&tt_k);"),
                    "}".into(),
                ],
                Dialect::Pseudo => vec![format!(
                    "if len({r}) == 0 {{ {r} = put({r}, {dk}, {dv}); }} else {{ {r} = remove({r}, keys({r})[0]); }}"
                )],
            }
        }
        (TypeExpr::Optional(inner), _) => {
            let x = lit(&default_value(inner), inner)?;
            match d {
                Dialect::Python => vec![format!("{r} = {x} if {r} is None else None")],
                Dialect::Go => vec![
                    format!("if {r} == nil {{"),
                    format!("    ttV := {}", go_value_literal(inner, &x, profile)?),
                    format!("    {r} = &ttV"),
                    "} else {".into(),
                    format!("    {r} = nil"),
                    "}".into(),
                ],
                Dialect::Cpp => vec![format!("if ({r}.has_value()) {r}.reset(); else {r} = {x};")],
                Dialect::Rust => vec![format!("{r} = if {r}.is_some() {{ None }} else {{ Some({x}) }};")],
                Dialect::Pseudo => vec![format!("if is_null({r}) {{ {r} = {x}; }} else {{ {r} = null; }}")],
            }
        }
    };
    Ok(lines)
}

/// Untyped Go constants need a conversion so `:=` infers the profile type.
fn go_value_literal(t: &TypeExpr, lit: &str, profile: &LanguageProfile) -> Result<String, CodegenError> {
    Ok(match t {
        TypeExpr::Int | TypeExpr::Double => format!("{}({lit})", crate::codegen::map_type(t, profile)?),
        _ => lit.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn add_sig() -> Signature {
        Signature::new("add", vec![("a", TypeExpr::Int), ("b", TypeExpr::Int)], TypeExpr::Int)
    }

    #[test]
    fn python_perturb_wraps_original() {
        let src = "def add(a: int, b: int) -> int:\n    return a + b\n";
        let m = mutate(src, &add_sig(), &LanguageProfile::python(), Mutation::PerturbReturn).unwrap();
        assert!(m.starts_with("def add_mut_orig(a: int, b: int) -> int:"));
        assert!(m.contains("    _tt_r = add_mut_orig(a, b)\n"));
        assert!(m.ends_with("    return _tt_r\n"));
    }

    #[test]
    fn pseudo_mutants_change_results() {
        let src = "fn add(a: int, b: int) -> int { return a + b; }";
        let p = LanguageProfile::pseudo();
        let args = [Value::Int(2), Value::Int(3)];
        let perturbed = mutate(src, &add_sig(), &p, Mutation::PerturbReturn).unwrap();
        assert_eq!(crate::pseudo::call_function(&perturbed, "add", &args), Ok(Value::Int(6)));
        let constant = mutate(src, &add_sig(), &p, Mutation::ConstantReturn).unwrap();
        assert_eq!(crate::pseudo::call_function(&constant, "add", &args), Ok(Value::Int(0)));
    }

    #[test]
    fn pseudo_container_perturbations() {
        let p = LanguageProfile::pseudo();
        let sig = Signature::new(
            "f",
            vec![],
            TypeExpr::map(TypeExpr::Str, TypeExpr::optional(TypeExpr::Int)),
        );
        let src = "fn f() -> map<str, opt<int>> { return {\"a\": 1, \"b\": null}; }";
        let out = mutate(src, &sig, &p, Mutation::PerturbReturn).unwrap();
        assert_eq!(
            crate::pseudo::call_function(&out, "f", &[]),
            Ok(Value::Map(vec![(Value::Str("b".into()), Value::Null)]))
        );
        let sig = Signature::new("g", vec![], TypeExpr::optional(TypeExpr::Double));
        let out = mutate("fn g() -> opt<double> { return null; }", &sig, &p, Mutation::PerturbReturn).unwrap();
        assert_eq!(crate::pseudo::call_function(&out, "g", &[]), Ok(Value::Double(0.0)));
    }

    #[test]
    fn renaming_respects_word_boundaries() {
        let sig = Signature::new("f", vec![("x", TypeExpr::Int)], TypeExpr::Int);
        let src = "fn f(x: int) -> int { let ff = x; return ff; }";
        let out = mutate(src, &sig, &LanguageProfile::pseudo(), Mutation::PerturbReturn).unwrap();
        assert!(out.contains("fn f_mut_orig(x: int)"));
        assert!(out.contains("let ff = x;"));
    }
}

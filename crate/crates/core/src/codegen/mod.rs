//! Rule-based rendering of types, literals, signatures and self-checking
//! test programs for each language profile.
//!
//! Every generated program prints one `CASE <i> PASS|FAIL` line per test
//! case on stdout and exits 0 iff all cases pass. The candidate solution is
//! spliced in at a single placeholder line.

mod cpp;
mod go;
mod profile;
mod pseudo;
mod python;
mod rust;

use thiserror::Error;

use crate::problem::{Problem, Signature, TypeExpr, Value};

pub use profile::{Casing, Dialect, LanguageProfile, ProfileRegistry, TypeRules, BUILTIN_RUNNER};

/// Marker text that identifies the candidate placeholder line.
pub const CANDIDATE_MARKER: &str = "@@CANDIDATE@@";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodegenError {
    #[error("profile {profile} has no rule for type {ty}")]
    UnsupportedType { profile: String, ty: String },
    #[error("unknown profile {0}")]
    UnknownProfile(String),
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("value does not conform to {0}")]
    NonConforming(String),
}

/// A complete driver program with one candidate placeholder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestProgram {
    pub source: String,
    pub profile_id: String,
    pub problem_id: String,
    dialect: Dialect,
}

impl TestProgram {
    /// The full placeholder line, comment syntax included.
    pub fn placeholder(&self) -> String {
        placeholder_line(self.dialect)
    }

    /// Replaces the placeholder with candidate code.
    pub fn splice(&self, candidate: &str) -> String {
        match self.dialect {
            Dialect::Go => go::splice(&self.source, candidate),
            Dialect::Rust => rust::splice(&self.source, candidate),
            _ => replace_placeholder(&self.source, self.dialect, candidate),
        }
    }
}

pub(crate) fn placeholder_line(dialect: Dialect) -> String {
    match dialect {
        Dialect::Python => format!("# {CANDIDATE_MARKER}"),
        _ => format!("// {CANDIDATE_MARKER}"),
    }
}

pub(crate) fn replace_placeholder(source: &str, dialect: Dialect, candidate: &str) -> String {
    let marker = placeholder_line(dialect);
    let mut body = candidate.trim_end_matches('\n').to_string();
    if body.is_empty() {
        body.push_str("// (empty candidate)");
        if dialect == Dialect::Python {
            body = "# (empty candidate)".into();
        }
    }
    source.replacen(&marker, &body, 1)
}

/// Renders a type in the profile's language.
pub fn map_type(t: &TypeExpr, profile: &LanguageProfile) -> Result<String, CodegenError> {
    let rules = &profile.types;
    let pick = |tpl: &str| -> Result<String, CodegenError> {
        if tpl.trim().is_empty() {
            Err(CodegenError::UnsupportedType {
                profile: profile.id.clone(),
                ty: t.to_string(),
            })
        } else {
            Ok(tpl.to_string())
        }
    };
    match t {
        TypeExpr::Int => pick(&rules.int),
        TypeExpr::Double => pick(&rules.double),
        TypeExpr::Bool => pick(&rules.bool),
        TypeExpr::Str => pick(&rules.str),
        TypeExpr::List(e) => Ok(pick(&rules.list)?.replace("{elem}", &map_type(e, profile)?)),
        TypeExpr::Map(k, v) => Ok(pick(&rules.map)?
            .replace("{key}", &map_type(k, profile)?)
            .replace("{value}", &map_type(v, profile)?)),
        TypeExpr::Optional(e) => Ok(pick(&rules.opt)?.replace("{inner}", &map_type(e, profile)?)),
    }
}

/// Renders `v` (of type `t`) as an expression that evaluates to a deep-equal
/// value in the profile's language.
pub fn render_literal(v: &Value, t: &TypeExpr, profile: &LanguageProfile) -> Result<String, CodegenError> {
    if !crate::problem::value_conforms(v, t) {
        return Err(CodegenError::NonConforming(t.to_string()));
    }
    match profile.dialect {
        Dialect::Python => Ok(python::literal(v, t)),
        Dialect::Go => go::literal(v, t, profile),
        Dialect::Cpp => cpp::literal(v, t, profile),
        Dialect::Rust => rust::literal(v, t),
        Dialect::Pseudo => Ok(pseudo::literal(v, t)),
    }
}

/// Renders a function header with the profile's casing.
pub fn render_signature(sig: &Signature, profile: &LanguageProfile) -> Result<String, CodegenError> {
    match profile.dialect {
        Dialect::Python => python::signature(sig, profile),
        Dialect::Go => go::signature(sig, profile),
        Dialect::Cpp => cpp::signature(sig, profile),
        Dialect::Rust => rust::signature(sig, profile),
        Dialect::Pseudo => pseudo::signature(sig, profile),
    }
}

/// Generates the self-checking driver program for `p`.
pub fn generate_test_program(p: &Problem, profile: &LanguageProfile) -> Result<TestProgram, CodegenError> {
    let source = match profile.dialect {
        Dialect::Python => python::driver(p, profile)?,
        Dialect::Go => go::driver(p, profile)?,
        Dialect::Cpp => cpp::driver(p, profile)?,
        Dialect::Rust => rust::driver(p, profile)?,
        Dialect::Pseudo => pseudo::driver(p, profile)?,
    };
    debug_assert_eq!(source.matches(CANDIDATE_MARKER).count(), 1);
    Ok(TestProgram {
        source,
        profile_id: profile.id.clone(),
        problem_id: p.id.clone(),
        dialect: profile.dialect,
    })
}

/// The re-cased function name as it appears in the profile's language.
pub fn function_name(name: &str, profile: &LanguageProfile) -> String {
    escape_keyword(profile.function_casing.apply(name), profile.dialect)
}

pub fn param_name(name: &str, profile: &LanguageProfile) -> String {
    escape_keyword(profile.param_casing.apply(name), profile.dialect)
}

fn escape_keyword(name: String, dialect: Dialect) -> String {
    let reserved: &[&str] = match dialect {
        Dialect::Python => python::RESERVED,
        Dialect::Go => go::RESERVED,
        Dialect::Cpp => cpp::RESERVED,
        Dialect::Rust => rust::RESERVED,
        Dialect::Pseudo => pseudo::RESERVED,
    };
    if reserved.contains(&name.as_str()) {
        format!("{name}_")
    } else {
        name
    }
}

/// Shortest round-trip decimal for a finite double, always with a `.` or
/// an exponent so every target parses it as floating point.
pub(crate) fn float_repr(d: f64) -> String {
    let s = format!("{d:?}");
    debug_assert!(s.contains('.') || s.contains('e'));
    s
}

/// Escapes `s` for a double-quoted literal. `control` renders characters
/// below 0x20 (other than the named escapes) and DEL.
pub(crate) fn quote(s: &str, control: impl Fn(char) -> String) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '"' => out.push_str("\\\""),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 || c as u32 == 0x7f => out.push_str(&control(c)),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Cases as (argument literals, expected literal), in a given dialect.
pub(crate) struct RenderedCase {
    pub args: Vec<String>,
    pub expected: String,
}

pub(crate) fn render_cases(p: &Problem, profile: &LanguageProfile) -> Result<Vec<RenderedCase>, CodegenError> {
    p.cases
        .iter()
        .map(|c| {
            let args = c
                .inputs
                .iter()
                .zip(&p.signature.params)
                .map(|(v, param)| render_literal(v, &param.ty, profile))
                .collect::<Result<Vec<_>, _>>()?;
            let expected = render_literal(&c.expected, &p.signature.returns, profile)?;
            Ok(RenderedCase { args, expected })
        })
        .collect()
}

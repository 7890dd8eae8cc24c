//! Standardized problem metadata: the closed type algebra, runtime values,
//! signatures, test cases and the problems that bundle them.

mod json;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use thiserror::Error;

pub use json::{emit_problem, parse_problem, parse_type, type_to_json, value_from_json, value_to_json};

/// Maximum nesting depth of a [`TypeExpr`]; scalars have depth 1.
pub const MAX_TYPE_DEPTH: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProblemError {
    #[error("malformed document: {0}")]
    MalformedDocument(String),
    #[error("schema violation: {0}")]
    SchemaViolation(String),
    #[error("invariant violation{}: {message}", case_suffix(*.case))]
    InvariantViolation { case: Option<usize>, message: String },
    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
}

fn case_suffix(case: Option<usize>) -> String {
    match case {
        Some(i) => format!(" (case {i})"),
        None => String::new(),
    }
}

impl ProblemError {
    pub(crate) fn invariant(message: impl Into<String>) -> Self {
        ProblemError::InvariantViolation {
            case: None,
            message: message.into(),
        }
    }

    pub(crate) fn in_case(case: usize, message: impl Into<String>) -> Self {
        ProblemError::InvariantViolation {
            case: Some(case),
            message: message.into(),
        }
    }
}

/// Standardized data type shared by every language profile.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TypeExpr {
    Int,
    Double,
    Bool,
    Str,
    List(Box<TypeExpr>),
    Map(Box<TypeExpr>, Box<TypeExpr>),
    Optional(Box<TypeExpr>),
}

impl TypeExpr {
    pub fn list(elem: TypeExpr) -> Self {
        TypeExpr::List(Box::new(elem))
    }

    pub fn map(key: TypeExpr, value: TypeExpr) -> Self {
        TypeExpr::Map(Box::new(key), Box::new(value))
    }

    pub fn optional(inner: TypeExpr) -> Self {
        TypeExpr::Optional(Box::new(inner))
    }

    pub fn is_scalar(&self) -> bool {
        matches!(
            self,
            TypeExpr::Int | TypeExpr::Double | TypeExpr::Bool | TypeExpr::Str
        )
    }

    /// Scalars allowed as map keys.
    pub fn is_map_key(&self) -> bool {
        matches!(self, TypeExpr::Int | TypeExpr::Str | TypeExpr::Bool)
    }

    pub fn depth(&self) -> usize {
        match self {
            TypeExpr::Int | TypeExpr::Double | TypeExpr::Bool | TypeExpr::Str => 1,
            TypeExpr::List(e) | TypeExpr::Optional(e) => 1 + e.depth(),
            TypeExpr::Map(k, v) => 1 + k.depth().max(v.depth()),
        }
    }

    /// Checks the algebra's structural invariants.
    pub fn validate(&self) -> Result<(), ProblemError> {
        if self.depth() > MAX_TYPE_DEPTH {
            return Err(ProblemError::SchemaViolation(format!(
                "type {self} nests deeper than {MAX_TYPE_DEPTH}"
            )));
        }
        self.validate_shape()
    }

    fn validate_shape(&self) -> Result<(), ProblemError> {
        match self {
            TypeExpr::Int | TypeExpr::Double | TypeExpr::Bool | TypeExpr::Str => Ok(()),
            TypeExpr::List(e) => e.validate_shape(),
            TypeExpr::Map(k, v) => {
                if !k.is_map_key() {
                    return Err(ProblemError::SchemaViolation(format!(
                        "map key must be int, str or bool, found {k}"
                    )));
                }
                v.validate_shape()
            }
            TypeExpr::Optional(inner) => {
                if matches!(**inner, TypeExpr::Optional(_)) {
                    return Err(ProblemError::SchemaViolation(format!(
                        "optional directly wraps optional in {self}"
                    )));
                }
                inner.validate_shape()
            }
        }
    }

    /// Visits this type and all of its components, outermost first.
    pub fn walk(&self, f: &mut impl FnMut(&TypeExpr)) {
        f(self);
        match self {
            TypeExpr::List(e) | TypeExpr::Optional(e) => e.walk(f),
            TypeExpr::Map(k, v) => {
                k.walk(f);
                v.walk(f);
            }
            _ => {}
        }
    }
}

impl fmt::Display for TypeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeExpr::Int => f.write_str("Int"),
            TypeExpr::Double => f.write_str("Double"),
            TypeExpr::Bool => f.write_str("Bool"),
            TypeExpr::Str => f.write_str("Str"),
            TypeExpr::List(e) => write!(f, "List({e})"),
            TypeExpr::Map(k, v) => write!(f, "Map({k}, {v})"),
            TypeExpr::Optional(e) => write!(f, "Optional({e})"),
        }
    }
}

/// A runtime value of the standardized algebra.
///
/// Map entries keep their document order; equality through `PartialEq` is
/// structural and order-sensitive, while [`Value::deep_eq`] implements the
/// comparison used by test drivers.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(i64),
    Double(f64),
    Bool(bool),
    Str(String),
    List(Vec<Value>),
    Map(Vec<(Value, Value)>),
    Null,
}

/// Relative tolerance used when comparing doubles; also the absolute
/// fallback near zero.
pub const DOUBLE_TOLERANCE: f64 = 1e-6;

/// The driver-side double comparison shared by every language profile.
pub fn doubles_close(actual: f64, expected: f64) -> bool {
    if !actual.is_finite() || !expected.is_finite() {
        return false;
    }
    let diff = (actual - expected).abs();
    diff <= DOUBLE_TOLERANCE || diff <= DOUBLE_TOLERANCE * actual.abs().max(expected.abs())
}

impl Value {
    /// Deep equality as the generated drivers compute it: doubles within
    /// tolerance, lists order-sensitive, maps order-insensitive.
    pub fn deep_eq(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => a == b,
            (Value::Double(a), Value::Double(b)) => doubles_close(*a, *b),
            (Value::Bool(a), Value::Bool(b)) => a == b,
            (Value::Str(a), Value::Str(b)) => a == b,
            (Value::Null, Value::Null) => true,
            (Value::List(a), Value::List(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.deep_eq(y))
            }
            (Value::Map(a), Value::Map(b)) => {
                a.len() == b.len()
                    && a.iter().all(|(k, v)| {
                        b.iter()
                            .find(|(k2, _)| k2 == k)
                            .is_some_and(|(_, v2)| v.deep_eq(v2))
                    })
            }
            _ => false,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Value::Int(_) => "int",
            Value::Double(_) => "double",
            Value::Bool(_) => "bool",
            Value::Str(_) => "str",
            Value::List(_) => "list",
            Value::Map(_) => "map",
            Value::Null => "null",
        }
    }
}

/// True iff `v` recursively matches the shape of `t`.
pub fn value_conforms(v: &Value, t: &TypeExpr) -> bool {
    match (v, t) {
        (Value::Null, TypeExpr::Optional(_)) => true,
        (v, TypeExpr::Optional(inner)) => value_conforms(v, inner),
        (Value::Int(_), TypeExpr::Int) => true,
        (Value::Double(d), TypeExpr::Double) => d.is_finite(),
        (Value::Bool(_), TypeExpr::Bool) => true,
        (Value::Str(_), TypeExpr::Str) => true,
        (Value::List(items), TypeExpr::List(elem)) => items.iter().all(|x| value_conforms(x, elem)),
        (Value::Map(entries), TypeExpr::Map(kt, vt)) => {
            let mut seen = Vec::with_capacity(entries.len());
            for (k, v) in entries {
                if !value_conforms(k, kt) || !value_conforms(v, vt) || seen.contains(&k) {
                    return false;
                }
                seen.push(k);
            }
            true
        }
        _ => false,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Param {
    pub name: String,
    pub ty: TypeExpr,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Signature {
    pub name: String,
    pub params: Vec<Param>,
    pub returns: TypeExpr,
}

/// Canonical metadata identifiers are lower snake_case.
pub fn is_snake_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_lowercase() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
}

impl Signature {
    pub fn new(name: impl Into<String>, params: Vec<(&str, TypeExpr)>, returns: TypeExpr) -> Self {
        Signature {
            name: name.into(),
            params: params
                .into_iter()
                .map(|(n, ty)| Param {
                    name: n.to_string(),
                    ty,
                })
                .collect(),
            returns,
        }
    }

    pub fn validate(&self) -> Result<(), ProblemError> {
        if !is_snake_identifier(&self.name) {
            return Err(ProblemError::SchemaViolation(format!(
                "function name {:?} is not a snake_case identifier",
                self.name
            )));
        }
        let mut names = BTreeSet::new();
        for p in &self.params {
            if !is_snake_identifier(&p.name) {
                return Err(ProblemError::SchemaViolation(format!(
                    "parameter name {:?} is not a snake_case identifier",
                    p.name
                )));
            }
            if !names.insert(p.name.as_str()) {
                return Err(ProblemError::invariant(format!(
                    "duplicate parameter name {:?}",
                    p.name
                )));
            }
            p.ty.validate()?;
        }
        self.returns.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestCase {
    pub inputs: Vec<Value>,
    pub expected: Value,
}

impl TestCase {
    pub fn validate(&self, sig: &Signature, index: usize) -> Result<(), ProblemError> {
        if self.inputs.len() != sig.params.len() {
            return Err(ProblemError::in_case(
                index,
                format!(
                    "{} inputs for {} parameters",
                    self.inputs.len(),
                    sig.params.len()
                ),
            ));
        }
        for (i, (v, p)) in self.inputs.iter().zip(&sig.params).enumerate() {
            if !value_conforms(v, &p.ty) {
                return Err(ProblemError::in_case(
                    index,
                    format!("input {i} ({}) does not conform to {}", v.kind(), p.ty),
                ));
            }
        }
        if !value_conforms(&self.expected, &sig.returns) {
            return Err(ProblemError::in_case(
                index,
                format!(
                    "expected value ({}) does not conform to {}",
                    self.expected.kind(),
                    sig.returns
                ),
            ));
        }
        Ok(())
    }
}

/// Hand-authored line alignment for one ordered language pair.
pub type Alignment = Vec<(String, String)>;

#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub id: String,
    pub description: String,
    pub signature: Signature,
    pub cases: Vec<TestCase>,
    /// language id -> canonical solution source
    pub solutions: BTreeMap<String, String>,
    /// language id -> import statements the solution needs
    pub imports: BTreeMap<String, Vec<String>>,
    /// (source id, target id) -> aligned solution lines, used by line-by-line demos
    pub alignments: BTreeMap<(String, String), Alignment>,
}

impl Problem {
    pub fn new(id: impl Into<String>, signature: Signature, cases: Vec<TestCase>) -> Self {
        Problem {
            id: id.into(),
            description: String::new(),
            signature,
            cases,
            solutions: BTreeMap::new(),
            imports: BTreeMap::new(),
            alignments: BTreeMap::new(),
        }
    }

    pub fn validate(&self) -> Result<(), ProblemError> {
        if self.id.trim().is_empty() {
            return Err(ProblemError::SchemaViolation("empty problem id".into()));
        }
        self.signature.validate()?;
        if self.cases.is_empty() {
            return Err(ProblemError::invariant("a problem needs at least one case"));
        }
        for (i, case) in self.cases.iter().enumerate() {
            case.validate(&self.signature, i)?;
        }
        Ok(())
    }

    pub fn solution(&self, lang: &str) -> Option<&str> {
        self.solutions.get(lang).map(String::as_str)
    }

    pub fn alignment(&self, source: &str, target: &str) -> Option<&Alignment> {
        self.alignments
            .get(&(source.to_string(), target.to_string()))
    }
}

/// An ordered collection of problems with unique ids.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProblemSet {
    pub problems: Vec<Problem>,
}

impl ProblemSet {
    pub fn new(problems: Vec<Problem>) -> Result<Self, ProblemError> {
        let mut ids = BTreeSet::new();
        for p in &problems {
            if !ids.insert(p.id.as_str()) {
                return Err(ProblemError::invariant(format!(
                    "duplicate problem id {:?}",
                    p.id
                )));
            }
        }
        Ok(ProblemSet { problems })
    }

    /// Loads every `*.json` file in `dir`, ordered by file name.
    pub fn load_dir(dir: &Path) -> Result<Self, ProblemError> {
        let io_err = |e: std::io::Error| ProblemError::Io {
            path: dir.display().to_string(),
            message: e.to_string(),
        };
        let mut paths = std::fs::read_dir(dir)
            .map_err(io_err)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect::<Vec<_>>();
        paths.sort();
        let mut problems = Vec::with_capacity(paths.len());
        for path in paths {
            let text = std::fs::read_to_string(&path).map_err(|e| ProblemError::Io {
                path: path.display().to_string(),
                message: e.to_string(),
            })?;
            let problem = parse_problem(&text).map_err(|e| match e {
                ProblemError::MalformedDocument(m) => {
                    ProblemError::MalformedDocument(format!("{}: {m}", path.display()))
                }
                ProblemError::SchemaViolation(m) => {
                    ProblemError::SchemaViolation(format!("{}: {m}", path.display()))
                }
                ProblemError::InvariantViolation { case, message } => {
                    ProblemError::InvariantViolation {
                        case,
                        message: format!("{}: {message}", path.display()),
                    }
                }
                other => other,
            })?;
            problems.push(problem);
        }
        ProblemSet::new(problems)
    }

    pub fn get(&self, id: &str) -> Option<&Problem> {
        self.problems.iter().find(|p| p.id == id)
    }

    pub fn len(&self) -> usize {
        self.problems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.problems.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Problem> {
        self.problems.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conforms_examples() {
        let ints = Value::List(vec![Value::Int(1), Value::Int(2)]);
        assert!(value_conforms(&ints, &TypeExpr::list(TypeExpr::Int)));
        assert!(value_conforms(&Value::Null, &TypeExpr::optional(TypeExpr::Str)));
        assert!(!value_conforms(&Value::Null, &TypeExpr::Str));
        let m = Value::Map(vec![(Value::Str("a".into()), Value::List(vec![]))]);
        assert!(value_conforms(
            &m,
            &TypeExpr::map(TypeExpr::Str, TypeExpr::list(TypeExpr::Int))
        ));
    }

    #[test]
    fn duplicate_map_keys_do_not_conform() {
        let m = Value::Map(vec![
            (Value::Int(1), Value::Bool(true)),
            (Value::Int(1), Value::Bool(false)),
        ]);
        assert!(!value_conforms(&m, &TypeExpr::map(TypeExpr::Int, TypeExpr::Bool)));
    }

    #[test]
    fn non_finite_doubles_rejected() {
        assert!(!value_conforms(&Value::Double(f64::NAN), &TypeExpr::Double));
        assert!(!value_conforms(&Value::Double(f64::INFINITY), &TypeExpr::Double));
    }

    #[test]
    fn type_invariants() {
        assert!(TypeExpr::map(TypeExpr::list(TypeExpr::Int), TypeExpr::Int)
            .validate()
            .is_err());
        assert!(TypeExpr::map(TypeExpr::Double, TypeExpr::Int).validate().is_err());
        assert!(TypeExpr::optional(TypeExpr::optional(TypeExpr::Int))
            .validate()
            .is_err());
        // optional of list of optional is fine
        assert!(TypeExpr::optional(TypeExpr::list(TypeExpr::optional(TypeExpr::Int)))
            .validate()
            .is_ok());
        let mut t = TypeExpr::Int;
        for _ in 0..7 {
            t = TypeExpr::list(t);
        }
        assert_eq!(t.depth(), 8);
        assert!(t.validate().is_ok());
        assert!(TypeExpr::list(t).validate().is_err());
    }

    #[test]
    fn case_arity_reports_index() {
        let sig = Signature::new("add", vec![("a", TypeExpr::Int), ("b", TypeExpr::Int)], TypeExpr::Int);
        let mut p = Problem::new(
            "add",
            sig,
            vec![
                TestCase {
                    inputs: vec![Value::Int(1), Value::Int(2)],
                    expected: Value::Int(3),
                },
                TestCase {
                    inputs: vec![Value::Int(1)],
                    expected: Value::Int(1),
                },
            ],
        );
        match p.validate() {
            Err(ProblemError::InvariantViolation { case: Some(1), .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        p.cases[1].inputs.push(Value::Str("x".into()));
        assert!(matches!(
            p.validate(),
            Err(ProblemError::InvariantViolation { case: Some(1), .. })
        ));
    }

    #[test]
    fn deep_eq_semantics() {
        assert!(Value::Double(1.0).deep_eq(&Value::Double(1.0 + 1e-9)));
        assert!(Value::Double(0.0).deep_eq(&Value::Double(5e-7)));
        assert!(!Value::Double(0.0).deep_eq(&Value::Double(2e-6)));
        assert!(Value::Double(1e9).deep_eq(&Value::Double(1e9 + 100.0)));
        assert!(!Value::Int(1).deep_eq(&Value::Double(1.0)));
        let a = Value::Map(vec![
            (Value::Int(1), Value::Int(2)),
            (Value::Int(3), Value::Int(4)),
        ]);
        let b = Value::Map(vec![
            (Value::Int(3), Value::Int(4)),
            (Value::Int(1), Value::Int(2)),
        ]);
        assert!(a.deep_eq(&b));
        let l1 = Value::List(vec![Value::Int(1), Value::Int(2)]);
        let l2 = Value::List(vec![Value::Int(2), Value::Int(1)]);
        assert!(!l1.deep_eq(&l2));
    }

    #[test]
    fn signature_rejects_duplicates_and_bad_names() {
        let sig = Signature::new("f", vec![("a", TypeExpr::Int), ("a", TypeExpr::Int)], TypeExpr::Int);
        assert!(sig.validate().is_err());
        let sig = Signature::new("F", vec![], TypeExpr::Int);
        assert!(sig.validate().is_err());
        let sig = Signature::new("", vec![], TypeExpr::Int);
        assert!(sig.validate().is_err());
        let sig = Signature::new("f", vec![], TypeExpr::Int);
        assert!(sig.validate().is_ok());
    }
}

//! Tree-walking evaluator for the pseudo language.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write;
use std::time::Instant;

use super::syntax::{BinOp, Expr, ExprKind, Function, Program, Stmt, StmtKind, UnOp};
use crate::problem::{doubles_close, TypeExpr, Value};

const MAX_COLLECTION: usize = 10_000_000;
const MAX_STDOUT: usize = 16 << 20;
const DEADLINE_CHECK_EVERY: u64 = 1024;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Key {
    Bool(bool),
    Int(i64),
    Str(String),
}

/// Runtime value. Maps are ordered so iteration is deterministic.
#[derive(Debug, Clone, PartialEq)]
pub enum Val {
    Int(i64),
    Double(f64),
    Bool(bool),
    Str(String),
    List(Vec<Val>),
    Map(BTreeMap<Key, Val>),
    Null,
}

impl Val {
    fn kind(&self) -> &'static str {
        match self {
            Val::Int(_) => "int",
            Val::Double(_) => "double",
            Val::Bool(_) => "bool",
            Val::Str(_) => "str",
            Val::List(_) => "list",
            Val::Map(_) => "map",
            Val::Null => "null",
        }
    }

    fn to_key(&self) -> Result<Key, String> {
        match self {
            Val::Bool(b) => Ok(Key::Bool(*b)),
            Val::Int(i) => Ok(Key::Int(*i)),
            Val::Str(s) => Ok(Key::Str(s.clone())),
            other => Err(format!("{} cannot be a map key", other.kind())),
        }
    }

    fn display(&self, out: &mut String, nested: bool) {
        match self {
            Val::Int(i) => write!(out, "{i}").unwrap(),
            Val::Double(d) => write!(out, "{d:?}").unwrap(),
            Val::Bool(b) => write!(out, "{b}").unwrap(),
            Val::Str(s) if nested => write!(out, "{s:?}").unwrap(),
            Val::Str(s) => out.push_str(s),
            Val::Null => out.push_str("null"),
            Val::List(items) => {
                out.push('[');
                for (i, x) in items.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    x.display(out, true);
                }
                out.push(']');
            }
            Val::Map(m) => {
                out.push('{');
                for (i, (k, v)) in m.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    key_val(k).display(out, true);
                    out.push_str(": ");
                    v.display(out, true);
                }
                out.push('}');
            }
        }
    }
}

fn key_val(k: &Key) -> Val {
    match k {
        Key::Bool(b) => Val::Bool(*b),
        Key::Int(i) => Val::Int(*i),
        Key::Str(s) => Val::Str(s.clone()),
    }
}

pub fn from_value(v: &Value) -> Result<Val, String> {
    Ok(match v {
        Value::Int(i) => Val::Int(*i),
        Value::Double(d) => Val::Double(*d),
        Value::Bool(b) => Val::Bool(*b),
        Value::Str(s) => Val::Str(s.clone()),
        Value::Null => Val::Null,
        Value::List(items) => Val::List(items.iter().map(from_value).collect::<Result<_, _>>()?),
        Value::Map(entries) => {
            let mut m = BTreeMap::new();
            for (k, v) in entries {
                m.insert(from_value(k)?.to_key()?, from_value(v)?);
            }
            Val::Map(m)
        }
    })
}

pub fn to_value(v: &Val) -> Value {
    match v {
        Val::Int(i) => Value::Int(*i),
        Val::Double(d) => Value::Double(*d),
        Val::Bool(b) => Value::Bool(*b),
        Val::Str(s) => Value::Str(s.clone()),
        Val::Null => Value::Null,
        Val::List(items) => Value::List(items.iter().map(to_value).collect()),
        Val::Map(m) => Value::Map(m.iter().map(|(k, v)| (to_value(&key_val(k)), to_value(v))).collect()),
    }
}

/// Tolerant equality used by test drivers.
pub fn deep_eq(a: &Val, e: &Val) -> bool {
    match (a, e) {
        (Val::Double(x), Val::Double(y)) => doubles_close(*x, *y),
        (Val::List(x), Val::List(y)) => x.len() == y.len() && x.iter().zip(y).all(|(p, q)| deep_eq(p, q)),
        (Val::Map(x), Val::Map(y)) => {
            x.len() == y.len() && y.iter().all(|(k, v)| x.get(k).is_some_and(|w| deep_eq(w, v)))
        }
        (x, y) => x == y,
    }
}

/// Converts `v` to declared type `t`, widening ints where doubles are expected.
pub fn coerce(v: Val, t: &TypeExpr) -> Result<Val, String> {
    match (v, t) {
        (Val::Null, TypeExpr::Optional(_)) => Ok(Val::Null),
        (v, TypeExpr::Optional(inner)) => coerce(v, inner),
        (Val::Int(i), TypeExpr::Int) => Ok(Val::Int(i)),
        (Val::Int(i), TypeExpr::Double) => Ok(Val::Double(i as f64)),
        (Val::Double(d), TypeExpr::Double) => Ok(Val::Double(d)),
        (Val::Bool(b), TypeExpr::Bool) => Ok(Val::Bool(b)),
        (Val::Str(s), TypeExpr::Str) => Ok(Val::Str(s)),
        (Val::List(items), TypeExpr::List(elem)) => Ok(Val::List(
            items.into_iter().map(|x| coerce(x, elem)).collect::<Result<_, _>>()?,
        )),
        (Val::Map(m), TypeExpr::Map(kt, vt)) => {
            let mut out = BTreeMap::new();
            for (k, v) in m {
                let k = coerce(key_val(&k), kt)?.to_key()?;
                out.insert(k, coerce(v, vt)?);
            }
            Ok(Val::Map(out))
        }
        (v, t) => Err(format!("expected {t}, found {}", v.kind())),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Halt {
    Error { line: usize, message: String },
    Timeout,
}

#[derive(Debug, Clone)]
pub struct Limits {
    pub deadline: Option<Instant>,
    pub max_steps: Option<u64>,
    pub max_depth: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            deadline: None,
            max_steps: None,
            max_depth: 2_000,
        }
    }
}

enum Flow {
    Normal,
    Break,
    Continue,
    Return(Val),
}

type Scopes = Vec<HashMap<String, Val>>;

pub struct Interp<'p> {
    prog: &'p Program,
    limits: Limits,
    steps: u64,
    depth: usize,
    pub stdout: String,
}

fn fail<T>(line: usize, message: impl Into<String>) -> Result<T, Halt> {
    Err(Halt::Error {
        line,
        message: message.into(),
    })
}

impl<'p> Interp<'p> {
    pub fn new(prog: &'p Program, limits: Limits) -> Self {
        Interp {
            prog,
            limits,
            steps: 0,
            depth: 0,
            stdout: String::new(),
        }
    }

    fn tick(&mut self, line: usize) -> Result<(), Halt> {
        self.steps += 1;
        if let Some(max) = self.limits.max_steps {
            if self.steps > max {
                return fail(line, "step limit exceeded");
            }
        }
        if self.steps.is_multiple_of(DEADLINE_CHECK_EVERY) {
            if let Some(d) = self.limits.deadline {
                if Instant::now() >= d {
                    return Err(Halt::Timeout);
                }
            }
        }
        Ok(())
    }

    pub fn call(&mut self, name: &str, args: Vec<Val>, line: usize) -> Result<Val, Halt> {
        let Some(f) = self.prog.functions.get(name) else {
            return fail(line, format!("unknown function `{name}`"));
        };
        self.call_fn(f, args, line)
    }

    fn call_fn(&mut self, f: &'p Function, args: Vec<Val>, line: usize) -> Result<Val, Halt> {
        if args.len() != f.params.len() {
            return fail(
                line,
                format!("`{}` takes {} arguments, got {}", f.name, f.params.len(), args.len()),
            );
        }
        if self.depth >= self.limits.max_depth {
            return fail(line, "maximum recursion depth exceeded");
        }
        let mut frame = HashMap::new();
        for ((pname, pty), v) in f.params.iter().zip(args) {
            let v = coerce(v, pty).map_err(|m| Halt::Error {
                line,
                message: format!("argument `{pname}` of `{}`: {m}", f.name),
            })?;
            frame.insert(pname.clone(), v);
        }
        let mut scopes = vec![frame];
        self.depth += 1;
        let flow = self.block(&f.body, &mut scopes);
        self.depth -= 1;
        let result = match flow? {
            Flow::Return(v) => v,
            Flow::Normal => Val::Null,
            Flow::Break | Flow::Continue => return fail(f.line, "break or continue outside of a loop"),
        };
        match &f.returns {
            Some(t) => coerce(result, t).map_err(|m| Halt::Error {
                line: f.line,
                message: format!("return value of `{}`: {m}", f.name),
            }),
            None => Ok(result),
        }
    }

    fn block(&mut self, body: &'p [Stmt], scopes: &mut Scopes) -> Result<Flow, Halt> {
        scopes.push(HashMap::new());
        let r = self.stmts(body, scopes);
        scopes.pop();
        r
    }

    fn stmts(&mut self, body: &'p [Stmt], scopes: &mut Scopes) -> Result<Flow, Halt> {
        for s in body {
            match self.stmt(s, scopes)? {
                Flow::Normal => {}
                other => return Ok(other),
            }
        }
        Ok(Flow::Normal)
    }

    fn truthy(&self, v: Val, line: usize) -> Result<bool, Halt> {
        match v {
            Val::Bool(b) => Ok(b),
            other => fail(line, format!("condition must be bool, found {}", other.kind())),
        }
    }

    fn stmt(&mut self, s: &'p Stmt, scopes: &mut Scopes) -> Result<Flow, Halt> {
        self.tick(s.line)?;
        match &s.kind {
            StmtKind::Let(name, ty, e) => {
                let mut v = self.eval(e, scopes)?;
                if let Some(t) = ty {
                    v = coerce(v, t).map_err(|m| Halt::Error {
                        line: s.line,
                        message: format!("`{name}`: {m}"),
                    })?;
                }
                scopes.last_mut().expect("scope").insert(name.clone(), v);
            }
            StmtKind::Assign(name, indices, e) => {
                let v = self.eval(e, scopes)?;
                let keys = indices
                    .iter()
                    .map(|i| self.eval(i, scopes))
                    .collect::<Result<Vec<_>, _>>()?;
                let Some(slot) = scopes.iter_mut().rev().find_map(|sc| sc.get_mut(name)) else {
                    return fail(s.line, format!("assignment to undeclared variable `{name}`"));
                };
                assign_path(slot, &keys, v).map_err(|message| Halt::Error { line: s.line, message })?;
            }
            StmtKind::If(arms, otherwise) => {
                for (cond, body) in arms {
                    let c = self.eval(cond, scopes)?;
                    if self.truthy(c, cond.line)? {
                        return self.block(body, scopes);
                    }
                }
                if let Some(body) = otherwise {
                    return self.block(body, scopes);
                }
            }
            StmtKind::While(cond, body) => loop {
                let c = self.eval(cond, scopes)?;
                if !self.truthy(c, cond.line)? {
                    break;
                }
                match self.block(body, scopes)? {
                    Flow::Break => break,
                    Flow::Return(v) => return Ok(Flow::Return(v)),
                    Flow::Normal | Flow::Continue => {}
                }
            },
            StmtKind::For(var, iter, body) => {
                let items: Vec<Val> = match self.eval(iter, scopes)? {
                    Val::List(items) => items,
                    Val::Map(m) => m.keys().map(key_val).collect(),
                    Val::Str(s) => s.chars().map(|c| Val::Str(c.to_string())).collect(),
                    other => return fail(iter.line, format!("cannot iterate over {}", other.kind())),
                };
                for item in items {
                    self.tick(s.line)?;
                    let mut frame = HashMap::new();
                    frame.insert(var.clone(), item);
                    scopes.push(frame);
                    let r = self.block(body, scopes);
                    scopes.pop();
                    match r? {
                        Flow::Break => break,
                        Flow::Return(v) => return Ok(Flow::Return(v)),
                        Flow::Normal | Flow::Continue => {}
                    }
                }
            }
            StmtKind::Return(e) => {
                let v = match e {
                    Some(e) => self.eval(e, scopes)?,
                    None => Val::Null,
                };
                return Ok(Flow::Return(v));
            }
            StmtKind::Break => return Ok(Flow::Break),
            StmtKind::Continue => return Ok(Flow::Continue),
            StmtKind::Expr(e) => {
                self.eval(e, scopes)?;
            }
        }
        Ok(Flow::Normal)
    }

    pub fn eval(&mut self, e: &'p Expr, scopes: &mut Scopes) -> Result<Val, Halt> {
        self.tick(e.line)?;
        let line = e.line;
        match &e.kind {
            ExprKind::Int(i) => Ok(Val::Int(*i)),
            ExprKind::Double(d) => Ok(Val::Double(*d)),
            ExprKind::Bool(b) => Ok(Val::Bool(*b)),
            ExprKind::Str(s) => Ok(Val::Str(s.clone())),
            ExprKind::Null => Ok(Val::Null),
            ExprKind::List(items) => Ok(Val::List(
                items.iter().map(|x| self.eval(x, scopes)).collect::<Result<_, _>>()?,
            )),
            ExprKind::Map(entries) => {
                let mut m = BTreeMap::new();
                for (k, v) in entries {
                    let k = self.eval(k, scopes)?.to_key().map_err(|message| Halt::Error { line, message })?;
                    let v = self.eval(v, scopes)?;
                    if m.insert(k, v).is_some() {
                        return fail(line, "duplicate key in map literal");
                    }
                }
                Ok(Val::Map(m))
            }
            ExprKind::Var(name) => match scopes.iter().rev().find_map(|sc| sc.get(name)) {
                Some(v) => Ok(v.clone()),
                None => fail(line, format!("undefined variable `{name}`")),
            },
            ExprKind::Unary(op, x) => {
                let v = self.eval(x, scopes)?;
                match (op, v) {
                    (UnOp::Neg, Val::Int(i)) => match i.checked_neg() {
                        Some(n) => Ok(Val::Int(n)),
                        None => fail(line, "integer overflow"),
                    },
                    (UnOp::Neg, Val::Double(d)) => Ok(Val::Double(-d)),
                    (UnOp::Not, Val::Bool(b)) => Ok(Val::Bool(!b)),
                    (op, v) => fail(line, format!("bad operand {} for {op:?}", v.kind())),
                }
            }
            ExprKind::Binary(BinOp::And, a, b) => {
                let av = self.eval(a, scopes)?;
                if !self.truthy(av, line)? {
                    return Ok(Val::Bool(false));
                }
                let bv = self.eval(b, scopes)?;
                Ok(Val::Bool(self.truthy(bv, line)?))
            }
            ExprKind::Binary(BinOp::Or, a, b) => {
                let av = self.eval(a, scopes)?;
                if self.truthy(av, line)? {
                    return Ok(Val::Bool(true));
                }
                let bv = self.eval(b, scopes)?;
                Ok(Val::Bool(self.truthy(bv, line)?))
            }
            ExprKind::Binary(op, a, b) => {
                let av = self.eval(a, scopes)?;
                let bv = self.eval(b, scopes)?;
                binary(*op, av, bv).map_err(|message| Halt::Error { line, message })
            }
            ExprKind::Index(target, idx) => {
                let t = self.eval(target, scopes)?;
                let i = self.eval(idx, scopes)?;
                index(t, &i).map_err(|message| Halt::Error { line, message })
            }
            ExprKind::Call(name, args) => {
                let args = args
                    .iter()
                    .map(|x| self.eval(x, scopes))
                    .collect::<Result<Vec<_>, _>>()?;
                if is_builtin(name) {
                    return self.builtin(name, args, line);
                }
                self.call(name, args, line)
            }
        }
    }

    fn builtin(&mut self, name: &str, args: Vec<Val>, line: usize) -> Result<Val, Halt> {
        if name == "print" {
            if args.len() != 1 {
                return fail(line, "print takes 1 argument");
            }
            if self.stdout.len() < MAX_STDOUT {
                args[0].display(&mut self.stdout, false);
                self.stdout.push('\n');
            }
            return Ok(Val::Null);
        }
        call_builtin(name, args).map_err(|message| Halt::Error {
            line,
            message: format!("{name}: {message}"),
        })
    }
}

fn check_size(n: usize) -> Result<(), String> {
    if n > MAX_COLLECTION {
        Err(format!("collection too large ({n} elements)"))
    } else {
        Ok(())
    }
}

fn binary(op: BinOp, a: Val, b: Val) -> Result<Val, String> {
    use BinOp::*;
    let overflow = || "integer overflow".to_string();
    Ok(match (op, a, b) {
        (Eq, a, b) => Val::Bool(a == b),
        (Ne, a, b) => Val::Bool(a != b),
        (Add, Val::Int(x), Val::Int(y)) => Val::Int(x.checked_add(y).ok_or_else(overflow)?),
        (Sub, Val::Int(x), Val::Int(y)) => Val::Int(x.checked_sub(y).ok_or_else(overflow)?),
        (Mul, Val::Int(x), Val::Int(y)) => Val::Int(x.checked_mul(y).ok_or_else(overflow)?),
        (Div, Val::Int(_), Val::Int(0)) | (Rem, Val::Int(_), Val::Int(0)) => return Err("division by zero".into()),
        (Div, Val::Int(x), Val::Int(y)) => Val::Int(x.checked_div(y).ok_or_else(overflow)?),
        (Rem, Val::Int(x), Val::Int(y)) => Val::Int(x.checked_rem(y).ok_or_else(overflow)?),
        (Add, Val::Double(x), Val::Double(y)) => Val::Double(x + y),
        (Sub, Val::Double(x), Val::Double(y)) => Val::Double(x - y),
        (Mul, Val::Double(x), Val::Double(y)) => Val::Double(x * y),
        (Div, Val::Double(x), Val::Double(y)) => Val::Double(x / y),
        (Rem, Val::Double(x), Val::Double(y)) => Val::Double(x % y),
        (Add, Val::Str(x), Val::Str(y)) => Val::Str(x + &y),
        (Add, Val::List(mut x), Val::List(y)) => {
            check_size(x.len() + y.len())?;
            x.extend(y);
            Val::List(x)
        }
        (op @ (Lt | Le | Gt | Ge), a, b) => {
            let ord = match (&a, &b) {
                (Val::Int(x), Val::Int(y)) => x.cmp(y),
                (Val::Double(x), Val::Double(y)) => match x.partial_cmp(y) {
                    Some(o) => o,
                    None => return Ok(Val::Bool(false)),
                },
                (Val::Str(x), Val::Str(y)) => x.cmp(y),
                (Val::Bool(x), Val::Bool(y)) => x.cmp(y),
                _ => return Err(format!("cannot compare {} with {}", a.kind(), b.kind())),
            };
            Val::Bool(match op {
                Lt => ord.is_lt(),
                Le => ord.is_le(),
                Gt => ord.is_gt(),
                _ => ord.is_ge(),
            })
        }
        (op, a, b) => return Err(format!("unsupported operands {} {op:?} {}", a.kind(), b.kind())),
    })
}

fn list_index(len: usize, i: &Val) -> Result<usize, String> {
    match i {
        Val::Int(i) if *i >= 0 && (*i as u64) < len as u64 => Ok(*i as usize),
        Val::Int(i) => Err(format!("index {i} out of range for length {len}")),
        other => Err(format!("index must be int, found {}", other.kind())),
    }
}

fn index(t: Val, i: &Val) -> Result<Val, String> {
    match t {
        Val::List(mut items) => {
            let k = list_index(items.len(), i)?;
            Ok(items.swap_remove(k))
        }
        Val::Str(s) => {
            let chars: Vec<char> = s.chars().collect();
            let k = list_index(chars.len(), i)?;
            Ok(Val::Str(chars[k].to_string()))
        }
        Val::Map(mut m) => {
            let k = i.to_key()?;
            m.remove(&k).ok_or_else(|| "key not found".to_string())
        }
        other => Err(format!("cannot index {}", other.kind())),
    }
}

fn assign_path(slot: &mut Val, keys: &[Val], v: Val) -> Result<(), String> {
    let Some((first, rest)) = keys.split_first() else {
        *slot = v;
        return Ok(());
    };
    match slot {
        Val::List(items) => {
            let k = list_index(items.len(), first)?;
            assign_path(&mut items[k], rest, v)
        }
        Val::Map(m) => {
            let k = first.to_key()?;
            if rest.is_empty() {
                m.insert(k, v);
                Ok(())
            } else {
                let inner = m.get_mut(&k).ok_or_else(|| "key not found".to_string())?;
                assign_path(inner, rest, v)
            }
        }
        other => Err(format!("cannot index-assign into {}", other.kind())),
    }
}

pub(crate) const BUILTINS: &[&str] = &[
    "print", "deep_eq", "len", "append", "keys", "values", "has", "get", "put", "remove", "contains", "double", "int",
    "str", "abs", "sqrt", "floor", "ceil", "round", "pow", "min", "max", "range", "sort", "reverse", "slice", "split",
    "words", "join", "chars", "lower", "upper", "trim", "starts_with", "ends_with", "index_of", "is_null", "unwrap",
    "ord", "chr",
];

fn is_builtin(name: &str) -> bool {
    BUILTINS.contains(&name)
}

fn arity(args: &[Val], n: usize) -> Result<(), String> {
    if args.len() == n {
        Ok(())
    } else {
        Err(format!("expected {n} arguments, got {}", args.len()))
    }
}

fn bad(args: &[Val]) -> String {
    let kinds: Vec<_> = args.iter().map(Val::kind).collect();
    format!("unsupported argument types ({})", kinds.join(", "))
}

fn call_builtin(name: &str, mut args: Vec<Val>) -> Result<Val, String> {
    let a = &args;
    Ok(match name {
        "deep_eq" => {
            arity(a, 2)?;
            Val::Bool(deep_eq(&a[0], &a[1]))
        }
        "len" => {
            arity(a, 1)?;
            match &a[0] {
                Val::List(x) => Val::Int(x.len() as i64),
                Val::Map(x) => Val::Int(x.len() as i64),
                Val::Str(s) => Val::Int(s.chars().count() as i64),
                _ => return Err(bad(a)),
            }
        }
        "append" => {
            arity(a, 2)?;
            let v = args.pop().expect("arity");
            match args.pop().expect("arity") {
                Val::List(mut x) => {
                    check_size(x.len() + 1)?;
                    x.push(v);
                    Val::List(x)
                }
                other => return Err(bad(&[other, v])),
            }
        }
        "keys" | "values" => {
            arity(a, 1)?;
            match &a[0] {
                Val::Map(m) if name == "keys" => Val::List(m.keys().map(key_val).collect()),
                Val::Map(m) => Val::List(m.values().cloned().collect()),
                _ => return Err(bad(a)),
            }
        }
        "has" => {
            arity(a, 2)?;
            match &a[0] {
                Val::Map(m) => Val::Bool(m.contains_key(&a[1].to_key()?)),
                _ => return Err(bad(a)),
            }
        }
        "get" => {
            arity(a, 3)?;
            match &a[0] {
                Val::Map(m) => m.get(&a[1].to_key()?).cloned().unwrap_or_else(|| a[2].clone()),
                _ => return Err(bad(a)),
            }
        }
        "put" => {
            arity(a, 3)?;
            let v = args.pop().expect("arity");
            let k = args.pop().expect("arity").to_key()?;
            match args.pop().expect("arity") {
                Val::Map(mut m) => {
                    m.insert(k, v);
                    check_size(m.len())?;
                    Val::Map(m)
                }
                other => return Err(format!("expected map, found {}", other.kind())),
            }
        }
        "remove" => {
            arity(a, 2)?;
            let k = args.pop().expect("arity");
            match args.pop().expect("arity") {
                Val::Map(mut m) => {
                    m.remove(&k.to_key()?);
                    Val::Map(m)
                }
                Val::List(mut x) => {
                    let i = list_index(x.len(), &k)?;
                    x.remove(i);
                    Val::List(x)
                }
                other => return Err(bad(&[other, k])),
            }
        }
        "contains" => {
            arity(a, 2)?;
            match (&a[0], &a[1]) {
                (Val::Str(s), Val::Str(sub)) => Val::Bool(s.contains(sub.as_str())),
                (Val::List(x), v) => Val::Bool(x.contains(v)),
                (Val::Map(m), k) => Val::Bool(m.contains_key(&k.to_key()?)),
                _ => return Err(bad(a)),
            }
        }
        "index_of" => {
            arity(a, 2)?;
            match (&a[0], &a[1]) {
                (Val::Str(s), Val::Str(sub)) => Val::Int(match s.find(sub.as_str()) {
                    Some(b) => s[..b].chars().count() as i64,
                    None => -1,
                }),
                (Val::List(x), v) => Val::Int(x.iter().position(|y| y == v).map_or(-1, |p| p as i64)),
                _ => return Err(bad(a)),
            }
        }
        "double" => {
            arity(a, 1)?;
            match a[0] {
                Val::Int(i) => Val::Double(i as f64),
                Val::Double(d) => Val::Double(d),
                _ => return Err(bad(a)),
            }
        }
        "int" => {
            arity(a, 1)?;
            match &a[0] {
                Val::Int(i) => Val::Int(*i),
                Val::Double(d) => {
                    let t = d.trunc();
                    if !(-9.223_372_036_854_776e18..9.223_372_036_854_776e18).contains(&t) {
                        return Err(format!("{d} does not fit in int"));
                    }
                    Val::Int(t as i64)
                }
                Val::Bool(b) => Val::Int(*b as i64),
                Val::Str(s) => Val::Int(s.trim().parse().map_err(|_| format!("cannot parse {s:?} as int"))?),
                _ => return Err(bad(a)),
            }
        }
        "str" => {
            arity(a, 1)?;
            let mut s = String::new();
            a[0].display(&mut s, false);
            Val::Str(s)
        }
        "abs" => {
            arity(a, 1)?;
            match a[0] {
                Val::Int(i) => Val::Int(i.checked_abs().ok_or("integer overflow")?),
                Val::Double(d) => Val::Double(d.abs()),
                _ => return Err(bad(a)),
            }
        }
        "sqrt" | "floor" | "ceil" | "round" => {
            arity(a, 1)?;
            let d = match a[0] {
                Val::Int(i) => i as f64,
                Val::Double(d) => d,
                _ => return Err(bad(a)),
            };
            Val::Double(match name {
                "sqrt" => d.sqrt(),
                "floor" => d.floor(),
                "ceil" => d.ceil(),
                _ => d.round(),
            })
        }
        "pow" => {
            arity(a, 2)?;
            match (&a[0], &a[1]) {
                (Val::Int(x), Val::Int(y)) if *y >= 0 => {
                    let e = u32::try_from(*y).map_err(|_| "integer overflow".to_string())?;
                    Val::Int(x.checked_pow(e).ok_or("integer overflow")?)
                }
                (Val::Double(x), Val::Double(y)) => Val::Double(x.powf(*y)),
                (Val::Double(x), Val::Int(y)) => Val::Double(x.powf(*y as f64)),
                _ => return Err(bad(a)),
            }
        }
        "min" | "max" => {
            arity(a, 2)?;
            let lt = match binary(BinOp::Lt, a[1].clone(), a[0].clone())? {
                Val::Bool(b) => b,
                _ => unreachable!(),
            };
            let pick_second = if name == "min" { lt } else { !lt && a[0] != a[1] };
            args.swap_remove(usize::from(pick_second))
        }
        "range" => {
            arity(a, 2)?;
            match (&a[0], &a[1]) {
                (Val::Int(lo), Val::Int(hi)) => {
                    let n = hi.saturating_sub(*lo).max(0);
                    check_size(n as usize)?;
                    Val::List((*lo..*hi).map(Val::Int).collect())
                }
                _ => return Err(bad(a)),
            }
        }
        "sort" => {
            arity(a, 1)?;
            match args.pop().expect("arity") {
                Val::List(mut x) => {
                    let mut err = None;
                    x.sort_by(|p, q| match (p, q) {
                        (Val::Int(p), Val::Int(q)) => p.cmp(q),
                        (Val::Double(p), Val::Double(q)) => p.total_cmp(q),
                        (Val::Str(p), Val::Str(q)) => p.cmp(q),
                        (Val::Bool(p), Val::Bool(q)) => p.cmp(q),
                        _ => {
                            err = Some(format!("cannot order {} and {}", p.kind(), q.kind()));
                            std::cmp::Ordering::Equal
                        }
                    });
                    if let Some(e) = err {
                        return Err(e);
                    }
                    Val::List(x)
                }
                other => return Err(bad(&[other])),
            }
        }
        "reverse" => {
            arity(a, 1)?;
            match args.pop().expect("arity") {
                Val::List(mut x) => {
                    x.reverse();
                    Val::List(x)
                }
                Val::Str(s) => Val::Str(s.chars().rev().collect()),
                other => return Err(bad(&[other])),
            }
        }
        "slice" => {
            arity(a, 3)?;
            let (Val::Int(lo), Val::Int(hi)) = (&a[1], &a[2]) else {
                return Err(bad(a));
            };
            let clamp = |len: usize, i: i64| i.clamp(0, len as i64) as usize;
            match &a[0] {
                Val::List(x) => {
                    let (l, h) = (clamp(x.len(), *lo), clamp(x.len(), *hi));
                    Val::List(if l < h { x[l..h].to_vec() } else { vec![] })
                }
                Val::Str(s) => {
                    let chars: Vec<char> = s.chars().collect();
                    let (l, h) = (clamp(chars.len(), *lo), clamp(chars.len(), *hi));
                    Val::Str(if l < h { chars[l..h].iter().collect() } else { String::new() })
                }
                _ => return Err(bad(a)),
            }
        }
        "split" => {
            arity(a, 2)?;
            match (&a[0], &a[1]) {
                (Val::Str(_), Val::Str(sep)) if sep.is_empty() => return Err("empty separator".into()),
                (Val::Str(s), Val::Str(sep)) => {
                    Val::List(s.split(sep.as_str()).map(|p| Val::Str(p.to_string())).collect())
                }
                _ => return Err(bad(a)),
            }
        }
        "words" => {
            arity(a, 1)?;
            match &a[0] {
                Val::Str(s) => Val::List(s.split_whitespace().map(|p| Val::Str(p.to_string())).collect()),
                _ => return Err(bad(a)),
            }
        }
        "join" => {
            arity(a, 2)?;
            match (&a[0], &a[1]) {
                (Val::List(x), Val::Str(sep)) => {
                    let parts = x
                        .iter()
                        .map(|p| match p {
                            Val::Str(s) => Ok(s.as_str()),
                            other => Err(format!("join expects strings, found {}", other.kind())),
                        })
                        .collect::<Result<Vec<_>, _>>()?;
                    Val::Str(parts.join(sep))
                }
                _ => return Err(bad(a)),
            }
        }
        "chars" => {
            arity(a, 1)?;
            match &a[0] {
                Val::Str(s) => Val::List(s.chars().map(|c| Val::Str(c.to_string())).collect()),
                _ => return Err(bad(a)),
            }
        }
        "lower" | "upper" | "trim" => {
            arity(a, 1)?;
            match &a[0] {
                Val::Str(s) => Val::Str(match name {
                    "lower" => s.to_lowercase(),
                    "upper" => s.to_uppercase(),
                    _ => s.trim().to_string(),
                }),
                _ => return Err(bad(a)),
            }
        }
        "starts_with" | "ends_with" => {
            arity(a, 2)?;
            match (&a[0], &a[1]) {
                (Val::Str(s), Val::Str(p)) => Val::Bool(if name == "starts_with" {
                    s.starts_with(p.as_str())
                } else {
                    s.ends_with(p.as_str())
                }),
                _ => return Err(bad(a)),
            }
        }
        "is_null" => {
            arity(a, 1)?;
            Val::Bool(a[0] == Val::Null)
        }
        "unwrap" => {
            arity(a, 1)?;
            match args.pop().expect("arity") {
                Val::Null => return Err("unwrap of null".into()),
                v => v,
            }
        }
        "ord" => {
            arity(a, 1)?;
            match &a[0] {
                Val::Str(s) => match s.chars().next() {
                    Some(c) => Val::Int(c as i64),
                    None => return Err("empty string".into()),
                },
                _ => return Err(bad(a)),
            }
        }
        "chr" => {
            arity(a, 1)?;
            match a[0] {
                Val::Int(i) => Val::Str(
                    u32::try_from(i)
                        .ok()
                        .and_then(char::from_u32)
                        .ok_or_else(|| format!("invalid code point {i}"))?
                        .to_string(),
                ),
                _ => return Err(bad(a)),
            }
        }
        other => return Err(format!("unknown builtin `{other}`")),
    })
}

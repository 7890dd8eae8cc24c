//! Lexer and recursive-descent parser for the pseudo language.

use std::collections::HashMap;
use std::fmt;

use crate::problem::TypeExpr;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntaxError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "syntax error at line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for SyntaxError {}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(u64),
    Double(f64),
    Str(String),
    Sym(&'static str),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Int(i) => write!(f, "`{i}`"),
            Tok::Double(d) => write!(f, "`{d}`"),
            Tok::Str(s) => write!(f, "{s:?}"),
            Tok::Sym(s) => write!(f, "`{s}`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

const SYMBOLS: &[&str] = &[
    "->", "==", "!=", "<=", ">=", "&&", "||", "(", ")", "{", "}", "[", "]", ",", ";", ":", "=", "<", ">", "+", "-",
    "*", "/", "%", "!",
];

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, SyntaxError> {
    let chars: Vec<char> = src.chars().collect();
    let mut i = 0;
    let mut line = 1;
    let mut out = Vec::new();
    let err = |line: usize, message: String| SyntaxError { line, message };
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            line += 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), line));
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let mut is_float = false;
            if i + 1 < chars.len() && chars[i] == '.' && chars[i + 1].is_ascii_digit() {
                is_float = true;
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    is_float = true;
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let tok = if is_float {
                Tok::Double(text.parse().map_err(|_| err(line, format!("bad number {text}")))?)
            } else {
                Tok::Int(
                    text.parse()
                        .map_err(|_| err(line, format!("integer literal {text} out of range")))?,
                )
            };
            out.push((tok, line));
            continue;
        }
        if c == '"' {
            i += 1;
            let mut s = String::new();
            loop {
                let Some(&c) = chars.get(i) else {
                    return Err(err(line, "unterminated string literal".into()));
                };
                i += 1;
                match c {
                    '"' => break,
                    '\n' => return Err(err(line, "newline in string literal".into())),
                    '\\' => {
                        let Some(&e) = chars.get(i) else {
                            return Err(err(line, "unterminated escape".into()));
                        };
                        i += 1;
                        match e {
                            'n' => s.push('\n'),
                            't' => s.push('\t'),
                            'r' => s.push('\r'),
                            '0' => s.push('\0'),
                            '\\' => s.push('\\'),
                            '"' => s.push('"'),
                            'u' => {
                                if chars.get(i) != Some(&'{') {
                                    return Err(err(line, "expected { after \\u".into()));
                                }
                                let start = i + 1;
                                let mut j = start;
                                while j < chars.len() && chars[j] != '}' {
                                    j += 1;
                                }
                                let hex: String = chars[start..j.min(chars.len())].iter().collect();
                                let ch = u32::from_str_radix(&hex, 16)
                                    .ok()
                                    .and_then(char::from_u32)
                                    .ok_or_else(|| err(line, format!("bad unicode escape {hex}")))?;
                                s.push(ch);
                                i = j + 1;
                            }
                            other => return Err(err(line, format!("unknown escape \\{other}"))),
                        }
                    }
                    c => s.push(c),
                }
            }
            out.push((Tok::Str(s), line));
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            Some(sym) => {
                out.push((Tok::Sym(sym), line));
                i += sym.len();
            }
            None => return Err(err(line, format!("unexpected character {c:?}"))),
        }
    }
    out.push((Tok::Eof, line));
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Int(i64),
    Double(f64),
    Bool(bool),
    Str(String),
    Null,
    List(Vec<Expr>),
    Map(Vec<(Expr, Expr)>),
    Var(String),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(String, Vec<Expr>),
    Index(Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    Let(String, Option<TypeExpr>, Expr),
    Assign(String, Vec<Expr>, Expr),
    If(Vec<(Expr, Vec<Stmt>)>, Option<Vec<Stmt>>),
    While(Expr, Vec<Stmt>),
    For(String, Expr, Vec<Stmt>),
    Return(Option<Expr>),
    Break,
    Continue,
    Expr(Expr),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Function {
    pub name: String,
    pub params: Vec<(String, TypeExpr)>,
    pub returns: Option<TypeExpr>,
    pub body: Vec<Stmt>,
    pub line: usize,
}

/// A parsed pseudo program: a set of functions.
#[derive(Debug, Clone, Default)]
pub struct Program {
    pub functions: HashMap<String, Function>,
}

const KEYWORDS: &[&str] = &[
    "fn", "let", "if", "else", "while", "for", "in", "return", "break", "continue", "true", "false", "null",
];

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

type PResult<T> = Result<T, SyntaxError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, off: usize) -> &Tok {
        &self.toks[(self.pos + off).min(self.toks.len() - 1)].0
    }

    fn line(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, message: impl Into<String>) -> PResult<T> {
        Err(SyntaxError {
            line: self.line(),
            message: message.into(),
        })
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == kw)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> PResult<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.err(format!("expected `{s}`, found {}", self.peek()))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.is_kw(kw) {
            self.bump();
            Ok(())
        } else {
            self.err(format!("expected `{kw}`, found {}", self.peek()))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Ok(s)
            }
            other => self.err(format!("expected identifier, found {other}")),
        }
    }

    fn program(&mut self) -> PResult<Program> {
        let mut prog = Program::default();
        while *self.peek() != Tok::Eof {
            let f = self.function()?;
            if prog.functions.contains_key(&f.name) {
                return Err(SyntaxError {
                    line: f.line,
                    message: format!("function `{}` defined twice", f.name),
                });
            }
            prog.functions.insert(f.name.clone(), f);
        }
        Ok(prog)
    }

    fn function(&mut self) -> PResult<Function> {
        let line = self.line();
        self.expect_kw("fn")?;
        let name = self.ident()?;
        self.expect_sym("(")?;
        let mut params = Vec::new();
        if !self.is_sym(")") {
            loop {
                let pname = self.ident()?;
                self.expect_sym(":")?;
                let ty = self.ty()?;
                if params.iter().any(|(n, _)| *n == pname) {
                    return self.err(format!("duplicate parameter `{pname}`"));
                }
                params.push((pname, ty));
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        self.expect_sym(")")?;
        let returns = if self.eat_sym("->") { Some(self.ty()?) } else { None };
        let body = self.block()?;
        Ok(Function {
            name,
            params,
            returns,
            body,
            line,
        })
    }

    fn ty(&mut self) -> PResult<TypeExpr> {
        let name = match self.bump() {
            Tok::Ident(s) => s,
            other => return self.err(format!("expected type, found {other}")),
        };
        let t = match name.as_str() {
            "int" => TypeExpr::Int,
            "double" => TypeExpr::Double,
            "bool" => TypeExpr::Bool,
            "str" => TypeExpr::Str,
            "list" => {
                self.expect_sym("<")?;
                let e = self.ty()?;
                self.expect_sym(">")?;
                TypeExpr::list(e)
            }
            "opt" => {
                self.expect_sym("<")?;
                let e = self.ty()?;
                self.expect_sym(">")?;
                TypeExpr::optional(e)
            }
            "map" => {
                self.expect_sym("<")?;
                let k = self.ty()?;
                self.expect_sym(",")?;
                let v = self.ty()?;
                self.expect_sym(">")?;
                TypeExpr::map(k, v)
            }
            other => return self.err(format!("unknown type `{other}`")),
        };
        t.validate().map_err(|e| SyntaxError {
            line: self.line(),
            message: e.to_string(),
        })?;
        Ok(t)
    }

    fn block(&mut self) -> PResult<Vec<Stmt>> {
        self.expect_sym("{")?;
        let mut out = Vec::new();
        while !self.is_sym("}") {
            if *self.peek() == Tok::Eof {
                return self.err("unexpected end of input inside block");
            }
            out.push(self.stmt()?);
        }
        self.bump();
        Ok(out)
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let line = self.line();
        let kind = if self.is_kw("let") {
            self.bump();
            let name = self.ident()?;
            let ty = if self.eat_sym(":") { Some(self.ty()?) } else { None };
            self.expect_sym("=")?;
            let e = self.expr(false)?;
            self.expect_sym(";")?;
            StmtKind::Let(name, ty, e)
        } else if self.is_kw("if") {
            self.if_chain()?
        } else if self.is_kw("while") {
            self.bump();
            let cond = self.expr(true)?;
            StmtKind::While(cond, self.block()?)
        } else if self.is_kw("for") {
            self.bump();
            let var = self.ident()?;
            self.expect_kw("in")?;
            let iter = self.expr(true)?;
            StmtKind::For(var, iter, self.block()?)
        } else if self.is_kw("return") {
            self.bump();
            let value = if self.is_sym(";") { None } else { Some(self.expr(false)?) };
            self.expect_sym(";")?;
            StmtKind::Return(value)
        } else if self.is_kw("break") {
            self.bump();
            self.expect_sym(";")?;
            StmtKind::Break
        } else if self.is_kw("continue") {
            self.bump();
            self.expect_sym(";")?;
            StmtKind::Continue
        } else if self.is_sym("{") {
            return self.err("bare blocks are not allowed");
        } else if matches!(self.peek(), Tok::Ident(_))
            && (matches!(self.peek_at(1), Tok::Sym("=")) || matches!(self.peek_at(1), Tok::Sym("[")))
            && self.assignment_ahead()
        {
            let name = self.ident()?;
            let mut indices = Vec::new();
            while self.eat_sym("[") {
                indices.push(self.expr(false)?);
                self.expect_sym("]")?;
            }
            self.expect_sym("=")?;
            let e = self.expr(false)?;
            self.expect_sym(";")?;
            StmtKind::Assign(name, indices, e)
        } else {
            let e = self.expr(false)?;
            self.expect_sym(";")?;
            StmtKind::Expr(e)
        };
        Ok(Stmt { kind, line })
    }

    /// Scans `ident ([...])* =` without consuming tokens.
    fn assignment_ahead(&self) -> bool {
        let mut i = self.pos + 1;
        loop {
            match &self.toks[i].0 {
                Tok::Sym("=") => return true,
                Tok::Sym("[") => {
                    let mut depth = 0usize;
                    loop {
                        match &self.toks[i].0 {
                            Tok::Sym("[") => depth += 1,
                            Tok::Sym("]") => {
                                depth -= 1;
                                if depth == 0 {
                                    break;
                                }
                            }
                            Tok::Eof => return false,
                            _ => {}
                        }
                        i += 1;
                    }
                    i += 1;
                }
                _ => return false,
            }
        }
    }

    fn if_chain(&mut self) -> PResult<StmtKind> {
        let mut arms = Vec::new();
        self.expect_kw("if")?;
        let cond = self.expr(true)?;
        arms.push((cond, self.block()?));
        let mut otherwise = None;
        while self.is_kw("else") {
            self.bump();
            if self.is_kw("if") {
                self.bump();
                let cond = self.expr(true)?;
                arms.push((cond, self.block()?));
            } else {
                otherwise = Some(self.block()?);
                break;
            }
        }
        Ok(StmtKind::If(arms, otherwise))
    }

    /// `no_map` forbids a top-level `{` map literal (condition position).
    fn expr(&mut self, no_map: bool) -> PResult<Expr> {
        self.binary(0, no_map)
    }

    fn binary(&mut self, level: usize, no_map: bool) -> PResult<Expr> {
        const LEVELS: &[&[(&str, BinOp)]] = &[
            &[("||", BinOp::Or)],
            &[("&&", BinOp::And)],
            &[("==", BinOp::Eq), ("!=", BinOp::Ne)],
            &[("<=", BinOp::Le), (">=", BinOp::Ge), ("<", BinOp::Lt), (">", BinOp::Gt)],
            &[("+", BinOp::Add), ("-", BinOp::Sub)],
            &[("*", BinOp::Mul), ("/", BinOp::Div), ("%", BinOp::Rem)],
        ];
        if level == LEVELS.len() {
            return self.unary(no_map);
        }
        let mut lhs = self.binary(level + 1, no_map)?;
        'outer: loop {
            for (sym, op) in LEVELS[level] {
                if self.is_sym(sym) {
                    let line = self.line();
                    self.bump();
                    let rhs = self.binary(level + 1, no_map)?;
                    lhs = Expr {
                        kind: ExprKind::Binary(*op, Box::new(lhs), Box::new(rhs)),
                        line,
                    };
                    continue 'outer;
                }
            }
            return Ok(lhs);
        }
    }

    fn unary(&mut self, no_map: bool) -> PResult<Expr> {
        let line = self.line();
        if self.eat_sym("-") {
            // fold negative literals so i64::MIN is expressible
            if let Tok::Int(n) = *self.peek() {
                if !matches!(self.peek_at(1), Tok::Sym("[")) {
                    self.bump();
                    let v = if n == 1u64 << 63 {
                        i64::MIN
                    } else {
                        -(i64::try_from(n).map_err(|_| SyntaxError {
                            line,
                            message: format!("integer literal -{n} out of range"),
                        })?)
                    };
                    return Ok(Expr {
                        kind: ExprKind::Int(v),
                        line,
                    });
                }
            }
            let e = self.unary(no_map)?;
            return Ok(Expr {
                kind: ExprKind::Unary(UnOp::Neg, Box::new(e)),
                line,
            });
        }
        if self.eat_sym("!") {
            let e = self.unary(no_map)?;
            return Ok(Expr {
                kind: ExprKind::Unary(UnOp::Not, Box::new(e)),
                line,
            });
        }
        self.postfix(no_map)
    }

    fn postfix(&mut self, no_map: bool) -> PResult<Expr> {
        let mut e = self.primary(no_map)?;
        while self.is_sym("[") {
            let line = self.line();
            self.bump();
            let idx = self.expr(false)?;
            self.expect_sym("]")?;
            e = Expr {
                kind: ExprKind::Index(Box::new(e), Box::new(idx)),
                line,
            };
        }
        Ok(e)
    }

    fn args(&mut self, close: &str) -> PResult<Vec<Expr>> {
        let mut out = Vec::new();
        if self.eat_sym(close) {
            return Ok(out);
        }
        loop {
            out.push(self.expr(false)?);
            if self.eat_sym(close) {
                return Ok(out);
            }
            self.expect_sym(",")?;
            if self.eat_sym(close) {
                return Ok(out);
            }
        }
    }

    fn primary(&mut self, no_map: bool) -> PResult<Expr> {
        let line = self.line();
        let kind = match self.bump() {
            Tok::Int(n) => ExprKind::Int(i64::try_from(n).map_err(|_| SyntaxError {
                line,
                message: format!("integer literal {n} out of range"),
            })?),
            Tok::Double(d) => ExprKind::Double(d),
            Tok::Str(s) => ExprKind::Str(s),
            Tok::Ident(s) => match s.as_str() {
                "true" => ExprKind::Bool(true),
                "false" => ExprKind::Bool(false),
                "null" => ExprKind::Null,
                kw if KEYWORDS.contains(&kw) => {
                    return Err(SyntaxError {
                        line,
                        message: format!("unexpected keyword `{kw}`"),
                    })
                }
                _ => {
                    if self.eat_sym("(") {
                        ExprKind::Call(s, self.args(")")?)
                    } else {
                        ExprKind::Var(s)
                    }
                }
            },
            Tok::Sym("(") => {
                let e = self.expr(false)?;
                self.expect_sym(")")?;
                return Ok(e);
            }
            Tok::Sym("[") => ExprKind::List(self.args("]")?),
            Tok::Sym("{") if !no_map => {
                let mut entries = Vec::new();
                if !self.eat_sym("}") {
                    loop {
                        let k = self.expr(false)?;
                        self.expect_sym(":")?;
                        let v = self.expr(false)?;
                        entries.push((k, v));
                        if self.eat_sym("}") {
                            break;
                        }
                        self.expect_sym(",")?;
                        if self.eat_sym("}") {
                            break;
                        }
                    }
                }
                ExprKind::Map(entries)
            }
            other => {
                return Err(SyntaxError {
                    line,
                    message: format!("expected expression, found {other}"),
                })
            }
        };
        Ok(Expr { kind, line })
    }
}

pub fn parse_program(src: &str) -> Result<Program, SyntaxError> {
    let toks = lex(src)?;
    Parser { toks, pos: 0 }.program()
}

pub fn parse_expression(src: &str) -> Result<Expr, SyntaxError> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0 };
    let e = p.expr(false)?;
    if *p.peek() != Tok::Eof {
        return p.err(format!("trailing input {}", p.peek()));
    }
    Ok(e)
}

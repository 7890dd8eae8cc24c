//! A small statically-annotated, dynamically-checked language run in-process.
//!
//! The `pseudo` profile targets it so that the whole pipeline can be exercised
//! without any external compiler. Programs are lists of functions:
//!
//! ```text
//! fn add(a: int, b: int) -> int {
//!     return a + b;
//! }
//! ```
//!
//! Test drivers call `main`, whose integer return value becomes the exit code.

mod interp;
mod syntax;

use std::time::{Duration, Instant};

pub use interp::{coerce, deep_eq, from_value, to_value, Halt, Interp, Key, Limits, Val};
pub use syntax::{parse_expression, parse_program, Program, SyntaxError};

use crate::problem::Value;

const STACK_SIZE: usize = 256 << 20;

/// How an in-process run ended.
#[derive(Debug, Clone, PartialEq)]
pub enum RunExit {
    Code(i32),
    Error(String),
    Timeout,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub stdout: String,
    pub exit: RunExit,
}

/// Runs `main` on the current thread.
pub fn run_main(prog: &Program, limits: Limits) -> RunOutcome {
    let mut it = Interp::new(prog, limits);
    let exit = match it.call("main", vec![], 0) {
        Ok(Val::Int(code)) => RunExit::Code(i32::try_from(code).unwrap_or(1)),
        Ok(Val::Null) => RunExit::Code(0),
        Ok(other) => RunExit::Error(format!("main returned {other:?}")),
        Err(Halt::Timeout) => RunExit::Timeout,
        Err(Halt::Error { line, message }) => RunExit::Error(format!("runtime error at line {line}: {message}")),
    };
    RunOutcome {
        stdout: std::mem::take(&mut it.stdout),
        exit,
    }
}

fn on_large_stack<T: Send>(f: impl FnOnce() -> T + Send) -> std::thread::Result<T> {
    std::thread::scope(|s| {
        std::thread::Builder::new()
            .name("pseudo-run".into())
            .stack_size(STACK_SIZE)
            .spawn_scoped(s, f)
            .expect("spawn interpreter thread")
            .join()
    })
}

/// Parses and runs `src` on a dedicated large-stack thread with a wall-clock budget.
pub fn run_source(src: &str, timeout: Duration) -> Result<RunOutcome, SyntaxError> {
    let prog = parse_program(src)?;
    let deadline = Instant::now() + timeout;
    let limits = Limits {
        deadline: Some(deadline),
        ..Limits::default()
    };
    Ok(on_large_stack(|| run_main(&prog, limits)).unwrap_or_else(|_| RunOutcome {
        stdout: String::new(),
        exit: RunExit::Error("interpreter panicked".into()),
    }))
}

/// Calls function `name` of `src` with plain values.
pub fn call_function(src: &str, name: &str, args: &[Value]) -> Result<Value, String> {
    let prog = parse_program(src).map_err(|e| e.to_string())?;
    let args = args.iter().map(from_value).collect::<Result<Vec<_>, _>>()?;
    let r = on_large_stack(|| {
        let mut it = Interp::new(&prog, Limits::default());
        it.call(name, args, 0).map(|v| to_value(&v))
    })
    .map_err(|_| "interpreter panicked".to_string())?;
    match r {
        Ok(v) => Ok(v),
        Err(Halt::Timeout) => Err("timeout".into()),
        Err(Halt::Error { line, message }) => Err(format!("line {line}: {message}")),
    }
}

/// Evaluates a closed expression such as a rendered literal.
pub fn eval_expression(src: &str) -> Result<Value, String> {
    let e = parse_expression(src).map_err(|e| e.to_string())?;
    let prog = Program::default();
    let mut it = Interp::new(&prog, Limits::default());
    let mut scopes = vec![Default::default()];
    it.eval(&e, &mut scopes)
        .map(|v| to_value(&v))
        .map_err(|h| format!("{h:?}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn main_exit_code_and_output() {
        let out = run_source(
            "fn main() -> int { print(\"CASE 0 PASS\"); print([1, 2]); return 3; }",
            Duration::from_secs(5),
        )
        .unwrap();
        assert_eq!(out.stdout, "CASE 0 PASS\n[1, 2]\n");
        assert_eq!(out.exit, RunExit::Code(3));
    }

    #[test]
    fn runtime_error_keeps_partial_output() {
        let out = run_source(
            "fn main() -> int { print(\"a\"); let x = [1][5]; return 0; }",
            Duration::from_secs(5),
        )
        .unwrap();
        assert_eq!(out.stdout, "a\n");
        assert!(matches!(out.exit, RunExit::Error(_)));
    }

    #[test]
    fn deep_recursion_fits_the_stack() {
        let src = "fn d(n: int) -> int { if n == 0 { return 0; } return 1 + d(n - 1); } fn main() -> int { return d(1500) - 1500; }";
        assert_eq!(run_source(src, Duration::from_secs(10)).unwrap().exit, RunExit::Code(0));
    }

    #[test]
    fn literal_evaluation() {
        assert_eq!(
            eval_expression("{\"a\": [1.5, null]}").unwrap(),
            Value::Map(vec![(
                Value::Str("a".into()),
                Value::List(vec![Value::Double(1.5), Value::Null])
            )])
        );
    }
}

//! Compiles and runs generated test programs with a spliced candidate,
//! one fresh working directory per job.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use wait_timeout::ChildExt;

use crate::codegen::{generate_test_program, CodegenError, LanguageProfile};
use crate::problem::Problem;
use crate::pseudo::{self, RunExit};

const MAX_CAPTURE: usize = 8 << 20;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExecutorError {
    #[error("toolchain for profile {profile} is missing: `{program}` not found")]
    ToolchainMissing { profile: String, program: String },
    #[error("invalid sandbox configuration: {0}")]
    InvalidConfig(String),
    #[error("sandbox I/O failure: {0}")]
    Io(String),
    #[error(transparent)]
    Codegen(#[from] CodegenError),
}

/// Per-profile replacement for compile and run argv templates.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolchainOverride {
    pub compile_cmd: Option<Vec<String>>,
    pub run_cmd: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandboxConfig {
    /// Parent of the per-job temporary directories; system temp dir if unset.
    pub workdir_root: Option<PathBuf>,
    pub timeout: Duration,
    pub compile_timeout: Duration,
    /// Advisory only; no memory limit is enforced.
    pub memory_note: Option<String>,
    pub max_parallel: usize,
    pub overrides: BTreeMap<String, ToolchainOverride>,
}

impl Default for SandboxConfig {
    fn default() -> Self {
        SandboxConfig {
            workdir_root: None,
            timeout: Duration::from_secs(30),
            compile_timeout: Duration::from_secs(120),
            memory_note: None,
            max_parallel: std::thread::available_parallelism().map_or(1, |n| n.get()),
            overrides: BTreeMap::new(),
        }
    }
}

impl SandboxConfig {
    pub fn validate(&self) -> Result<(), ExecutorError> {
        if self.timeout.is_zero() || self.compile_timeout.is_zero() {
            return Err(ExecutorError::InvalidConfig("timeouts must be positive".into()));
        }
        if self.max_parallel == 0 {
            return Err(ExecutorError::InvalidConfig("max_parallel must be at least 1".into()));
        }
        Ok(())
    }

    fn commands(&self, profile: &LanguageProfile) -> (Option<Vec<String>>, Vec<String>) {
        let o = self.overrides.get(&profile.id);
        let compile = o
            .and_then(|o| o.compile_cmd.clone())
            .or_else(|| profile.compile_cmd.clone());
        let run = o.and_then(|o| o.run_cmd.clone()).unwrap_or_else(|| profile.run_cmd.clone());
        (compile, run)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    CompileError,
    RuntimeError,
    Timeout,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::CompileError => "compile_error",
            Status::RuntimeError => "runtime_error",
            Status::Timeout => "timeout",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseVerdict {
    pub index: usize,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionResult {
    pub status: Status,
    /// Dense from 0. Partial for `runtime_error`, empty for the other
    /// non-verdict statuses.
    pub case_verdicts: Vec<CaseVerdict>,
    pub stdout: String,
    pub stderr: String,
    pub exit_code: Option<i32>,
    /// Wall-clock seconds including compilation.
    pub duration: f64,
}

impl ExecutionResult {
    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    pub fn verdict_vector(&self) -> Vec<bool> {
        self.case_verdicts.iter().map(|v| v.passed).collect()
    }
}

/// Collects the dense `CASE <i> PASS|FAIL` prefix from `stdout`, skipping
/// every other line.
pub fn parse_verdicts(stdout: &str, n_cases: usize) -> Vec<CaseVerdict> {
    let mut out = Vec::new();
    for line in stdout.lines() {
        if out.len() == n_cases {
            break;
        }
        let mut parts = line.split_whitespace();
        let (Some("CASE"), Some(i), Some(v), None) = (parts.next(), parts.next(), parts.next(), parts.next()) else {
            continue;
        };
        let Ok(i) = i.parse::<usize>() else { continue };
        let passed = match v {
            "PASS" => true,
            "FAIL" => false,
            _ => continue,
        };
        if i == out.len() {
            out.push(CaseVerdict { index: i, passed });
        }
    }
    out
}

fn classify(verdicts: Vec<CaseVerdict>, n_cases: usize, exit_code: Option<i32>) -> (Status, Vec<CaseVerdict>) {
    let complete = verdicts.len() == n_cases;
    let all_pass = verdicts.iter().all(|v| v.passed);
    let status = match (complete, all_pass, exit_code) {
        (true, true, Some(0)) => Status::Pass,
        (true, false, _) => Status::Fail,
        _ => Status::RuntimeError,
    };
    (status, verdicts)
}

struct Captured {
    stdout: String,
    stderr: String,
    exit_code: Option<i32>,
    timed_out: bool,
}

fn drain(mut r: impl Read) -> String {
    let mut buf = Vec::new();
    let mut chunk = [0u8; 8192];
    loop {
        match r.read(&mut chunk) {
            Ok(0) | Err(_) => break,
            Ok(n) => {
                if buf.len() < MAX_CAPTURE {
                    buf.extend_from_slice(&chunk[..n.min(MAX_CAPTURE - buf.len())]);
                }
            }
        }
    }
    String::from_utf8_lossy(&buf).into_owned()
}

fn expand(argv: &[String], src: &Path, bin: &Path, dir: &Path) -> Vec<String> {
    argv.iter()
        .map(|a| {
            a.replace("{src}", &src.to_string_lossy())
                .replace("{bin}", &bin.to_string_lossy())
                .replace("{dir}", &dir.to_string_lossy())
        })
        .collect()
}

fn run_process(argv: &[String], dir: &Path, timeout: Duration, profile: &str) -> Result<Captured, ExecutorError> {
    let mut child = Command::new(&argv[0])
        .args(&argv[1..])
        .current_dir(dir)
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| {
            if e.kind() == std::io::ErrorKind::NotFound {
                ExecutorError::ToolchainMissing {
                    profile: profile.to_string(),
                    program: argv[0].clone(),
                }
            } else {
                ExecutorError::Io(format!("spawning {}: {e}", argv[0]))
            }
        })?;
    let out = child.stdout.take().expect("piped stdout");
    let err = child.stderr.take().expect("piped stderr");
    std::thread::scope(|s| {
        let out_h = s.spawn(move || drain(out));
        let err_h = s.spawn(move || drain(err));
        let waited = child.wait_timeout(timeout).map_err(|e| ExecutorError::Io(e.to_string()))?;
        let (exit_code, timed_out) = match waited {
            Some(st) => (st.code(), false),
            None => {
                let _ = child.kill();
                let _ = child.wait();
                (None, true)
            }
        };
        Ok(Captured {
            stdout: out_h.join().unwrap_or_default(),
            stderr: err_h.join().unwrap_or_default(),
            exit_code,
            timed_out,
        })
    })
}

/// Splices `candidate` into the problem's test program for `profile`,
/// builds and runs it, and reports per-case verdicts.
pub fn evaluate_candidate(
    p: &Problem,
    profile: &LanguageProfile,
    candidate: &str,
    cfg: &SandboxConfig,
) -> Result<ExecutionResult, ExecutorError> {
    cfg.validate()?;
    let program = generate_test_program(p, profile)?;
    let source = program.splice(candidate);
    let n = p.cases.len();
    let start = Instant::now();
    let (compile, run) = cfg.commands(profile);

    if run.first().map(String::as_str) == Some(crate::codegen::BUILTIN_RUNNER) {
        return Ok(run_builtin(&source, n, cfg.timeout, start));
    }

    let dir = match &cfg.workdir_root {
        Some(root) => {
            std::fs::create_dir_all(root).map_err(|e| ExecutorError::Io(e.to_string()))?;
            tempfile::Builder::new().prefix("job-").tempdir_in(root)
        }
        None => tempfile::Builder::new().prefix("transbench-job-").tempdir(),
    }
    .map_err(|e| ExecutorError::Io(e.to_string()))?;
    let src = dir.path().join(format!("main.{}", profile.extension));
    let bin = dir.path().join("main.bin");
    std::fs::write(&src, &source).map_err(|e| ExecutorError::Io(e.to_string()))?;

    if let Some(cc) = compile {
        let argv = expand(&cc, &src, &bin, dir.path());
        let c = run_process(&argv, dir.path(), cfg.compile_timeout, &profile.id)?;
        if c.timed_out || c.exit_code != Some(0) {
            let mut stderr = c.stderr;
            if c.timed_out {
                stderr.push_str("\ncompilation timed out");
            }
            if stderr.trim().is_empty() {
                stderr = c.stdout.clone();
            }
            return Ok(ExecutionResult {
                status: Status::CompileError,
                case_verdicts: vec![],
                stdout: c.stdout,
                stderr,
                exit_code: c.exit_code,
                duration: start.elapsed().as_secs_f64(),
            });
        }
    }

    let argv = expand(&run, &src, &bin, dir.path());
    let r = run_process(&argv, dir.path(), cfg.timeout, &profile.id)?;
    let duration = start.elapsed().as_secs_f64();
    if r.timed_out {
        return Ok(ExecutionResult {
            status: Status::Timeout,
            case_verdicts: vec![],
            stdout: r.stdout,
            stderr: r.stderr,
            exit_code: None,
            duration,
        });
    }
    let (status, case_verdicts) = classify(parse_verdicts(&r.stdout, n), n, r.exit_code);
    Ok(ExecutionResult {
        status,
        case_verdicts,
        stdout: r.stdout,
        stderr: r.stderr,
        exit_code: r.exit_code,
        duration,
    })
}

fn run_builtin(source: &str, n: usize, timeout: Duration, start: Instant) -> ExecutionResult {
    match pseudo::run_source(source, timeout) {
        Err(e) => ExecutionResult {
            status: Status::CompileError,
            case_verdicts: vec![],
            stdout: String::new(),
            stderr: e.to_string(),
            exit_code: None,
            duration: start.elapsed().as_secs_f64(),
        },
        Ok(out) => {
            let duration = start.elapsed().as_secs_f64();
            match out.exit {
                RunExit::Timeout => ExecutionResult {
                    status: Status::Timeout,
                    case_verdicts: vec![],
                    stdout: out.stdout,
                    stderr: String::new(),
                    exit_code: None,
                    duration: duration.max(timeout.as_secs_f64()),
                },
                exit => {
                    let (code, stderr) = match exit {
                        RunExit::Code(c) => (c, String::new()),
                        RunExit::Error(msg) => (1, msg),
                        RunExit::Timeout => unreachable!(),
                    };
                    let (status, case_verdicts) = classify(parse_verdicts(&out.stdout, n), n, Some(code));
                    ExecutionResult {
                        status,
                        case_verdicts,
                        stdout: out.stdout,
                        stderr,
                        exit_code: Some(code),
                        duration,
                    }
                }
            }
        }
    }
}

/// One unit of work for [`run_batch`].
#[derive(Debug, Clone)]
pub struct Job<'a> {
    pub problem: &'a Problem,
    pub profile: &'a LanguageProfile,
    pub candidate: String,
}

/// Runs jobs concurrently (at most `cfg.max_parallel` at once); results
/// are aligned with `jobs`.
pub fn run_batch(jobs: &[Job<'_>], cfg: &SandboxConfig) -> Vec<Result<ExecutionResult, ExecutorError>> {
    parallel_map(jobs, cfg.max_parallel, |j| evaluate_candidate(j.problem, j.profile, &j.candidate, cfg))
}

/// Order-preserving map over a bounded pool of scoped threads.
pub fn parallel_map<T: Sync, R: Send>(items: &[T], max_parallel: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let workers = max_parallel.max(1).min(items.len());
    if workers <= 1 {
        return items.iter().map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                slots.lock().expect("result slots")[i] = Some(r);
            });
        }
    });
    slots
        .into_inner()
        .expect("result slots")
        .into_iter()
        .map(|r| r.expect("every slot filled"))
        .collect()
}

/// Whether the programs a profile needs are on `PATH`.
pub fn toolchain_available(profile: &LanguageProfile, cfg: &SandboxConfig) -> bool {
    let (compile, run) = cfg.commands(profile);
    let ok = [compile.as_ref().and_then(|c| c.first()), run.first()]
        .into_iter()
        .flatten()
        .filter(|prog| !prog.starts_with('{') && prog.as_str() != crate::codegen::BUILTIN_RUNNER)
        .all(|prog| on_path(prog));
    ok
}

fn on_path(prog: &str) -> bool {
    if prog.contains('/') {
        return Path::new(prog).is_file();
    }
    std::env::var_os("PATH").is_some_and(|paths| std::env::split_paths(&paths).any(|d| d.join(prog).is_file()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdicts_tolerate_noise() {
        let out = "hello\nCASE 0 PASS\nCASE 2 PASS\nCASE 1 FAIL\n  CASE 2 PASS  \nCASE 3 PASS\ntrailing";
        let v = parse_verdicts(out, 3);
        assert_eq!(v.len(), 3);
        assert_eq!(v.iter().map(|c| c.passed).collect::<Vec<_>>(), vec![true, false, true]);
        assert!(v.iter().enumerate().all(|(i, c)| c.index == i));
    }

    #[test]
    fn classification() {
        let pass = |i| CaseVerdict { index: i, passed: true };
        let fail = |i| CaseVerdict { index: i, passed: false };
        assert_eq!(classify(vec![pass(0), pass(1)], 2, Some(0)).0, Status::Pass);
        assert_eq!(classify(vec![pass(0), fail(1)], 2, Some(1)).0, Status::Fail);
        assert_eq!(classify(vec![pass(0)], 2, Some(1)).0, Status::RuntimeError);
        assert_eq!(classify(vec![pass(0), pass(1)], 2, Some(3)).0, Status::RuntimeError);
        assert_eq!(classify(vec![pass(0)], 2, Some(1)).1.len(), 1);
    }

    #[test]
    fn parallel_map_preserves_order() {
        let xs: Vec<u64> = (0..50).collect();
        assert_eq!(parallel_map(&xs, 7, |x| x * 2), xs.iter().map(|x| x * 2).collect::<Vec<_>>());
        assert!(parallel_map(&Vec::<u64>::new(), 4, |x| *x).is_empty());
    }

    #[test]
    fn config_validation() {
        let cfg = SandboxConfig {
            max_parallel: 0,
            ..SandboxConfig::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = SandboxConfig {
            timeout: Duration::ZERO,
            ..SandboxConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}

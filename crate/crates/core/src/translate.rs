//! Direct and intermediary translation, computational accuracy and the
//! all-pairs matrix runner.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codegen::{CodegenError, LanguageProfile, ProfileRegistry};
use crate::executor::{evaluate_candidate, parallel_map, CaseVerdict, ExecutionResult, ExecutorError, SandboxConfig, Status};
use crate::model::{FixtureRecord, GenerationParams, ModelClient, ModelError, fixture_key};
use crate::problem::{Problem, ProblemSet};
use crate::prompting::{
    build_prompt_for_code, extract_code, select_demos, style_transfer_prompt, PromptError, PromptSpec, PromptTemplates,
};
use crate::report::{lit, CaMatrix, ReportError, Scalar};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TranslateError {
    #[error("no outcomes to score")]
    EmptyOutcomeSet,
    #[error("outcomes mix configurations: {0}")]
    MixedOutcomeSet(String),
    #[error("invalid intermediary mode: {0}")]
    InvalidMode(String),
    #[error("unknown problem {0}")]
    UnknownProblem(String),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Executor(#[from] ExecutorError),
    #[error(transparent)]
    Codegen(#[from] CodegenError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("I/O failure: {0}")]
    Io(String),
}

impl TranslateError {
    /// Whether the failure comes from the environment (missing toolchain,
    /// unreachable model, absent fixture) rather than from the inputs.
    pub fn is_environment(&self) -> bool {
        matches!(
            self,
            TranslateError::Model(
                ModelError::EndpointUnreachable(_) | ModelError::RateLimited { .. } | ModelError::ReplayMiss { .. }
            ) | TranslateError::Executor(ExecutorError::ToolchainMissing { .. } | ExecutorError::Io(_))
                | TranslateError::Io(_)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslationTask {
    pub problem_id: String,
    pub spec: PromptSpec,
    pub params: GenerationParams,
}

impl TranslationTask {
    pub fn new(problem_id: impl Into<String>, spec: PromptSpec, params: GenerationParams) -> Self {
        TranslationTask {
            problem_id: problem_id.into(),
            spec,
            params,
        }
    }

    pub fn source_lang(&self) -> &str {
        &self.spec.source_lang
    }

    pub fn target_lang(&self) -> &str {
        &self.spec.target_lang
    }

    fn config_key(&self) -> String {
        format!(
            "{}->{} {} {}-shot t={} p={}",
            self.spec.source_lang,
            self.spec.target_lang,
            self.spec.variant,
            self.spec.shots,
            self.params.temperature,
            self.params.top_p
        )
    }
}

/// How the intermediate translation is produced.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntermediaryMode {
    /// Rewrite the source in a procedural style, staying in the source language.
    StyleTransfer,
    /// Translate through another language first.
    ViaLanguage(String),
}

impl IntermediaryMode {
    pub fn validate(&self, task: &TranslationTask) -> Result<(), TranslateError> {
        match self {
            IntermediaryMode::StyleTransfer => Ok(()),
            IntermediaryMode::ViaLanguage(l) if l == task.source_lang() || l == task.target_lang() => {
                Err(TranslateError::InvalidMode(format!(
                    "intermediary language {l} cannot be used for {}->{}",
                    task.source_lang(),
                    task.target_lang()
                )))
            }
            IntermediaryMode::ViaLanguage(_) => Ok(()),
        }
    }

    fn language<'t>(&'t self, task: &'t TranslationTask) -> &'t str {
        match self {
            IntermediaryMode::StyleTransfer => task.source_lang(),
            IntermediaryMode::ViaLanguage(l) => l,
        }
    }
}

impl fmt::Display for IntermediaryMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IntermediaryMode::StyleTransfer => f.write_str("style_transfer"),
            IntermediaryMode::ViaLanguage(l) => write!(f, "via:{l}"),
        }
    }
}

impl FromStr for IntermediaryMode {
    type Err = TranslateError;

    /// Accepts `style_transfer` or `via:<lang>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "style_transfer" => Ok(IntermediaryMode::StyleTransfer),
            _ => match s.strip_prefix("via:") {
                Some(l) if !l.is_empty() => Ok(IntermediaryMode::ViaLanguage(l.into())),
                _ => Err(TranslateError::InvalidMode(format!("unknown mode {s:?}"))),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomePath {
    Direct,
    IntermediaryOk,
    IntermediaryFallback,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TranslationOutcome {
    pub task: TranslationTask,
    pub candidate: String,
    pub execution: ExecutionResult,
    pub path: OutcomePath,
    pub intermediate: Option<String>,
    pub intermediate_execution: Option<ExecutionResult>,
    pub exchanges: Vec<FixtureRecord>,
    /// Set when the completion held no extractable code.
    pub extraction_error: Option<String>,
}

impl TranslationOutcome {
    pub fn passed(&self) -> bool {
        self.execution.passed()
    }

    pub fn record(&self) -> OutcomeRecord {
        OutcomeRecord {
            problem_id: self.task.problem_id.clone(),
            source_lang: self.task.spec.source_lang.clone(),
            target_lang: self.task.spec.target_lang.clone(),
            variant: self.task.spec.variant.to_string(),
            shots: self.task.spec.shots,
            path: self.path,
            status: self.execution.status,
            verdicts: self.execution.verdict_vector(),
            candidate: self.candidate.clone(),
            intermediate: self.intermediate.clone(),
            intermediate_status: self.intermediate_execution.as_ref().map(|e| e.status),
            exchange_keys: self.exchanges.iter().map(|e| e.key.clone()).collect(),
            extraction_error: self.extraction_error.clone(),
        }
    }
}

/// The deterministic part of an outcome, one line of an outcome log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeRecord {
    pub problem_id: String,
    pub source_lang: String,
    pub target_lang: String,
    pub variant: String,
    pub shots: usize,
    pub path: OutcomePath,
    pub status: Status,
    pub verdicts: Vec<bool>,
    pub candidate: String,
    pub intermediate: Option<String>,
    pub intermediate_status: Option<Status>,
    pub exchange_keys: Vec<String>,
    pub extraction_error: Option<String>,
}

/// 100 × passes / total.
pub fn ca_from_statuses<S: Scalar>(statuses: impl IntoIterator<Item = Status>) -> Result<S, TranslateError> {
    let (mut pass, mut total) = (0usize, 0usize);
    for s in statuses {
        total += 1;
        pass += usize::from(s == Status::Pass);
    }
    if total == 0 {
        return Err(TranslateError::EmptyOutcomeSet);
    }
    let frac = S::from_usize(pass).expect("count fits") / S::from_usize(total).expect("count fits");
    Ok(frac * lit(100.0))
}

/// Computational accuracy of outcomes sharing one configuration.
pub fn compute_ca<S: Scalar>(outcomes: &[TranslationOutcome]) -> Result<S, TranslateError> {
    let first = outcomes.first().ok_or(TranslateError::EmptyOutcomeSet)?;
    let key = first.task.config_key();
    if let Some(o) = outcomes.iter().find(|o| o.task.config_key() != key) {
        return Err(TranslateError::MixedOutcomeSet(format!("{key} vs {}", o.task.config_key())));
    }
    ca_from_statuses(outcomes.iter().map(|o| o.execution.status))
}

/// Everything a translation run needs.
pub struct Translator<'a> {
    pub problems: &'a ProblemSet,
    pub profiles: &'a ProfileRegistry,
    pub templates: &'a PromptTemplates,
    pub demo_pool: &'a [Problem],
    pub sandbox: &'a SandboxConfig,
    pub model: &'a dyn ModelClient,
}

struct Step {
    code: Option<String>,
    error: Option<String>,
    exchange: FixtureRecord,
}

fn empty_result(p: &Problem, reason: &str) -> ExecutionResult {
    ExecutionResult {
        status: Status::Fail,
        case_verdicts: (0..p.cases.len()).map(|index| CaseVerdict { index, passed: false }).collect(),
        stdout: String::new(),
        stderr: reason.into(),
        exit_code: None,
        duration: 0.0,
    }
}

impl<'a> Translator<'a> {
    pub fn problem(&self, id: &str) -> Result<&'a Problem, TranslateError> {
        self.problems
            .problems
            .iter()
            .find(|p| p.id == id)
            .ok_or_else(|| TranslateError::UnknownProblem(id.into()))
    }

    fn generate_code(&self, prompt: String, params: &GenerationParams, profile: &LanguageProfile, p: &Problem) -> Result<Step, TranslateError> {
        let params = params.with_n(1);
        let completions = self.model.generate(&prompt, &params)?;
        let exchange = FixtureRecord {
            key: fixture_key(&prompt, &params),
            prompt,
            params,
            completions,
        };
        let (code, error) = match extract_code(&exchange.completions[0], profile, &p.signature) {
            Ok(c) => (Some(c), None),
            Err(PromptError::EmptyCompletion) => (None, Some(PromptError::EmptyCompletion.to_string())),
            Err(e) => return Err(e.into()),
        };
        Ok(Step { code, error, exchange })
    }

    fn translation_prompt(&self, spec: &PromptSpec, p: &Problem, source_code: &str) -> Result<String, TranslateError> {
        let demos = select_demos(self.demo_pool, spec, &p.id)?;
        Ok(build_prompt_for_code(self.templates, spec, p, source_code, &demos, self.profiles)?)
    }

    fn evaluate(&self, p: &Problem, profile: &LanguageProfile, step: &Step) -> Result<ExecutionResult, TranslateError> {
        match &step.code {
            Some(code) => Ok(evaluate_candidate(p, profile, code, self.sandbox)?),
            None => Ok(empty_result(p, step.error.as_deref().unwrap_or(""))),
        }
    }

    fn check_task(&self, task: &TranslationTask) -> Result<&'a Problem, TranslateError> {
        task.spec.validate()?;
        task.params.validate()?;
        let p = self.problem(&task.problem_id)?;
        if p.solution(task.source_lang()).is_none() {
            return Err(PromptError::MissingSolution {
                problem: p.id.clone(),
                lang: task.source_lang().into(),
            }
            .into());
        }
        Ok(p)
    }

    /// One generation call, first candidate only.
    pub fn translate_direct(&self, task: &TranslationTask) -> Result<TranslationOutcome, TranslateError> {
        let p = self.check_task(task)?;
        let target = self.profiles.get(task.target_lang())?;
        let source = p.solution(task.source_lang()).expect("checked");
        let prompt = self.translation_prompt(&task.spec, p, source)?;
        let step = self.generate_code(prompt, &task.params, target, p)?;
        let execution = self.evaluate(p, target, &step)?;
        Ok(TranslationOutcome {
            task: task.clone(),
            candidate: step.code.unwrap_or_default(),
            execution,
            path: OutcomePath::Direct,
            intermediate: None,
            intermediate_execution: None,
            exchanges: vec![step.exchange],
            extraction_error: step.error,
        })
    }

    /// Produces and verifies an intermediate translation, then translates
    /// it to the target. Falls back to [`Translator::translate_direct`]
    /// when the intermediate fails its tests.
    pub fn translate_intermediary(&self, task: &TranslationTask, mode: &IntermediaryMode) -> Result<TranslationOutcome, TranslateError> {
        mode.validate(task)?;
        let p = self.check_task(task)?;
        let il = mode.language(task);
        let il_profile = self.profiles.get(il)?;
        let target = self.profiles.get(task.target_lang())?;
        let source = p.solution(task.source_lang()).expect("checked");

        let prompt = match mode {
            IntermediaryMode::StyleTransfer => {
                style_transfer_prompt(self.templates, source, self.profiles.get(task.source_lang())?)
            }
            IntermediaryMode::ViaLanguage(l) => self.translation_prompt(&task.spec.retarget(task.source_lang(), l), p, source)?,
        };
        let first = self.generate_code(prompt, &task.params, il_profile, p)?;
        let first_exec = self.evaluate(p, il_profile, &first)?;

        if !first_exec.passed() {
            let mut direct = self.translate_direct(task)?;
            direct.path = OutcomePath::IntermediaryFallback;
            direct.intermediate = first.code;
            direct.intermediate_execution = Some(first_exec);
            direct.exchanges.insert(0, first.exchange);
            return Ok(direct);
        }

        let intermediate = first.code.expect("passed code exists");
        let spec = task.spec.retarget(il, task.target_lang());
        let prompt = self.translation_prompt(&spec, p, &intermediate)?;
        let second = self.generate_code(prompt, &task.params, target, p)?;
        let execution = self.evaluate(p, target, &second)?;
        Ok(TranslationOutcome {
            task: task.clone(),
            candidate: second.code.unwrap_or_default(),
            execution,
            path: OutcomePath::IntermediaryOk,
            intermediate: Some(intermediate),
            intermediate_execution: Some(first_exec),
            exchanges: vec![first.exchange, second.exchange],
            extraction_error: second.error,
        })
    }

    /// Runs one task directly or through `mode`.
    pub fn run_task(&self, task: &TranslationTask, mode: Option<&IntermediaryMode>) -> Result<TranslationOutcome, TranslateError> {
        match mode {
            None => self.translate_direct(task),
            Some(m) => self.translate_intermediary(task, m),
        }
    }

    /// Translates every problem between every ordered pair of distinct
    /// `languages`. Pairs that a via-language mode cannot serve are skipped.
    pub fn run_matrix(
        &self,
        languages: &[String],
        spec: &PromptSpec,
        params: &GenerationParams,
        mode: Option<&IntermediaryMode>,
    ) -> MatrixRun {
        let mut pairs = Vec::new();
        for s in languages {
            for t in languages {
                if s == t {
                    continue;
                }
                if let Some(IntermediaryMode::ViaLanguage(l)) = mode {
                    if l == s || l == t {
                        continue;
                    }
                }
                pairs.push((s.clone(), t.clone()));
            }
        }
        self.run_pairs(&pairs, spec, params, mode)
    }

    /// Translates every problem with a source solution for each ordered
    /// pair. Per-task errors are collected, never fatal; a failed task
    /// counts as not passed.
    pub fn run_pairs(
        &self,
        pairs: &[(String, String)],
        spec: &PromptSpec,
        params: &GenerationParams,
        mode: Option<&IntermediaryMode>,
    ) -> MatrixRun {
        let mut tasks = Vec::new();
        for (s, t) in pairs {
            for p in &self.problems.problems {
                if p.solution(s).is_some() {
                    tasks.push(TranslationTask::new(p.id.clone(), spec.retarget(s, t), params.clone()));
                }
            }
        }
        let results = parallel_map(&tasks, self.sandbox.max_parallel, |task| self.run_task(task, mode));
        let mut outcomes = Vec::new();
        let mut failures = Vec::new();
        let mut statuses: BTreeMap<(String, String), Vec<Status>> = BTreeMap::new();
        for (task, r) in tasks.into_iter().zip(results) {
            let key = (task.source_lang().to_string(), task.target_lang().to_string());
            match r {
                Ok(o) => {
                    statuses.entry(key).or_default().push(o.execution.status);
                    outcomes.push(o);
                }
                Err(error) => {
                    statuses.entry(key).or_default().push(Status::Fail);
                    failures.push(TaskFailure { task, error });
                }
            }
        }
        let label = match mode {
            None => format!("{} {}-shot", spec.variant, spec.shots),
            Some(m) => format!("{} {}-shot {m}", spec.variant, spec.shots),
        };
        let mut matrix = CaMatrix::new(label);
        for ((s, t), st) in statuses {
            let ca: f64 = ca_from_statuses(st).expect("non-empty");
            matrix.insert(&s, &t, ca).expect("valid entry");
        }
        MatrixRun {
            matrix,
            outcomes,
            failures,
        }
    }
}

/// Model stand-in that answers every translation prompt with the canonical
/// solution of the problem whose code it finds in the prompt's last code
/// block. Unrecognized prompts get an empty completion.
pub struct OracleClient {
    problems: Vec<Problem>,
    profiles: ProfileRegistry,
    templates: PromptTemplates,
}

impl OracleClient {
    pub fn new(problems: Vec<Problem>, profiles: ProfileRegistry, templates: PromptTemplates) -> Self {
        OracleClient {
            problems,
            profiles,
            templates,
        }
    }

    fn answer(&self, prompt: &str) -> Option<String> {
        let block = last_fenced_block(prompt)?;
        let (p, lang) = self.problems.iter().find_map(|p| {
            p.solutions
                .iter()
                .find(|(_, code)| code.trim_end() == block.trim_end())
                .map(|(lang, _)| (p, lang.clone()))
        })?;
        let mut best: Option<(usize, &str)> = None;
        for s in self.profiles.iter() {
            for t in self.profiles.iter().filter(|t| t.id != s.id) {
                if let Some(pos) = prompt.rfind(&self.templates.intent(s, t)) {
                    if best.is_none_or(|(b, _)| pos > b) {
                        best = Some((pos, &t.id));
                    }
                }
            }
        }
        let target = best.map_or(lang.as_str(), |(_, t)| t);
        let profile = self.profiles.get(target).ok()?;
        Some(self.templates.code_block(p.solution(target)?, profile))
    }
}

fn last_fenced_block(text: &str) -> Option<&str> {
    let lines: Vec<(usize, &str)> = text
        .split_inclusive('\n')
        .scan(0, |off, l| {
            let start = *off;
            *off += l.len();
            Some((start, l))
        })
        .collect();
    let fences: Vec<usize> = lines
        .iter()
        .enumerate()
        .filter(|(_, (_, l))| l.trim_start().starts_with("```"))
        .map(|(i, _)| i)
        .collect();
    if fences.len() < 2 {
        return None;
    }
    let (open, close) = (fences[fences.len() - 2], fences[fences.len() - 1]);
    let start = lines[open].0 + lines[open].1.len();
    Some(&text[start..lines[close].0])
}

impl ModelClient for OracleClient {
    fn id(&self) -> &str {
        "oracle"
    }

    fn generate(&self, prompt: &str, params: &GenerationParams) -> Result<Vec<String>, ModelError> {
        params.validate()?;
        Ok(vec![self.answer(prompt).unwrap_or_default(); params.n])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskFailure {
    pub task: TranslationTask,
    pub error: TranslateError,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixRun {
    pub matrix: CaMatrix<f64>,
    pub outcomes: Vec<TranslationOutcome>,
    pub failures: Vec<TaskFailure>,
}

/// Writes one JSON line per outcome, ordered by (source, target, problem).
pub fn write_outcome_log(path: &Path, outcomes: &[TranslationOutcome]) -> Result<(), TranslateError> {
    let mut records: Vec<OutcomeRecord> = outcomes.iter().map(TranslationOutcome::record).collect();
    records.sort_by(|a, b| {
        (&a.source_lang, &a.target_lang, &a.problem_id).cmp(&(&b.source_lang, &b.target_lang, &b.problem_id))
    });
    let io = |e: std::io::Error| TranslateError::Io(format!("{}: {e}", path.display()));
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
    for r in records {
        writeln!(f, "{}", serde_json::to_string(&r).expect("record serializes")).map_err(io)?;
    }
    f.flush().map_err(io)
}

pub fn read_outcome_log(path: &Path) -> Result<Vec<OutcomeRecord>, TranslateError> {
    let text = std::fs::read_to_string(path).map_err(|e| TranslateError::Io(format!("{}: {e}", path.display())))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| TranslateError::Io(format!("{}: {e}", path.display()))))
        .collect()
}

/// Rebuilds a CA matrix from logged outcomes.
pub fn matrix_from_records(label: &str, records: &[OutcomeRecord]) -> Result<CaMatrix<f64>, TranslateError> {
    let mut statuses: BTreeMap<(&str, &str), Vec<Status>> = BTreeMap::new();
    for r in records {
        statuses.entry((&r.source_lang, &r.target_lang)).or_default().push(r.status);
    }
    let mut m = CaMatrix::new(label);
    for ((s, t), st) in statuses {
        m.insert(s, t, ca_from_statuses(st)?)?;
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ca_arithmetic() {
        let ca = |pass: usize, total: usize| -> f64 {
            ca_from_statuses((0..total).map(|i| if i < pass { Status::Pass } else { Status::Fail })).unwrap()
        };
        assert_eq!(ca(164, 164), 100.0);
        assert_eq!(crate::report::format2(ca(110, 164)), "67.07");
        assert_eq!(ca(0, 5), 0.0);
        assert_eq!(ca_from_statuses::<f64>([]), Err(TranslateError::EmptyOutcomeSet));
    }

    #[test]
    fn mode_parsing_and_guard() {
        assert_eq!("style_transfer".parse::<IntermediaryMode>().unwrap(), IntermediaryMode::StyleTransfer);
        assert_eq!("via:go".parse::<IntermediaryMode>().unwrap(), IntermediaryMode::ViaLanguage("go".into()));
        assert!("via:".parse::<IntermediaryMode>().is_err());
        let task = TranslationTask::new(
            "p",
            PromptSpec::new(crate::prompting::PromptVariant::Basic, 0, "python", "go"),
            GenerationParams::default(),
        );
        assert!(matches!(
            IntermediaryMode::ViaLanguage("go".into()).validate(&task),
            Err(TranslateError::InvalidMode(_))
        ));
        assert!(IntermediaryMode::ViaLanguage("cpp".into()).validate(&task).is_ok());
    }

    #[test]
    fn environment_classification() {
        assert!(TranslateError::Model(ModelError::EndpointUnreachable("x".into())).is_environment());
        assert!(!TranslateError::EmptyOutcomeSet.is_environment());
    }
}

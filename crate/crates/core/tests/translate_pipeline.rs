use std::path::PathBuf;

use transbench_core::codegen::ProfileRegistry;
use transbench_core::executor::{SandboxConfig, Status};
use transbench_core::model::{GenerationParams, ModelClient, ScriptedClient};
use transbench_core::problem::ProblemSet;
use transbench_core::prompting::{PromptSpec, PromptTemplates, PromptVariant};
use transbench_core::translate::{
    compute_ca, matrix_from_records, read_outcome_log, write_outcome_log, IntermediaryMode, OracleClient, OutcomePath,
    TranslateError, TranslationTask, Translator,
};

fn load(sub: &str) -> ProblemSet {
    ProblemSet::load_dir(&PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(sub)).unwrap()
}

struct Env {
    problems: ProblemSet,
    demos: ProblemSet,
    profiles: ProfileRegistry,
    templates: PromptTemplates,
    sandbox: SandboxConfig,
}

impl Env {
    fn new() -> Self {
        Env {
            problems: load("problems"),
            demos: load("demos"),
            profiles: ProfileRegistry::builtin(),
            templates: PromptTemplates::default(),
            sandbox: SandboxConfig::default(),
        }
    }

    fn translator<'a>(&'a self, model: &'a dyn ModelClient) -> Translator<'a> {
        Translator {
            problems: &self.problems,
            profiles: &self.profiles,
            templates: &self.templates,
            demo_pool: &self.demos.problems,
            sandbox: &self.sandbox,
            model,
        }
    }

    fn oracle(&self) -> OracleClient {
        OracleClient::new(self.problems.problems.clone(), self.profiles.clone(), self.templates.clone())
    }
}

fn task(problem: &str, source: &str, target: &str) -> TranslationTask {
    TranslationTask::new(
        problem,
        PromptSpec::new(PromptVariant::WithTargetSignature, 2, source, target),
        GenerationParams::default(),
    )
}

fn fenced(code: &str) -> String {
    format!("Here you go:\n```\n{code}```\n")
}

#[test]
fn canonical_answer_passes_with_one_call() {
    let env = Env::new();
    let sol = env.problems.problems[0].solution("pseudo").unwrap().to_string();
    let id = env.problems.problems[0].id.clone();
    let model = ScriptedClient::constant(fenced(&sol));
    let out = env.translator(&model).translate_direct(&task(&id, "python", "pseudo")).unwrap();
    assert_eq!(out.execution.status, Status::Pass);
    assert_eq!(out.path, OutcomePath::Direct);
    assert_eq!(model.calls(), 1);
    assert_eq!(out.exchanges.len(), 1);
}

#[test]
fn empty_completion_is_a_failed_outcome() {
    let env = Env::new();
    let model = ScriptedClient::constant("");
    let out = env.translator(&model).translate_direct(&task("add", "python", "pseudo")).unwrap();
    assert_eq!(out.execution.status, Status::Fail);
    assert!(out.extraction_error.is_some());
    assert_eq!(compute_ca::<f64>(&[out]).unwrap(), 0.0);
}

#[test]
fn intermediary_verified_path_makes_two_calls() {
    let env = Env::new();
    let p = env.problems.problems.iter().find(|p| p.id == "below_zero").unwrap();
    let model = ScriptedClient::sequence(vec![
        vec![fenced(p.solution("pseudo").unwrap())],
        vec![fenced(p.solution("rust").unwrap())],
    ]);
    let t = env.translator(&model);
    let out = t
        .translate_intermediary(&task("below_zero", "python", "rust"), &IntermediaryMode::ViaLanguage("pseudo".into()))
        .unwrap();
    assert_eq!(out.path, OutcomePath::IntermediaryOk);
    assert_eq!(out.intermediate_execution.as_ref().unwrap().status, Status::Pass);
    assert_eq!(out.execution.status, Status::Pass);
    assert_eq!(model.calls(), 2);
    assert!(model.prompts()[1].contains(p.solution("pseudo").unwrap().trim_end()));
}

#[test]
fn intermediary_failure_falls_back_to_direct() {
    let env = Env::new();
    let p = env.problems.problems.iter().find(|p| p.id == "below_zero").unwrap();
    let model = ScriptedClient::sequence(vec![
        vec![fenced("def below_zero(operations):\n    return False\n")],
        vec![fenced(p.solution("pseudo").unwrap())],
    ]);
    let out = env
        .translator(&model)
        .translate_intermediary(&task("below_zero", "python", "pseudo"), &IntermediaryMode::StyleTransfer)
        .unwrap();
    assert_eq!(out.path, OutcomePath::IntermediaryFallback);
    assert_eq!(out.intermediate_execution.as_ref().unwrap().status, Status::Fail);
    assert_eq!(out.execution.status, Status::Pass);
    assert_eq!(model.calls(), 2);
    assert_eq!(out.exchanges.len(), 2);
}

#[test]
fn via_language_guard() {
    let env = Env::new();
    let model = ScriptedClient::constant("x");
    let r = env
        .translator(&model)
        .translate_intermediary(&task("add", "python", "go"), &IntermediaryMode::ViaLanguage("go".into()));
    assert!(matches!(r, Err(TranslateError::InvalidMode(_))));
    assert_eq!(model.calls(), 0);
}

#[test]
fn oracle_matrix_is_all_pass() {
    let env = Env::new();
    let oracle = env.oracle();
    let langs: Vec<String> = ["pseudo", "python"].map(String::from).to_vec();
    let spec = PromptSpec::new(PromptVariant::WithTargetSignature, 2, "python", "pseudo");
    let run = env.translator(&oracle).run_matrix(&langs, &spec, &GenerationParams::default(), None);
    assert!(run.failures.is_empty(), "{:?}", run.failures);
    assert_eq!(run.matrix.len(), 2);
    assert_eq!(run.matrix.get("python", "pseudo"), Some(100.0));
    assert_eq!(run.matrix.get("pseudo", "python"), Some(100.0));
    assert_eq!(run.outcomes.len(), 2 * env.problems.problems.len());

    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("outcomes.jsonl");
    write_outcome_log(&log, &run.outcomes).unwrap();
    let records = read_outcome_log(&log).unwrap();
    assert_eq!(matrix_from_records(&run.matrix.label, &records).unwrap(), run.matrix);
}

#[test]
fn oracle_intermediary_takes_verified_path() {
    let env = Env::new();
    let oracle = env.oracle();
    let out = env
        .translator(&oracle)
        .translate_intermediary(&task("count_words", "python", "pseudo"), &IntermediaryMode::StyleTransfer)
        .unwrap();
    assert_eq!(out.path, OutcomePath::IntermediaryOk);
    assert!(out.passed());
}

#[test]
fn mixed_configurations_are_rejected() {
    let env = Env::new();
    let oracle = env.oracle();
    let t = env.translator(&oracle);
    let a = t.translate_direct(&task("add", "python", "pseudo")).unwrap();
    let b = t.translate_direct(&task("add", "pseudo", "python")).unwrap();
    assert!(matches!(compute_ca::<f64>(&[a, b]), Err(TranslateError::MixedOutcomeSet(_))));
    assert_eq!(compute_ca::<f64>(&[]), Err(TranslateError::EmptyOutcomeSet));
}

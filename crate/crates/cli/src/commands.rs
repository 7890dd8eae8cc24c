use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;
use transbench_core::codegen::{generate_test_program, ProfileRegistry};
use transbench_core::executor::SandboxConfig;
use transbench_core::model::{GenerationParams, HttpClient, ModelClient, ModelError, RecordingClient, ReplayClient, ENV_ENDPOINT, ENV_TOKEN};
use transbench_core::problem::ProblemSet;
use transbench_core::prompting::{PromptSpec, PromptTemplates};
use transbench_core::report::{delta_report, scores_from_csv, CaMatrix};
use transbench_core::samples;
use transbench_core::selftrain::{emit_dataset, read_api_list, SelfTrainer, SelftrainConfig};
use transbench_core::translate::{
    matrix_from_records, read_outcome_log, write_outcome_log, IntermediaryMode, MatrixRun, OracleClient, TranslationTask,
    Translator,
};

use crate::args::{GenTestsArgs, InputArgs, IntermediaryArgs, ModelArgs, PromptArgs, ReplayArgs, ReportArgs, SelftrainArgs, TranslateArgs};
use crate::config::{absolute, ModelSource, RunConfig, RunKind, EXCHANGES_FILE};
use crate::UsageError;

/// How a completed command went.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Summary {
    pub failures: usize,
    pub environment: bool,
}

impl Summary {
    pub fn exit_code(self) -> u8 {
        match (self.failures, self.environment) {
            (0, _) => crate::EXIT_OK,
            (_, true) => crate::EXIT_ENVIRONMENT,
            _ => crate::EXIT_FAILURES,
        }
    }
}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn load_problems(path: Option<&Path>) -> Result<ProblemSet> {
    let set = match path {
        Some(p) => ProblemSet::load_dir(p)?,
        None => samples::problems(),
    };
    if set.is_empty() {
        return Err(usage("the problem set is empty"));
    }
    Ok(set)
}

/// Builtin profiles plus any listed profile files; returns the registry
/// and the language ids named by `entries` in order.
fn load_profiles(entries: &[String]) -> Result<(ProfileRegistry, Vec<String>)> {
    let mut reg = ProfileRegistry::builtin();
    let mut ids = Vec::new();
    for e in entries {
        let e = e.trim();
        if e.is_empty() {
            continue;
        }
        if e.ends_with(".json") {
            let text = std::fs::read_to_string(e).with_context(|| format!("reading profile {e}"))?;
            let profile = transbench_core::codegen::LanguageProfile::from_json(&text)?;
            ids.push(profile.id.clone());
            reg.register(profile)?;
        } else {
            reg.get(e)?;
            ids.push(e.to_string());
        }
    }
    Ok((reg, ids))
}

fn absolute_profiles(entries: &[String]) -> Result<Vec<String>> {
    entries
        .iter()
        .map(|e| {
            if e.ends_with(".json") {
                Ok(absolute(Path::new(e))
                    .map_err(|err| usage(err.to_string()))?
                    .display()
                    .to_string())
            } else {
                Ok(e.clone())
            }
        })
        .collect()
}

fn sandbox(jobs: usize) -> SandboxConfig {
    SandboxConfig {
        max_parallel: jobs.max(1),
        ..SandboxConfig::default()
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn gen_tests(args: &GenTestsArgs) -> Result<Summary> {
    let problems = load_problems(args.inputs.problems.as_deref())?;
    let (reg, mut ids) = load_profiles(&args.inputs.profiles)?;
    if ids.is_empty() {
        ids = reg.ids().map(String::from).collect();
    }
    let mut summary = Summary::default();
    for id in &ids {
        let profile = reg.get(id)?;
        let dir = args.out.join(id);
        create_dir(&dir)?;
        for p in &problems.problems {
            match generate_test_program(p, profile) {
                Ok(prog) => write(&dir.join(format!("{}.{}", p.id, profile.extension)), &prog.source)?,
                Err(e) => {
                    eprintln!("{id}/{}: {e}", p.id);
                    summary.failures += 1;
                }
            }
        }
    }
    println!(
        "wrote {} programs for {} profiles to {}",
        ids.len() * problems.len() - summary.failures,
        ids.len(),
        args.out.display()
    );
    Ok(summary)
}

fn model_source(m: &ModelArgs) -> Result<ModelSource> {
    if m.oracle {
        return Ok(ModelSource::Oracle);
    }
    if let Some(f) = &m.fixture {
        return Ok(ModelSource::Fixture {
            path: absolute(f).map_err(|e| usage(e.to_string()))?,
        });
    }
    match std::env::var(ENV_ENDPOINT) {
        Ok(endpoint) if !endpoint.trim().is_empty() => Ok(ModelSource::Http { endpoint }),
        _ => Err(ModelError::EndpointUnreachable(format!("{ENV_ENDPOINT} is not set and no --fixture was given")).into()),
    }
}

fn base_config(kind: RunKind, inputs: &InputArgs, prompt: &PromptArgs, model: &ModelArgs) -> Result<RunConfig> {
    let problems = match &inputs.problems {
        Some(p) => Some(absolute(p).map_err(|e| usage(e.to_string()))?),
        None => None,
    };
    Ok(RunConfig {
        command: kind,
        problems,
        profiles: absolute_profiles(&inputs.profiles)?,
        source: prompt.source.clone(),
        target: prompt.target.clone(),
        variant: prompt.variant,
        shots: prompt.shots,
        mode: None,
        il_lang: None,
        seed: model.seed,
        params: GenerationParams::default(),
        apis: None,
        per_api: 1,
        model: model_source(model)?,
        template_version: PromptTemplates::default().version().to_string(),
    })
}

pub fn translate(args: &TranslateArgs) -> Result<Summary> {
    let cfg = base_config(RunKind::Translate, &args.inputs, &args.prompt, &args.model)?;
    execute(&cfg, &args.model.out, args.inputs.jobs, None)
}

pub fn intermediary(args: &IntermediaryArgs) -> Result<Summary> {
    let mut cfg = base_config(RunKind::Intermediary, &args.inputs, &args.prompt, &args.model)?;
    cfg.mode = Some(args.mode.clone());
    cfg.il_lang = args.il_lang.clone();
    parse_mode(&cfg)?;
    execute(&cfg, &args.model.out, args.inputs.jobs, None)
}

pub fn selftrain(args: &SelftrainArgs) -> Result<Summary> {
    let mut cfg = base_config(RunKind::Selftrain, &args.inputs, &args.prompt, &args.model)?;
    cfg.mode = Some(args.mode.to_string());
    cfg.apis = Some(absolute(&args.apis).map_err(|e| usage(e.to_string()))?);
    cfg.per_api = args.per_api;
    execute(&cfg, &args.model.out, args.inputs.jobs, None)
}

pub fn replay(args: &ReplayArgs) -> Result<Summary> {
    let cfg = RunConfig::read(&args.bundle).map_err(|e| usage(format!("{e:#}")))?;
    let fixture = args.bundle.join(EXCHANGES_FILE);
    if !fixture.is_file() {
        return Err(usage(format!("{} has no {EXCHANGES_FILE}", args.bundle.display())));
    }
    execute(&cfg, &args.out, args.jobs, Some(&fixture))
}

fn parse_mode(cfg: &RunConfig) -> Result<IntermediaryMode> {
    let raw = cfg.mode.as_deref().unwrap_or("");
    let mode = match (raw, cfg.il_lang.as_deref()) {
        ("style_transfer", None) => IntermediaryMode::StyleTransfer,
        ("style_transfer", Some(_)) => return Err(usage("--il-lang only applies to --mode via_language")),
        ("via_language", Some(l)) => IntermediaryMode::ViaLanguage(l.to_string()),
        ("via_language", None) => return Err(usage("--mode via_language needs --il-lang")),
        (other, None) => other.parse().map_err(|e: transbench_core::translate::TranslateError| usage(e.to_string()))?,
        (other, Some(_)) => return Err(usage(format!("unknown intermediary mode {other:?}"))),
    };
    Ok(mode)
}

fn pairs(cfg: &RunConfig, languages: &[String]) -> Result<Option<(String, String)>> {
    match (&cfg.source, &cfg.target) {
        (Some(s), Some(t)) => {
            if s == t {
                return Err(usage("--source and --target must differ"));
            }
            Ok(Some((s.clone(), t.clone())))
        }
        (None, None) => {
            if languages.len() < 2 {
                return Err(usage("give --source and --target, or at least two --profiles"));
            }
            Ok(None)
        }
        _ => Err(usage("--source and --target go together")),
    }
}

/// Runs a recorded command. `replay` overrides the configured model with
/// an exchange log.
pub fn execute(cfg: &RunConfig, out: &Path, jobs: usize, replay: Option<&Path>) -> Result<Summary> {
    let problems = load_problems(cfg.problems.as_deref())?;
    let (profiles, languages) = load_profiles(&cfg.profiles)?;
    let templates = PromptTemplates::default();
    let demos = samples::demos();
    let inner: Box<dyn ModelClient> = match (replay, &cfg.model) {
        (Some(p), _) => Box::new(ReplayClient::load(p)?),
        (None, ModelSource::Fixture { path }) => Box::new(ReplayClient::load(path)?),
        (None, ModelSource::Oracle) => Box::new(OracleClient::new(problems.problems.clone(), profiles.clone(), templates.clone())),
        (None, ModelSource::Http { endpoint }) => Box::new(HttpClient::new(endpoint.clone(), std::env::var(ENV_TOKEN).ok())),
    };
    let model = RecordingClient::new(inner);
    let sandbox = sandbox(jobs);
    create_dir(out)?;
    cfg.write(out)?;

    let result = match cfg.command {
        RunKind::Translate | RunKind::Intermediary => {
            let translator = Translator {
                problems: &problems,
                profiles: &profiles,
                templates: &templates,
                demo_pool: &demos.problems,
                sandbox: &sandbox,
                model: &model,
            };
            run_translation(cfg, &translator, &languages, out)
        }
        RunKind::Selftrain => {
            let trainer = SelfTrainer {
                profiles: &profiles,
                templates: &templates,
                demo_pool: &demos.problems,
                sandbox: &sandbox,
                model: &model,
                config: selftrain_config(cfg, jobs)?,
            };
            run_selftrain(cfg, &trainer, out)
        }
    };
    model.write_jsonl(&out.join(EXCHANGES_FILE))?;
    result
}

fn run_translation(cfg: &RunConfig, translator: &Translator<'_>, languages: &[String], out: &Path) -> Result<Summary> {
    let mode = match cfg.command {
        RunKind::Intermediary => Some(parse_mode(cfg)?),
        _ => None,
    };
    if let Some(IntermediaryMode::ViaLanguage(l)) = &mode {
        translator.profiles.get(l)?;
    }
    let pair = pairs(cfg, languages)?;
    let (s0, t0) = pair.clone().unwrap_or_else(|| (languages[0].clone(), languages[1].clone()));
    let spec = PromptSpec::new(cfg.variant, cfg.shots, &s0, &t0);
    spec.validate().map_err(|e| usage(e.to_string()))?;
    let run: MatrixRun = match &pair {
        Some((s, t)) => {
            if let Some(m) = &mode {
                let probe = TranslationTask::new("", spec.clone(), cfg.params.clone());
                m.validate(&probe).map_err(|e| usage(e.to_string()))?;
            }
            translator.profiles.get(s)?;
            translator.profiles.get(t)?;
            translator.run_pairs(&[(s.clone(), t.clone())], &spec, &cfg.params, mode.as_ref())
        }
        None => translator.run_matrix(languages, &spec, &cfg.params, mode.as_ref()),
    };

    write_outcome_log(&out.join("outcomes.jsonl"), &run.outcomes)?;
    write(&out.join("matrix.json"), &run.matrix.to_json())?;
    write(&out.join("matrix.csv"), &run.matrix.to_grid_csv())?;
    write(&out.join("matrix.md"), &run.matrix.to_markdown())?;

    #[derive(Serialize)]
    struct FailureLine<'a> {
        problem_id: &'a str,
        source_lang: &'a str,
        target_lang: &'a str,
        error: String,
    }
    let mut lines: Vec<String> = run
        .failures
        .iter()
        .map(|f| {
            serde_json::to_string(&FailureLine {
                problem_id: &f.task.problem_id,
                source_lang: f.task.source_lang(),
                target_lang: f.task.target_lang(),
                error: f.error.to_string(),
            })
            .expect("failure serializes")
        })
        .collect();
    lines.sort();
    write(&out.join("failures.jsonl"), &lines.iter().map(|l| format!("{l}\n")).collect::<String>())?;

    for (s, t, ca) in run.matrix.entries() {
        println!("{s} -> {t}: CA {}", transbench_core::report::format2(ca));
    }
    for f in &run.failures {
        eprintln!("{} {} -> {}: {}", f.task.problem_id, f.task.source_lang(), f.task.target_lang(), f.error);
    }
    Ok(Summary {
        failures: run.failures.len(),
        environment: run.failures.iter().any(|f| f.error.is_environment()),
    })
}

fn selftrain_config(cfg: &RunConfig, jobs: usize) -> Result<SelftrainConfig> {
    let source = cfg.source.clone().unwrap_or_else(|| "python".into());
    let target = cfg.target.clone().ok_or_else(|| usage("selftrain needs --target"))?;
    let mut c = SelftrainConfig::new(&source, &target, cfg.corpus_mode().map_err(|e| usage(e.to_string()))?);
    c.per_api = cfg.per_api;
    c.seed = cfg.seed;
    c.seed_params = cfg.params.clone();
    c.spec = PromptSpec::new(cfg.variant, cfg.shots, &source, &target);
    c.jobs = jobs.max(1);
    c.validate().map_err(|e| usage(e.to_string()))?;
    Ok(c)
}

fn run_selftrain(cfg: &RunConfig, trainer: &SelfTrainer<'_>, out: &Path) -> Result<Summary> {
    let apis_path = cfg.apis.as_deref().ok_or_else(|| usage("selftrain needs --apis"))?;
    let apis = read_api_list(apis_path)?;
    let run = trainer.run(&apis)?;
    for f in &run.corpus.failures {
        eprintln!("{}: {}", f.seed_id, f.error);
    }
    let c = &run.manifest.counts;
    println!(
        "generated {} (malformed {}, duplicates {}), seed-verified {}, translated {}, verified {}, emitted {}",
        c.generated,
        c.malformed,
        c.duplicates,
        c.seed_verified,
        c.translated,
        c.verified.map_or("-".to_string(), |n| n.to_string()),
        c.emitted
    );
    emit_dataset(out, &run.corpus.records, &run.manifest)?;
    Ok(Summary {
        failures: run.corpus.failures.len(),
        environment: run.corpus.failures.iter().any(|f| f.error.is_environment()),
    })
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "matrix".into())
}

fn read_matrix(path: &Path) -> Result<CaMatrix<f64>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let m = if path.extension().is_some_and(|e| e == "json") {
        CaMatrix::from_json(&text)?
    } else {
        CaMatrix::from_csv(&stem(path), &text)?
    };
    Ok(m)
}

pub fn report(args: &ReportArgs) -> Result<Summary> {
    if args.matrix.is_empty() && args.outcomes.is_empty() && args.base.is_none() {
        return Err(usage("give --matrix, --outcomes or --base/--tuned"));
    }
    let mut named: Vec<(String, CaMatrix<f64>)> = Vec::new();
    for p in &args.matrix {
        named.push((stem(p), read_matrix(p)?));
    }
    for p in &args.outcomes {
        let records = read_outcome_log(p)?;
        named.push((stem(p), matrix_from_records(&stem(p), &records)?));
    }
    if let Some(out) = &args.out {
        create_dir(out)?;
    }
    for (name, m) in &named {
        println!("## {name}\n\n{}", m.to_markdown());
        if let Some(out) = &args.out {
            write(&out.join(format!("{name}.grid.csv")), &m.to_grid_csv())?;
            write(&out.join(format!("{name}.md")), &m.to_markdown())?;
        }
    }
    if let (Some(b), Some(t)) = (&args.base, &args.tuned) {
        let read = |p: &PathBuf| -> Result<BTreeMap<String, f64>> {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Ok(scores_from_csv(&text)?)
        };
        let d = delta_report(&read(b)?, &read(t)?)?;
        println!("## delta\n\n{}", d.to_markdown());
        if let Some(out) = &args.out {
            write(&out.join("delta.csv"), &d.to_csv())?;
            write(&out.join("delta.md"), &d.to_markdown())?;
        }
    }
    if named.is_empty() && args.base.is_none() {
        bail!("nothing to report");
    }
    Ok(Summary::default())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(mode: &str, il: Option<&str>) -> RunConfig {
        RunConfig {
            command: RunKind::Intermediary,
            problems: None,
            profiles: vec![],
            source: Some("python".into()),
            target: Some("cpp".into()),
            variant: transbench_core::prompting::PromptVariant::Basic,
            shots: 0,
            mode: Some(mode.into()),
            il_lang: il.map(String::from),
            seed: 42,
            params: GenerationParams::default(),
            apis: None,
            per_api: 1,
            model: ModelSource::Oracle,
            template_version: "1".into(),
        }
    }

    #[test]
    fn mode_flags() {
        assert_eq!(parse_mode(&cfg("style_transfer", None)).unwrap(), IntermediaryMode::StyleTransfer);
        assert_eq!(
            parse_mode(&cfg("via_language", Some("rust"))).unwrap(),
            IntermediaryMode::ViaLanguage("rust".into())
        );
        assert_eq!(parse_mode(&cfg("via:rust", None)).unwrap(), IntermediaryMode::ViaLanguage("rust".into()));
        for (m, il) in [("via_language", None), ("style_transfer", Some("go")), ("other", None)] {
            assert!(parse_mode(&cfg(m, il)).unwrap_err().is::<UsageError>());
        }
    }

    #[test]
    fn pair_selection() {
        let mut c = cfg("style_transfer", None);
        assert_eq!(pairs(&c, &[]).unwrap(), Some(("python".into(), "cpp".into())));
        c.target = None;
        assert!(pairs(&c, &[]).is_err());
        c.source = None;
        assert!(pairs(&c, &["python".into()]).is_err());
        assert_eq!(pairs(&c, &["python".into(), "cpp".into()]).unwrap(), None);
    }
}

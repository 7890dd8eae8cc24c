//! Self-training corpus generation: API-seeded function synthesis,
//! self-checking against generated cases, verified translation and
//! fine-tuning dataset emission.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value as Json};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::codegen::{CodegenError, ProfileRegistry};
use crate::executor::{evaluate_candidate, parallel_map, ExecutorError, SandboxConfig};
use crate::model::{GenerationParams, ModelClient, ModelError};
use crate::problem::{parse_problem, type_to_json, value_to_json};
use crate::problem::Problem;
use crate::prompting::{build_prompt_for_code, extract_code, select_demos, PromptError, PromptSpec, PromptTemplates};

pub const CASES_PER_SEED: usize = 5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SelftrainError {
    #[error("API list is empty")]
    EmptyApiList,
    #[error("API {0:?} is listed twice")]
    DuplicateApi(String),
    #[error("API list line {line}: {message}")]
    MalformedApiList { line: usize, message: String },
    #[error("no records to emit")]
    EmptyCorpus,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Executor(#[from] ExecutorError),
    #[error(transparent)]
    Codegen(#[from] CodegenError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("I/O failure: {0}")]
    Io(String),
}

impl SelftrainError {
    pub fn is_environment(&self) -> bool {
        matches!(
            self,
            SelftrainError::Model(
                ModelError::EndpointUnreachable(_) | ModelError::RateLimited { .. } | ModelError::ReplayMiss { .. }
            ) | SelftrainError::Executor(ExecutorError::ToolchainMissing { .. } | ExecutorError::Io(_))
                | SelftrainError::Io(_)
        )
    }
}

fn io(e: impl fmt::Display) -> SelftrainError {
    SelftrainError::Io(e.to_string())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiEntry {
    pub name: String,
    pub module: String,
    pub description: String,
}

/// Parses a JSON-lines API list. Blank lines are skipped.
pub fn parse_api_list(text: &str) -> Result<Vec<ApiEntry>, SelftrainError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let entry: ApiEntry = serde_json::from_str(line).map_err(|e| SelftrainError::MalformedApiList {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(entry);
    }
    validate_apis(&out)?;
    Ok(out)
}

pub fn read_api_list(path: &Path) -> Result<Vec<ApiEntry>, SelftrainError> {
    parse_api_list(&std::fs::read_to_string(path).map_err(|e| io(format!("{}: {e}", path.display())))?)
}

pub fn validate_apis(apis: &[ApiEntry]) -> Result<(), SelftrainError> {
    if apis.is_empty() {
        return Err(SelftrainError::EmptyApiList);
    }
    let mut seen = BTreeSet::new();
    for a in apis {
        if !seen.insert(a.name.as_str()) {
            return Err(SelftrainError::DuplicateApi(a.name.clone()));
        }
    }
    Ok(())
}

/// A synthesized function together with its own test cases, stored as a
/// problem whose id is the seed id.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedFunction {
    pub id: String,
    pub api: String,
    pub source_lang: String,
    pub code: String,
    pub problem: Problem,
    pub verified: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorpusMode {
    Pass1,
    Pass5,
    Unchecked,
}

impl CorpusMode {
    pub const ALL: [CorpusMode; 3] = [CorpusMode::Pass1, CorpusMode::Pass5, CorpusMode::Unchecked];

    pub fn as_str(self) -> &'static str {
        match self {
            CorpusMode::Pass1 => "pass1",
            CorpusMode::Pass5 => "pass5",
            CorpusMode::Unchecked => "unchecked",
        }
    }

    pub fn params(self) -> GenerationParams {
        match self {
            CorpusMode::Pass5 => GenerationParams::sampling5(),
            _ => GenerationParams::default(),
        }
    }

    pub fn is_verified(self) -> bool {
        self != CorpusMode::Unchecked
    }
}

impl fmt::Display for CorpusMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CorpusMode {
    type Err = SelftrainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pass1" | "pass@1" => Ok(CorpusMode::Pass1),
            "pass5" | "pass@5" => Ok(CorpusMode::Pass5),
            "unchecked" => Ok(CorpusMode::Unchecked),
            other => Err(SelftrainError::InvalidConfig(format!(
                "unknown corpus mode {other:?} (expected pass1, pass5 or unchecked)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParallelRecord {
    pub seed_id: String,
    pub seed_api: String,
    pub source_lang: String,
    pub target_lang: String,
    pub source: String,
    pub target: String,
    pub mode: CorpusMode,
    pub target_verified: bool,
}

/// One line of the emitted dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetLine {
    pub source_lang: String,
    pub target_lang: String,
    pub source: String,
    pub target: String,
    pub mode: CorpusMode,
    pub seed_api: String,
}

impl From<&ParallelRecord> for DatasetLine {
    fn from(r: &ParallelRecord) -> Self {
        DatasetLine {
            source_lang: r.source_lang.clone(),
            target_lang: r.target_lang.clone(),
            source: r.source.clone(),
            target: r.target.clone(),
            mode: r.mode,
            seed_api: r.seed_api.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FineTuneHyperparameters {
    pub lora_r: u32,
    pub lora_alpha: u32,
    pub lora_dropout: f64,
    pub learning_rate: f64,
    pub batch_size: u32,
}

impl Default for FineTuneHyperparameters {
    fn default() -> Self {
        FineTuneHyperparameters {
            lora_r: 16,
            lora_alpha: 32,
            lora_dropout: 0.05,
            learning_rate: 5e-6,
            batch_size: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunnelCounts {
    pub generated: usize,
    pub malformed: usize,
    pub duplicates: usize,
    pub seed_verified: usize,
    pub translated: usize,
    /// `None` in unchecked mode, where translations are never executed.
    pub verified: Option<usize>,
    pub emitted: usize,
}

impl FunnelCounts {
    /// Stage counts in funnel order.
    pub fn stages(&self) -> Vec<(&'static str, usize)> {
        let mut v = vec![
            ("generated", self.generated),
            ("seed_verified", self.seed_verified),
            ("translated", self.translated),
        ];
        if let Some(n) = self.verified {
            v.push(("verified", n));
        }
        v.push(("emitted", self.emitted));
        v
    }

    pub fn is_monotone(&self) -> bool {
        self.stages().windows(2).all(|w| w[0].1 >= w[1].1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub counts: FunnelCounts,
    pub mode: CorpusMode,
    pub source_lang: String,
    pub target_lang: String,
    pub seed: u64,
    pub seed_params: GenerationParams,
    pub translation_params: GenerationParams,
    pub template_version: String,
    pub fine_tuning: FineTuneHyperparameters,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedBatch {
    pub seeds: Vec<SeedFunction>,
    pub generated: usize,
    pub malformed: usize,
    pub duplicates: usize,
}

pub fn seed_id(api: &str, k: usize) -> String {
    format!("{api}-{k:03}")
}

fn fenced_blocks(text: &str) -> Vec<(String, String)> {
    let mut out = Vec::new();
    let mut open: Option<(String, String)> = None;
    for line in text.split_inclusive('\n') {
        let t = line.trim_start();
        if let Some(info) = t.strip_prefix("```") {
            match open.take() {
                None => open = Some((info.trim().to_string(), String::new())),
                Some(block) => out.push(block),
            }
        } else if let Some((_, body)) = open.as_mut() {
            body.push_str(line);
        }
    }
    out
}

/// Parses a seed completion: one code block followed by a ```json block
/// with `signature` and exactly `n_cases` cases.
pub fn parse_seed(
    completion: &str,
    id: &str,
    api: &ApiEntry,
    source_lang: &str,
    n_cases: usize,
) -> Result<SeedFunction, String> {
    let blocks = fenced_blocks(completion);
    let meta_at = blocks
        .iter()
        .position(|(info, _)| info.eq_ignore_ascii_case("json"))
        .ok_or("no json metadata block")?;
    let code = blocks[..meta_at]
        .iter()
        .rev()
        .map(|(_, body)| body)
        .find(|b| !b.trim().is_empty())
        .ok_or("no code block before the metadata")?;
    let meta: Json = serde_json::from_str(&blocks[meta_at].1).map_err(|e| format!("metadata: {e}"))?;
    let obj = meta.as_object().ok_or("metadata must be an object")?;
    let n = obj
        .get("cases")
        .and_then(Json::as_array)
        .map(Vec::len)
        .ok_or("metadata lacks a cases array")?;
    if n != n_cases {
        return Err(format!("{n} cases, expected {n_cases}"));
    }
    let doc = json!({
        "id": id,
        "description": api.description,
        "signature": obj.get("signature").cloned().unwrap_or(Json::Null),
        "cases": obj.get("cases").cloned().unwrap_or(Json::Null),
    });
    let mut problem = parse_problem(&doc.to_string()).map_err(|e| e.to_string())?;
    problem.solutions.insert(source_lang.to_string(), code.clone());
    Ok(SeedFunction {
        id: id.to_string(),
        api: api.name.clone(),
        source_lang: source_lang.to_string(),
        code: code.clone(),
        problem,
        verified: false,
    })
}

/// Renders a well-formed seed completion for `p`'s solution in `lang`.
pub fn seed_envelope(p: &Problem, lang: &str, fence: &str) -> String {
    let meta = json!({
        "signature": {
            "name": p.signature.name,
            "params": p.signature.params.iter().map(|q| json!({"name": q.name, "type": type_to_json(&q.ty)})).collect::<Vec<_>>(),
            "returns": type_to_json(&p.signature.returns),
        },
        "cases": p.cases.iter().map(|c| json!({
            "inputs": c.inputs.iter().map(value_to_json).collect::<Vec<_>>(),
            "expected": value_to_json(&c.expected),
        })).collect::<Vec<_>>(),
    });
    let code = p.solution(lang).unwrap_or("").trim_end_matches('\n');
    format!("```{fence}\n{code}\n```\n\n```json\n{meta}\n```\n")
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelftrainConfig {
    pub source_lang: String,
    pub target_lang: String,
    pub per_api: usize,
    pub n_cases: usize,
    pub mode: CorpusMode,
    pub seed: u64,
    pub seed_params: GenerationParams,
    pub spec: PromptSpec,
    pub jobs: usize,
}

impl SelftrainConfig {
    pub fn new(source_lang: &str, target_lang: &str, mode: CorpusMode) -> Self {
        SelftrainConfig {
            source_lang: source_lang.into(),
            target_lang: target_lang.into(),
            per_api: 1,
            n_cases: CASES_PER_SEED,
            mode,
            seed: 42,
            seed_params: GenerationParams::default(),
            spec: PromptSpec::new(crate::prompting::PromptVariant::WithTargetSignature, 0, source_lang, target_lang),
            jobs: 4,
        }
    }

    pub fn validate(&self) -> Result<(), SelftrainError> {
        if self.per_api == 0 {
            return Err(SelftrainError::InvalidConfig("per_api must be at least 1".into()));
        }
        if self.n_cases == 0 {
            return Err(SelftrainError::InvalidConfig("n_cases must be at least 1".into()));
        }
        if self.source_lang == self.target_lang {
            return Err(SelftrainError::InvalidConfig("source and target languages coincide".into()));
        }
        if self.spec.source_lang != self.source_lang || self.spec.target_lang != self.target_lang {
            return Err(SelftrainError::InvalidConfig("prompt spec languages differ from the run's".into()));
        }
        self.seed_params.validate()?;
        self.spec.validate()?;
        Ok(())
    }
}

/// Everything the pipeline stages share.
pub struct SelfTrainer<'a> {
    pub profiles: &'a ProfileRegistry,
    pub templates: &'a PromptTemplates,
    pub demo_pool: &'a [Problem],
    pub sandbox: &'a SandboxConfig,
    pub model: &'a dyn ModelClient,
    pub config: SelftrainConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedFailure {
    pub seed_id: String,
    pub error: SelftrainError,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusRun {
    pub records: Vec<ParallelRecord>,
    pub translated: usize,
    pub failures: Vec<SeedFailure>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelftrainRun {
    pub batch: SeedBatch,
    pub verified: Vec<SeedFunction>,
    pub corpus: CorpusRun,
    pub manifest: DatasetManifest,
}

/// Per-record generator derived from the global seed and the seed id.
pub fn record_rng(global: u64, seed_id: &str) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(global.to_le_bytes());
    h.update(seed_id.as_bytes());
    let digest = h.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(key)
}

impl<'a> SelfTrainer<'a> {
    pub fn seed_prompt(&self, api: &ApiEntry) -> Result<String, SelftrainError> {
        let profile = self.profiles.get(&self.config.source_lang)?;
        let n = self.config.n_cases.to_string();
        Ok(self.templates.render(
            "seed",
            &[
                ("api", &api.name),
                ("module", &api.module),
                ("description", &api.description),
                ("source_lang", &profile.display_name),
                ("n_cases", &n),
            ],
        ))
    }

    /// One call per API asking for `per_api` completions. Unparseable
    /// completions and exact-text duplicates are counted and dropped.
    pub fn generate_seed_functions(&self, apis: &[ApiEntry]) -> Result<SeedBatch, SelftrainError> {
        validate_apis(apis)?;
        self.config.validate()?;
        let params = self.config.seed_params.with_n(self.config.per_api);
        let replies = parallel_map(apis, self.config.jobs, |api| {
            let prompt = self.seed_prompt(api)?;
            Ok::<_, SelftrainError>(self.model.generate(&prompt, &params)?)
        });
        let mut batch = SeedBatch {
            seeds: Vec::new(),
            generated: 0,
            malformed: 0,
            duplicates: 0,
        };
        let mut seen = BTreeSet::new();
        for (api, reply) in apis.iter().zip(replies) {
            for (k, completion) in reply?.iter().enumerate() {
                batch.generated += 1;
                let id = seed_id(&api.name, k);
                match parse_seed(completion, &id, api, &self.config.source_lang, self.config.n_cases) {
                    Ok(seed) if seen.insert(seed.code.clone()) => batch.seeds.push(seed),
                    Ok(_) => batch.duplicates += 1,
                    Err(_) => batch.malformed += 1,
                }
            }
        }
        Ok(batch)
    }

    /// Keeps the seeds whose code passes all of their own cases.
    pub fn verify_seeds(&self, seeds: &[SeedFunction]) -> Result<Vec<SeedFunction>, SelftrainError> {
        let profile = self.profiles.get(&self.config.source_lang)?;
        let results = parallel_map(seeds, self.config.jobs, |s| evaluate_candidate(&s.problem, profile, &s.code, self.sandbox));
        let mut out = Vec::new();
        for (s, r) in seeds.iter().zip(results) {
            if r?.passed() {
                let mut s = s.clone();
                s.verified = true;
                out.push(s);
            }
        }
        Ok(out)
    }

    fn translate_seed(&self, seed: &SeedFunction) -> Result<(bool, Option<ParallelRecord>), SelftrainError> {
        let mode = self.config.mode;
        let target = self.profiles.get(&self.config.target_lang)?;
        let demos = select_demos(self.demo_pool, &self.config.spec, &seed.id)?;
        let prompt = build_prompt_for_code(self.templates, &self.config.spec, &seed.problem, &seed.code, &demos, self.profiles)?;
        let completions = self.model.generate(&prompt, &mode.params())?;
        let candidates: Vec<String> = completions
            .iter()
            .filter_map(|c| extract_code(c, target, &seed.problem.signature).ok())
            .collect();
        if candidates.is_empty() {
            return Ok((false, None));
        }
        let record = |target_code: &str, verified: bool| ParallelRecord {
            seed_id: seed.id.clone(),
            seed_api: seed.api.clone(),
            source_lang: seed.source_lang.clone(),
            target_lang: self.config.target_lang.clone(),
            source: seed.code.clone(),
            target: target_code.to_string(),
            mode,
            target_verified: verified,
        };
        if !mode.is_verified() {
            return Ok((true, Some(record(&candidates[0], false))));
        }
        let considered = if mode == CorpusMode::Pass1 { &candidates[..1] } else { &candidates[..] };
        let mut passing = Vec::new();
        for c in considered {
            if evaluate_candidate(&seed.problem, target, c, self.sandbox)?.passed() {
                passing.push(c);
            }
        }
        let chosen = match passing.len() {
            0 => return Ok((true, None)),
            1 => passing[0],
            n => passing[record_rng(self.config.seed, &seed.id).gen_range(0..n)],
        };
        Ok((true, Some(record(chosen, true))))
    }

    /// Translates verified seeds. Per-seed errors are collected rather
    /// than aborting the run; records come back ordered by seed id.
    pub fn translate_corpus(&self, seeds: &[SeedFunction]) -> Result<CorpusRun, SelftrainError> {
        self.config.validate()?;
        let results = parallel_map(seeds, self.config.jobs, |s| self.translate_seed(s));
        let mut run = CorpusRun {
            records: Vec::new(),
            translated: 0,
            failures: Vec::new(),
        };
        for (s, r) in seeds.iter().zip(results) {
            match r {
                Ok((translated, record)) => {
                    run.translated += usize::from(translated);
                    run.records.extend(record);
                }
                Err(error) => run.failures.push(SeedFailure {
                    seed_id: s.id.clone(),
                    error,
                }),
            }
        }
        run.records.sort_by(|a, b| a.seed_id.cmp(&b.seed_id));
        Ok(run)
    }

    pub fn manifest(&self, batch: &SeedBatch, verified: &[SeedFunction], corpus: &CorpusRun) -> DatasetManifest {
        let mode = self.config.mode;
        DatasetManifest {
            counts: FunnelCounts {
                generated: batch.generated,
                malformed: batch.malformed,
                duplicates: batch.duplicates,
                seed_verified: verified.len(),
                translated: corpus.translated,
                verified: mode.is_verified().then(|| corpus.records.iter().filter(|r| r.target_verified).count()),
                emitted: corpus.records.len(),
            },
            mode,
            source_lang: self.config.source_lang.clone(),
            target_lang: self.config.target_lang.clone(),
            seed: self.config.seed,
            seed_params: self.config.seed_params.with_n(self.config.per_api),
            translation_params: mode.params(),
            template_version: self.templates.version().to_string(),
            fine_tuning: FineTuneHyperparameters::default(),
        }
    }

    /// Runs every stage up to (not including) emission.
    pub fn run(&self, apis: &[ApiEntry]) -> Result<SelftrainRun, SelftrainError> {
        let batch = self.generate_seed_functions(apis)?;
        let verified = self.verify_seeds(&batch.seeds)?;
        let corpus = self.translate_corpus(&verified)?;
        let manifest = self.manifest(&batch, &verified, &corpus);
        Ok(SelftrainRun {
            batch,
            verified,
            corpus,
            manifest,
        })
    }
}

pub const DATASET_FILE: &str = "dataset.jsonl";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Dataset text, one JSON object per line, ordered by seed id.
pub fn render_dataset(records: &[ParallelRecord]) -> Result<String, SelftrainError> {
    if records.is_empty() {
        return Err(SelftrainError::EmptyCorpus);
    }
    let mut sorted: Vec<&ParallelRecord> = records.iter().collect();
    sorted.sort_by(|a, b| a.seed_id.cmp(&b.seed_id));
    let mut out = String::new();
    for r in sorted {
        out.push_str(&serde_json::to_string(&DatasetLine::from(r)).map_err(io)?);
        out.push('\n');
    }
    Ok(out)
}

/// Writes `dataset.jsonl` and `manifest.json` into `dir`.
pub fn emit_dataset(
    dir: &Path,
    records: &[ParallelRecord],
    manifest: &DatasetManifest,
) -> Result<(PathBuf, PathBuf), SelftrainError> {
    let dataset = render_dataset(records)?;
    std::fs::create_dir_all(dir).map_err(io)?;
    let data_path = dir.join(DATASET_FILE);
    let manifest_path = dir.join(MANIFEST_FILE);
    std::fs::write(&data_path, dataset).map_err(io)?;
    let mut m = serde_json::to_string_pretty(manifest).map_err(io)?;
    m.push('\n');
    std::fs::write(&manifest_path, m).map_err(io)?;
    Ok((data_path, manifest_path))
}

/// Counts emitted records per API, for summaries.
pub fn records_per_api(records: &[ParallelRecord]) -> BTreeMap<String, usize> {
    let mut m = BTreeMap::new();
    for r in records {
        *m.entry(r.seed_api.clone()).or_insert(0) += 1;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{Signature, TestCase, TypeExpr, Value};

    fn api(name: &str) -> ApiEntry {
        ApiEntry {
            name: name.into(),
            module: "math".into(),
            description: "does math".into(),
        }
    }

    fn square() -> Problem {
        let mut p = Problem::new(
            "square",
            Signature::new("square", vec![("x", TypeExpr::Int)], TypeExpr::Int),
            (1..=5)
                .map(|i| TestCase {
                    inputs: vec![Value::Int(i)],
                    expected: Value::Int(i * i),
                })
                .collect(),
        );
        p.solutions.insert("python".into(), "def square(x):\n    return x * x\n".into());
        p
    }

    #[test]
    fn api_list_rejects_duplicates_and_junk() {
        let ok = "{\"name\":\"math.gcd\",\"module\":\"math\",\"description\":\"gcd\"}\n\n";
        assert_eq!(parse_api_list(ok).unwrap().len(), 1);
        assert_eq!(parse_api_list(""), Err(SelftrainError::EmptyApiList));
        assert!(matches!(parse_api_list(&ok.repeat(2)), Err(SelftrainError::DuplicateApi(_))));
        assert!(matches!(parse_api_list("{nope"), Err(SelftrainError::MalformedApiList { line: 1, .. })));
    }

    #[test]
    fn envelope_round_trips() {
        let p = square();
        let text = format!("Sure.\n{}", seed_envelope(&p, "python", "python"));
        let seed = parse_seed(&text, "math.pow-000", &api("math.pow"), "python", 5).unwrap();
        assert_eq!(seed.code, p.solutions["python"]);
        assert_eq!(seed.problem.signature, p.signature);
        assert_eq!(seed.problem.cases, p.cases);
        assert_eq!(seed.problem.id, "math.pow-000");
    }

    #[test]
    fn envelope_rejections() {
        let p = square();
        let good = seed_envelope(&p, "python", "python");
        assert!(parse_seed(&good, "a", &api("a"), "python", 4).is_err());
        assert!(parse_seed("```python\nx\n```\n", "a", &api("a"), "python", 5).is_err());
        assert!(parse_seed(&good.replace("\"int\"", "\"integer\""), "a", &api("a"), "python", 5).is_err());
        assert!(parse_seed("```json\n{}\n```\n", "a", &api("a"), "python", 5).is_err());
    }

    #[test]
    fn funnel_monotonicity() {
        let mut c = FunnelCounts {
            generated: 10,
            malformed: 1,
            duplicates: 0,
            seed_verified: 6,
            translated: 6,
            verified: Some(3),
            emitted: 3,
        };
        assert!(c.is_monotone());
        assert_eq!(c.stages().len(), 5);
        c.verified = None;
        c.emitted = 6;
        assert!(c.is_monotone());
        c.translated = 7;
        assert!(!c.is_monotone());
    }

    #[test]
    fn record_rng_depends_on_both_inputs() {
        let a: u64 = record_rng(42, "x").gen();
        assert_eq!(a, record_rng(42, "x").gen::<u64>());
        assert_ne!(a, record_rng(43, "x").gen::<u64>());
        assert_ne!(a, record_rng(42, "y").gen::<u64>());
    }

    #[test]
    fn modes_parse_and_pick_params() {
        for m in CorpusMode::ALL {
            assert_eq!(m.as_str().parse::<CorpusMode>().unwrap(), m);
        }
        assert_eq!("pass@5".parse::<CorpusMode>().unwrap(), CorpusMode::Pass5);
        assert_eq!(CorpusMode::Pass5.params().n, 5);
        assert_eq!(CorpusMode::Pass5.params().temperature, 0.8);
        assert_eq!(CorpusMode::Pass1.params().temperature, 0.01);
        assert!("pass3".parse::<CorpusMode>().is_err());
    }

    #[test]
    fn empty_corpus_is_an_error() {
        assert_eq!(render_dataset(&[]), Err(SelftrainError::EmptyCorpus));
    }
}

use transbench_core::codegen::ProfileRegistry;
use transbench_core::executor::SandboxConfig;
use transbench_core::model::ScriptedClient;
use transbench_core::problem::{Problem, Signature, TestCase, TypeExpr, Value};
use transbench_core::prompting::PromptTemplates;
use transbench_core::selftrain::{
    emit_dataset, record_rng, seed_envelope, ApiEntry, CorpusMode, SelfTrainer, SelftrainConfig, SelftrainError,
};

const SEEDS: usize = 10;

fn apis() -> Vec<ApiEntry> {
    (0..SEEDS)
        .map(|i| ApiEntry {
            name: format!("api_{i}"),
            module: "ops".into(),
            description: format!("scale by {}", i + 1),
        })
        .collect()
}

/// Seed `i` computes `x * (i + 1)`; seeds 6..10 carry broken code.
fn seed_problem(i: usize) -> Problem {
    let k = i as i64 + 1;
    let mut p = Problem::new(
        format!("s{i}"),
        Signature::new(format!("scale_{i}"), vec![("x", TypeExpr::Int)], TypeExpr::Int),
        (0..5)
            .map(|x| TestCase {
                inputs: vec![Value::Int(x)],
                expected: Value::Int(x * k),
            })
            .collect(),
    );
    let py = if i < 6 {
        format!("def scale_{i}(x: int) -> int:\n    return x * {k}\n")
    } else {
        format!("def scale_{i}(x: int) -> int:\n    return x + {k}\n")
    };
    p.solutions.insert("python".into(), py);
    p
}

fn pseudo(i: usize, good: bool) -> String {
    let k = i + 1;
    let body = if good { format!("x * {k}") } else { format!("x - {k}") };
    format!("```\nfn scale_{i}(x: int) -> int {{\n    return {body};\n}}\n```\n")
}

/// Seeds with even index translate correctly on the first sample; every
/// verified seed has a correct candidate among its five samples, twice
/// for odd seeds.
fn model() -> ScriptedClient {
    ScriptedClient::new(|prompt, params| {
        for i in 0..SEEDS {
            if prompt.contains(&format!("`api_{i}`")) {
                return vec![seed_envelope(&seed_problem(i), "python", "python"); params.n];
            }
        }
        for i in 0..SEEDS {
            if prompt.contains(&format!("scale_{i}(")) {
                let first = pseudo(i, i % 2 == 0);
                if params.n == 1 {
                    return vec![first];
                }
                let extra = i % 2 == 1;
                return vec![first, pseudo(i, false), pseudo(i, extra), pseudo(i, false), pseudo(i, true)];
            }
        }
        vec![String::new(); params.n]
    })
}

struct Env {
    profiles: ProfileRegistry,
    templates: PromptTemplates,
    sandbox: SandboxConfig,
}

impl Env {
    fn new() -> Self {
        Env {
            profiles: ProfileRegistry::builtin(),
            templates: PromptTemplates::default(),
            sandbox: SandboxConfig::default(),
        }
    }

    fn trainer<'a>(&'a self, model: &'a ScriptedClient, mode: CorpusMode) -> SelfTrainer<'a> {
        SelfTrainer {
            profiles: &self.profiles,
            templates: &self.templates,
            demo_pool: &[],
            sandbox: &self.sandbox,
            model,
            config: SelftrainConfig::new("python", "pseudo", mode),
        }
    }
}

#[test]
fn funnel_counts_follow_the_script() {
    let env = Env::new();
    let m = model();
    for (mode, emitted, verified) in [
        (CorpusMode::Pass1, 3, Some(3)),
        (CorpusMode::Pass5, 6, Some(6)),
        (CorpusMode::Unchecked, 6, None),
    ] {
        let run = env.trainer(&m, mode).run(&apis()).unwrap();
        let c = &run.manifest.counts;
        assert_eq!((c.generated, c.malformed, c.seed_verified, c.translated), (10, 0, 6, 6), "{mode}");
        assert_eq!(c.verified, verified, "{mode}");
        assert_eq!(c.emitted, emitted, "{mode}");
        assert!(c.is_monotone());
        assert!(run.corpus.failures.is_empty());
        for r in &run.corpus.records {
            assert_eq!(r.target_verified, mode.is_verified());
        }
    }
}

#[test]
fn pass1_records_are_a_subset_of_pass5() {
    let env = Env::new();
    let m = model();
    let ids = |mode| -> Vec<String> {
        env.trainer(&m, mode).run(&apis()).unwrap().corpus.records.into_iter().map(|r| r.seed_id).collect()
    };
    let p1 = ids(CorpusMode::Pass1);
    let p5 = ids(CorpusMode::Pass5);
    assert!(p1.iter().all(|id| p5.contains(id)));
    assert!(p1.len() < p5.len());
}

#[test]
fn pass5_choice_matches_seeded_draw() {
    let env = Env::new();
    let m = model();
    let run = env.trainer(&m, CorpusMode::Pass5).run(&apis()).unwrap();
    for r in &run.corpus.records {
        let i: usize = r.seed_id.trim_start_matches("api_").split('-').next().unwrap().parse().unwrap();
        assert!(r.target.contains(&format!("x * {}", i + 1)));
    }
    use rand::Rng;
    let draws: Vec<usize> = (0..200).map(|s| record_rng(s, "api_1-000").gen_range(0..2)).collect();
    let ones = draws.iter().filter(|&&d| d == 1).count();
    assert!((60..=140).contains(&ones), "{ones}");
}

#[test]
fn malformed_seeds_are_counted() {
    let env = Env::new();
    let m = ScriptedClient::constant("```python\ndef f():\n    pass\n```\n```json\n{\"signature\": 3}\n```\n");
    let t = env.trainer(&m, CorpusMode::Pass1);
    let batch = t.generate_seed_functions(&apis()[..1]).unwrap();
    assert_eq!((batch.seeds.len(), batch.malformed, batch.generated), (0, 1, 1));
}

#[test]
fn seed_generation_asks_per_api() {
    let env = Env::new();
    let m = model();
    let mut t = env.trainer(&m, CorpusMode::Pass1);
    let batch = t.generate_seed_functions(&apis()[..3]).unwrap();
    assert_eq!(batch.seeds.len(), 3);
    t.config.per_api = 2;
    let batch = t.generate_seed_functions(&apis()[..3]).unwrap();
    assert_eq!((batch.generated, batch.seeds.len(), batch.duplicates), (6, 3, 3));
    assert!(m.prompts()[0].contains("exactly 5 cases"));
}

#[test]
fn emission_is_byte_identical_across_runs() {
    let env = Env::new();
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let mut texts = Vec::new();
    for (n, dir) in dirs.iter().enumerate() {
        let m = model();
        let mut t = env.trainer(&m, CorpusMode::Pass5);
        t.config.jobs = 1 + 3 * n;
        let run = t.run(&apis()).unwrap();
        let (d, mf) = emit_dataset(dir.path(), &run.corpus.records, &run.manifest).unwrap();
        texts.push((std::fs::read(d).unwrap(), std::fs::read(mf).unwrap()));
    }
    assert_eq!(texts[0], texts[1]);
    let dataset = String::from_utf8(texts[0].0.clone()).unwrap();
    assert_eq!(dataset.lines().count(), 6);
    let first: serde_json::Value = serde_json::from_str(dataset.lines().next().unwrap()).unwrap();
    let keys: Vec<&str> = first.as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(keys, ["source_lang", "target_lang", "source", "target", "mode", "seed_api"]);
    let manifest: serde_json::Value = serde_json::from_slice(&texts[0].1).unwrap();
    assert_eq!(manifest["fine_tuning"]["lora_r"], 16);
    assert_eq!(manifest["fine_tuning"]["learning_rate"], 5e-6);
}

#[test]
fn empty_corpus_cannot_be_emitted() {
    let env = Env::new();
    let m = ScriptedClient::constant("");
    let run = env.trainer(&m, CorpusMode::Pass1).run(&apis()).unwrap();
    assert_eq!(run.manifest.counts.malformed, SEEDS);
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(emit_dataset(dir.path(), &run.corpus.records, &run.manifest), Err(SelftrainError::EmptyCorpus));
}

#[test]
fn shipped_api_list_parses() {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data/apis.jsonl");
    let apis = transbench_core::selftrain::read_api_list(&path).unwrap();
    assert_eq!(apis.len(), 6);
    assert!(apis.iter().all(|a| !a.module.is_empty() && !a.description.is_empty()));
}

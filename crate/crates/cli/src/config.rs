use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use transbench_core::model::GenerationParams;
use transbench_core::prompting::PromptVariant;
use transbench_core::selftrain::CorpusMode;

pub const CONFIG_FILE: &str = "config.json";
pub const EXCHANGES_FILE: &str = "exchanges.jsonl";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunKind {
    Translate,
    Intermediary,
    Selftrain,
}

/// Where completions come from on the original run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ModelSource {
    Http { endpoint: String },
    Oracle,
    Fixture { path: PathBuf },
}

/// Everything needed to re-run a pipeline command, written to
/// `config.json` next to the exchange log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: RunKind,
    pub problems: Option<PathBuf>,
    pub profiles: Vec<String>,
    pub source: Option<String>,
    pub target: Option<String>,
    pub variant: PromptVariant,
    pub shots: usize,
    pub mode: Option<String>,
    pub il_lang: Option<String>,
    pub seed: u64,
    pub params: GenerationParams,
    pub apis: Option<PathBuf>,
    pub per_api: usize,
    pub model: ModelSource,
    pub template_version: String,
}

impl RunConfig {
    pub fn corpus_mode(&self) -> Result<CorpusMode> {
        let m = self.mode.as_deref().unwrap_or("pass1");
        Ok(m.parse()?)
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        let path = dir.join(CONFIG_FILE);
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    }

    pub fn read(dir: &Path) -> Result<RunConfig> {
        let path = dir.join(CONFIG_FILE);
        let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

/// Absolute form of a user-supplied input path.
pub fn absolute(path: &Path) -> Result<PathBuf> {
    std::fs::canonicalize(path).with_context(|| format!("{} does not exist", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trips_through_the_bundle() {
        let cfg = RunConfig {
            command: RunKind::Selftrain,
            problems: None,
            profiles: vec!["python".into(), "pseudo".into()],
            source: Some("python".into()),
            target: Some("pseudo".into()),
            variant: PromptVariant::WithTargetSignature,
            shots: 2,
            mode: Some("pass5".into()),
            il_lang: None,
            seed: 42,
            params: GenerationParams::default(),
            apis: Some("apis.jsonl".into()),
            per_api: 3,
            model: ModelSource::Http {
                endpoint: "http://localhost:1".into(),
            },
            template_version: "1".into(),
        };
        let dir = tempfile::tempdir().unwrap();
        cfg.write(dir.path()).unwrap();
        assert_eq!(RunConfig::read(dir.path()).unwrap(), cfg);
        assert_eq!(cfg.corpus_mode().unwrap(), CorpusMode::Pass5);
        let text = std::fs::read_to_string(dir.path().join(CONFIG_FILE)).unwrap();
        assert!(text.contains("\"kind\": \"http\""));
    }
}

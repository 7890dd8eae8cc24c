//! Prompt construction for the four prompt designs, n-shot demo selection,
//! and code extraction from completions.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codegen::{function_name, render_signature, CodegenError, Dialect, LanguageProfile, ProfileRegistry};
use crate::problem::{Problem, Signature};

pub const MAX_SHOTS: usize = 2;

const BUILTIN_TEMPLATES: &str = include_str!("../data/prompts.txt");

const REQUIRED_SECTIONS: [&str; 14] = [
    "version",
    "intent",
    "line_instruction",
    "code_block",
    "demo",
    "aligned_demo",
    "aligned_pair",
    "basic",
    "with_target_signature",
    "with_required_libraries",
    "no_imports",
    "line_by_line",
    "style_transfer",
    "seed",
];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PromptError {
    #[error("problem {problem} has no {lang} solution")]
    MissingSolution { problem: String, lang: String },
    #[error("problem {problem} has no {lang} imports metadata")]
    MissingImports { problem: String, lang: String },
    #[error("demo {demo} has no {from}->{to} alignment")]
    MissingAlignment { demo: String, from: String, to: String },
    #[error("need {needed} demos, pool has {available}")]
    InsufficientDemos { needed: usize, available: usize },
    #[error("completion contains no code")]
    EmptyCompletion,
    #[error("invalid prompt spec: {0}")]
    InvalidSpec(String),
    #[error("template error: {0}")]
    Template(String),
    #[error(transparent)]
    Codegen(#[from] CodegenError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptVariant {
    Basic,
    WithTargetSignature,
    WithRequiredLibraries,
    LineByLine,
}

impl PromptVariant {
    pub const ALL: [PromptVariant; 4] = [
        PromptVariant::Basic,
        PromptVariant::WithTargetSignature,
        PromptVariant::WithRequiredLibraries,
        PromptVariant::LineByLine,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PromptVariant::Basic => "basic",
            PromptVariant::WithTargetSignature => "with_target_signature",
            PromptVariant::WithRequiredLibraries => "with_required_libraries",
            PromptVariant::LineByLine => "line_by_line",
        }
    }
}

impl fmt::Display for PromptVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PromptVariant {
    type Err = PromptError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PromptVariant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| PromptError::InvalidSpec(format!("unknown prompt variant {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PromptSpec {
    pub variant: PromptVariant,
    pub shots: usize,
    pub source_lang: String,
    pub target_lang: String,
    #[serde(default = "default_pool")]
    pub demo_pool_id: String,
}

fn default_pool() -> String {
    "builtin".into()
}

impl PromptSpec {
    pub fn new(variant: PromptVariant, shots: usize, source: &str, target: &str) -> Self {
        PromptSpec {
            variant,
            shots,
            source_lang: source.into(),
            target_lang: target.into(),
            demo_pool_id: default_pool(),
        }
    }

    pub fn validate(&self) -> Result<(), PromptError> {
        if self.source_lang == self.target_lang {
            return Err(PromptError::InvalidSpec(format!(
                "source and target are both {}",
                self.source_lang
            )));
        }
        if self.shots > MAX_SHOTS {
            return Err(PromptError::InvalidSpec(format!(
                "shots must be at most {MAX_SHOTS}, got {}",
                self.shots
            )));
        }
        Ok(())
    }

    /// Same settings for another language pair.
    pub fn retarget(&self, source: &str, target: &str) -> Self {
        PromptSpec {
            source_lang: source.into(),
            target_lang: target.into(),
            ..self.clone()
        }
    }
}

/// One in-context example.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Demo {
    pub problem_id: String,
    pub source_code: String,
    pub target_code: String,
    #[serde(default)]
    pub pairs: Option<Vec<(String, String)>>,
}

impl Demo {
    /// Builds a demo from a problem with solutions in both languages.
    pub fn from_problem(p: &Problem, source: &str, target: &str) -> Option<Demo> {
        Some(Demo {
            problem_id: p.id.clone(),
            source_code: p.solution(source)?.to_string(),
            target_code: p.solution(target)?.to_string(),
            pairs: p.alignment(source, target).cloned(),
        })
    }
}

/// Named template sections.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplates {
    sections: BTreeMap<String, String>,
}

impl Default for PromptTemplates {
    fn default() -> Self {
        PromptTemplates::parse(BUILTIN_TEMPLATES).expect("builtin templates are valid")
    }
}

impl PromptTemplates {
    pub fn parse(text: &str) -> Result<Self, PromptError> {
        let mut sections = BTreeMap::new();
        let mut current: Option<(String, Vec<&str>)> = None;
        for line in text.lines() {
            if let Some(name) = line.strip_prefix("=== ").and_then(|l| l.strip_suffix(" ===")) {
                if let Some((n, body)) = current.take() {
                    sections.insert(n, body.join("\n"));
                }
                let name = name.trim().to_string();
                if sections.contains_key(&name) {
                    return Err(PromptError::Template(format!("duplicate section {name}")));
                }
                current = Some((name, Vec::new()));
            } else if let Some((_, body)) = current.as_mut() {
                body.push(line);
            } else if !(line.starts_with('#') || line.trim().is_empty()) {
                return Err(PromptError::Template(format!("text before the first section: {line:?}")));
            }
        }
        if let Some((n, body)) = current {
            sections.insert(n, body.join("\n"));
        }
        for s in REQUIRED_SECTIONS {
            if !sections.contains_key(s) {
                return Err(PromptError::Template(format!("missing section {s}")));
            }
        }
        Ok(PromptTemplates { sections })
    }

    pub fn load(path: &Path) -> Result<Self, PromptError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PromptError::Template(format!("{}: {e}", path.display())))?;
        PromptTemplates::parse(&text)
    }

    pub fn version(&self) -> &str {
        self.section("version").trim()
    }

    pub fn section(&self, name: &str) -> &str {
        self.sections.get(name).map(String::as_str).unwrap_or("")
    }

    /// Fills section `name`.
    pub fn render(&self, name: &str, vars: &[(&str, &str)]) -> String {
        fill(self.section(name), vars)
    }

    pub fn code_block(&self, code: &str, profile: &LanguageProfile) -> String {
        self.render("code_block", &[("fence", &profile.fence), ("code", code.trim_end_matches('\n'))])
    }

    pub fn intent(&self, source: &LanguageProfile, target: &LanguageProfile) -> String {
        self.render(
            "intent",
            &[("source_lang", &source.display_name), ("target_lang", &target.display_name)],
        )
    }
}

/// Single-pass substitution of `{name}` placeholders. Text produced by a
/// substitution is never rescanned.
pub fn fill(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let hit = after.find('}').and_then(|close| {
            let name = &after[..close];
            vars.iter().find(|(k, _)| *k == name).map(|(_, v)| (close, *v))
        });
        match hit {
            Some((close, v)) => {
                out.push_str(v);
                rest = &after[close + 1..];
            }
            None => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}

/// The first `spec.shots` demos of the pool that have solutions in both
/// languages, skipping `exclude`.
pub fn select_demos(pool: &[Problem], spec: &PromptSpec, exclude: &str) -> Result<Vec<Demo>, PromptError> {
    if spec.shots == 0 {
        return Ok(Vec::new());
    }
    let matching: Vec<Demo> = pool
        .iter()
        .filter(|p| p.id != exclude)
        .filter_map(|p| Demo::from_problem(p, &spec.source_lang, &spec.target_lang))
        .collect();
    if matching.len() < spec.shots {
        return Err(PromptError::InsufficientDemos {
            needed: spec.shots,
            available: matching.len(),
        });
    }
    Ok(matching.into_iter().take(spec.shots).collect())
}

/// Builds the prompt for translating `p`'s canonical source solution.
pub fn build_prompt(
    t: &PromptTemplates,
    spec: &PromptSpec,
    p: &Problem,
    demos: &[Demo],
    profiles: &ProfileRegistry,
) -> Result<String, PromptError> {
    let source = p.solution(&spec.source_lang).ok_or_else(|| PromptError::MissingSolution {
        problem: p.id.clone(),
        lang: spec.source_lang.clone(),
    })?;
    build_prompt_for_code(t, spec, p, source, demos, profiles)
}

/// Like [`build_prompt`] with explicit source code, e.g. a verified
/// intermediate translation.
pub fn build_prompt_for_code(
    t: &PromptTemplates,
    spec: &PromptSpec,
    p: &Problem,
    source_code: &str,
    demos: &[Demo],
    profiles: &ProfileRegistry,
) -> Result<String, PromptError> {
    spec.validate()?;
    if demos.len() != spec.shots {
        return Err(PromptError::InvalidSpec(format!(
            "{} demos supplied for {} shots",
            demos.len(),
            spec.shots
        )));
    }
    if let Some(d) = demos.iter().find(|d| d.problem_id == p.id) {
        return Err(PromptError::InvalidSpec(format!("demo {} is the evaluated problem", d.problem_id)));
    }
    let src = profiles.get(&spec.source_lang)?;
    let tgt = profiles.get(&spec.target_lang)?;
    let intent = t.intent(src, tgt);
    let line_instruction = t.section("line_instruction").to_string();

    let mut rendered_demos = String::new();
    for d in demos {
        let source_block = t.code_block(&d.source_code, src);
        let block = if spec.variant == PromptVariant::LineByLine {
            let pairs = d.pairs.as_ref().ok_or_else(|| PromptError::MissingAlignment {
                demo: d.problem_id.clone(),
                from: spec.source_lang.clone(),
                to: spec.target_lang.clone(),
            })?;
            let pairs = pairs
                .iter()
                .map(|(s, g)| {
                    t.render(
                        "aligned_pair",
                        &[
                            ("source_lang", &src.display_name),
                            ("target_lang", &tgt.display_name),
                            ("source_line", s),
                            ("target_line", g),
                        ],
                    )
                })
                .collect::<Vec<_>>()
                .join("\n");
            t.render(
                "aligned_demo",
                &[
                    ("intent", &intent),
                    ("line_instruction", &line_instruction),
                    ("source_code", &source_block),
                    ("pairs", &pairs),
                ],
            )
        } else {
            t.render(
                "demo",
                &[
                    ("intent", &intent),
                    ("source_code", &source_block),
                    ("target_code", &t.code_block(&d.target_code, tgt)),
                ],
            )
        };
        rendered_demos.push_str(&block);
        rendered_demos.push_str("\n\n");
    }

    let source_block = t.code_block(source_code, src);
    let mut vars: Vec<(&str, String)> = vec![
        ("demos", rendered_demos),
        ("intent", intent),
        ("source_code", source_block),
        ("source_lang", src.display_name.clone()),
        ("target_lang", tgt.display_name.clone()),
        ("line_instruction", line_instruction),
    ];
    match spec.variant {
        PromptVariant::WithTargetSignature => {
            vars.push(("target_signature", render_signature(&p.signature, tgt)?));
        }
        PromptVariant::WithRequiredLibraries => {
            let imports = p.imports.get(&spec.target_lang).ok_or_else(|| PromptError::MissingImports {
                problem: p.id.clone(),
                lang: spec.target_lang.clone(),
            })?;
            let text = if imports.is_empty() {
                t.section("no_imports").to_string()
            } else {
                imports.join("\n")
            };
            vars.push(("imports", text));
        }
        PromptVariant::Basic | PromptVariant::LineByLine => {}
    }
    let vars: Vec<(&str, &str)> = vars.iter().map(|(k, v)| (*k, v.as_str())).collect();
    Ok(t.render(spec.variant.as_str(), &vars))
}

/// Prompt asking for a procedural rewrite of `code` in its own language.
pub fn style_transfer_prompt(t: &PromptTemplates, code: &str, profile: &LanguageProfile) -> String {
    t.render(
        "style_transfer",
        &[("source_lang", &profile.display_name), ("source_code", &t.code_block(code, profile))],
    )
}

const CODE_KEYWORDS: &[&str] = &[
    "import", "from", "package", "use", "def", "fn", "func", "class", "struct", "enum", "impl", "pub", "let",
    "var", "const", "static", "return", "if", "else", "elif", "for", "while", "loop", "match", "switch", "case",
    "try", "except", "finally", "with", "pass", "break", "continue", "template", "typedef", "namespace", "int",
    "int64_t", "double", "bool", "void", "auto", "std::string", "mod", "type", "lambda", "yield", "raise",
];

fn is_code_like(line: &str) -> bool {
    let trimmed = line.trim();
    if trimmed.is_empty() {
        return false;
    }
    if line.starts_with([' ', '\t']) {
        return true;
    }
    if trimmed.starts_with(['#', '/', '@', '}', ')', ']', '{']) {
        return true;
    }
    let first = trimmed
        .split(|c: char| c.is_whitespace() || c == '(' || c == ':')
        .next()
        .unwrap_or("");
    if CODE_KEYWORDS.contains(&first) {
        return true;
    }
    trimmed.contains(|c| "(){}[];=<>".contains(c))
}

fn first_fenced_block(text: &str) -> Option<&str> {
    let mut offset = 0;
    let mut start = None;
    for line in text.split_inclusive('\n') {
        if line.trim_start().starts_with("```") {
            match start {
                None => start = Some(offset + line.len()),
                Some(s) => return Some(&text[s..offset]),
            }
        }
        offset += line.len();
    }
    start.map(|s| &text[s.min(text.len())..])
}

fn signature_head(sig: &Signature, profile: &LanguageProfile) -> Result<String, CodegenError> {
    let full = render_signature(sig, profile)?;
    let name = function_name(&sig.name, profile);
    let head = match full.find(&format!("{name}(")) {
        Some(i) => full[..i + name.len() + 1].to_string(),
        None => full,
    };
    Ok(match profile.dialect {
        Dialect::Cpp => format!("{name}("),
        _ => head,
    })
}

/// Pulls candidate code out of a model completion.
///
/// Order of preference: the first fenced block; the code starting at the
/// first line that opens the target function (together with the code-like
/// lines directly above it, such as imports); the completion minus any
/// leading prose.
pub fn extract_code(completion: &str, profile: &LanguageProfile, sig: &Signature) -> Result<String, PromptError> {
    if completion.trim().is_empty() {
        return Err(PromptError::EmptyCompletion);
    }
    if let Some(block) = first_fenced_block(completion) {
        if block.trim().is_empty() {
            return Err(PromptError::EmptyCompletion);
        }
        return Ok(block.to_string());
    }
    let lines: Vec<&str> = completion.split_inclusive('\n').collect();
    let head = signature_head(sig, profile)?;
    let sig_line = lines.iter().position(|l| {
        let t = l.trim_start();
        match profile.dialect {
            Dialect::Cpp => t.contains(&head) && !t.starts_with("//"),
            _ => t.starts_with(&head),
        }
    });
    let start = match sig_line {
        Some(mut i) => {
            while i > 0 && (is_code_like(lines[i - 1]) || lines[i - 1].trim().is_empty()) {
                i -= 1;
            }
            while i < lines.len() && lines[i].trim().is_empty() {
                i += 1;
            }
            i
        }
        None => lines
            .iter()
            .position(|l| is_code_like(l))
            .ok_or(PromptError::EmptyCompletion)?,
    };
    Ok(lines[start..].concat())
}

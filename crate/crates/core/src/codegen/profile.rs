use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::CodegenError;

/// Identifier casing applied to canonical snake_case names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Casing {
    Snake,
    Camel,
    Pascal,
}

impl Casing {
    pub fn apply(self, snake: &str) -> String {
        match self {
            Casing::Snake => snake.to_string(),
            Casing::Camel | Casing::Pascal => {
                let mut out = String::with_capacity(snake.len());
                let mut upper = self == Casing::Pascal;
                let leading = snake.len() - snake.trim_start_matches('_').len();
                out.push_str(&snake[..leading]);
                for c in snake[leading..].chars() {
                    if c == '_' {
                        upper = true;
                    } else if upper {
                        out.extend(c.to_uppercase());
                        upper = false;
                    } else {
                        out.push(c);
                    }
                }
                out
            }
        }
    }
}

/// The built-in rule families that know how to emit literals, signatures
/// and complete driver programs. A profile picks one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dialect {
    Python,
    Go,
    Cpp,
    Rust,
    Pseudo,
}

/// Type templates. Composite templates use `{elem}`, `{key}`, `{value}`
/// and `{inner}` placeholders.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeRules {
    pub int: String,
    pub double: String,
    pub bool: String,
    pub str: String,
    pub list: String,
    pub map: String,
    pub opt: String,
}

/// Everything needed to turn problem metadata into a runnable program in
/// one language.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageProfile {
    pub id: String,
    pub display_name: String,
    pub dialect: Dialect,
    pub extension: String,
    /// Markdown fence tag used in prompts.
    pub fence: String,
    pub function_casing: Casing,
    pub param_casing: Casing,
    pub types: TypeRules,
    /// argv template; `None` for interpreted languages. Supports `{src}`,
    /// `{bin}` and `{dir}`.
    #[serde(default)]
    pub compile_cmd: Option<Vec<String>>,
    pub run_cmd: Vec<String>,
}

/// Sentinel `run_cmd` for profiles executed by the in-process evaluator.
pub const BUILTIN_RUNNER: &str = "builtin:pseudo";

fn rules(int: &str, double: &str, bool_: &str, str_: &str, list: &str, map: &str, opt: &str) -> TypeRules {
    TypeRules {
        int: int.into(),
        double: double.into(),
        bool: bool_.into(),
        str: str_.into(),
        list: list.into(),
        map: map.into(),
        opt: opt.into(),
    }
}

fn argv(parts: &[&str]) -> Vec<String> {
    parts.iter().map(|s| s.to_string()).collect()
}

impl LanguageProfile {
    pub fn python() -> Self {
        LanguageProfile {
            id: "python".into(),
            display_name: "Python".into(),
            dialect: Dialect::Python,
            extension: "py".into(),
            fence: "python".into(),
            function_casing: Casing::Snake,
            param_casing: Casing::Snake,
            types: rules("int", "float", "bool", "str", "List[{elem}]", "Dict[{key}, {value}]", "Optional[{inner}]"),
            compile_cmd: Some(argv(&["python3", "-m", "py_compile", "{src}"])),
            run_cmd: argv(&["python3", "{src}"]),
        }
    }

    pub fn go() -> Self {
        LanguageProfile {
            id: "go".into(),
            display_name: "Go".into(),
            dialect: Dialect::Go,
            extension: "go".into(),
            fence: "go".into(),
            function_casing: Casing::Camel,
            param_casing: Casing::Camel,
            types: rules("int64", "float64", "bool", "string", "[]{elem}", "map[{key}]{value}", "*{inner}"),
            compile_cmd: Some(argv(&["go", "build", "-o", "{bin}", "{src}"])),
            run_cmd: argv(&["{bin}"]),
        }
    }

    pub fn cpp() -> Self {
        LanguageProfile {
            id: "cpp".into(),
            display_name: "C++".into(),
            dialect: Dialect::Cpp,
            extension: "cpp".into(),
            fence: "cpp".into(),
            function_casing: Casing::Snake,
            param_casing: Casing::Snake,
            types: rules(
                "int64_t",
                "double",
                "bool",
                "std::string",
                "std::vector<{elem}>",
                "std::map<{key}, {value}>",
                "std::optional<{inner}>",
            ),
            compile_cmd: Some(argv(&["g++", "-std=c++17", "-O1", "-o", "{bin}", "{src}"])),
            run_cmd: argv(&["{bin}"]),
        }
    }

    pub fn rust() -> Self {
        LanguageProfile {
            id: "rust".into(),
            display_name: "Rust".into(),
            dialect: Dialect::Rust,
            extension: "rs".into(),
            fence: "rust".into(),
            function_casing: Casing::Snake,
            param_casing: Casing::Snake,
            types: rules("i64", "f64", "bool", "String", "Vec<{elem}>", "HashMap<{key}, {value}>", "Option<{inner}>"),
            compile_cmd: Some(argv(&[
                "rustc",
                "--edition",
                "2021",
                "-A",
                "warnings",
                "-o",
                "{bin}",
                "{src}",
            ])),
            run_cmd: argv(&["{bin}"]),
        }
    }

    pub fn pseudo() -> Self {
        LanguageProfile {
            id: "pseudo".into(),
            display_name: "Pseudo".into(),
            dialect: Dialect::Pseudo,
            extension: "pseudo".into(),
            fence: "pseudo".into(),
            function_casing: Casing::Snake,
            param_casing: Casing::Snake,
            types: rules("int", "double", "bool", "str", "list<{elem}>", "map<{key}, {value}>", "opt<{inner}>"),
            compile_cmd: None,
            run_cmd: argv(&[BUILTIN_RUNNER]),
        }
    }

    pub fn is_builtin_runner(&self) -> bool {
        self.run_cmd.first().map(String::as_str) == Some(BUILTIN_RUNNER)
    }

    pub fn validate(&self) -> Result<(), CodegenError> {
        if self.id.trim().is_empty() {
            return Err(CodegenError::InvalidProfile("empty profile id".into()));
        }
        if self.run_cmd.is_empty() {
            return Err(CodegenError::InvalidProfile(format!(
                "profile {} has an empty run_cmd",
                self.id
            )));
        }
        if self.compile_cmd.as_ref().is_some_and(|c| c.is_empty()) {
            return Err(CodegenError::InvalidProfile(format!(
                "profile {} has an empty compile_cmd",
                self.id
            )));
        }
        let t = &self.types;
        for (tag, tpl, holes) in [
            ("int", &t.int, &[][..]),
            ("double", &t.double, &[][..]),
            ("bool", &t.bool, &[][..]),
            ("str", &t.str, &[][..]),
            ("list", &t.list, &["{elem}"][..]),
            ("map", &t.map, &["{key}", "{value}"][..]),
            ("opt", &t.opt, &["{inner}"][..]),
        ] {
            if tpl.trim().is_empty() {
                return Err(CodegenError::InvalidProfile(format!(
                    "profile {} has no `{tag}` type rule",
                    self.id
                )));
            }
            if let Some(h) = holes.iter().find(|h| !tpl.contains(*h)) {
                return Err(CodegenError::InvalidProfile(format!(
                    "profile {} `{tag}` rule lacks {h}",
                    self.id
                )));
            }
        }
        Ok(())
    }

    /// Parses a profile description file (JSON).
    pub fn from_json(text: &str) -> Result<Self, CodegenError> {
        let p: LanguageProfile =
            serde_json::from_str(text).map_err(|e| CodegenError::InvalidProfile(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }
}

/// Registered profiles keyed by id.
#[derive(Debug, Clone, Default)]
pub struct ProfileRegistry {
    profiles: BTreeMap<String, LanguageProfile>,
}

impl ProfileRegistry {
    pub fn empty() -> Self {
        Self::default()
    }

    /// python, go, cpp, rust and pseudo.
    pub fn builtin() -> Self {
        let mut r = Self::empty();
        for p in [
            LanguageProfile::python(),
            LanguageProfile::go(),
            LanguageProfile::cpp(),
            LanguageProfile::rust(),
            LanguageProfile::pseudo(),
        ] {
            r.register(p).expect("builtin profiles are valid and unique");
        }
        r
    }

    pub fn register(&mut self, profile: LanguageProfile) -> Result<(), CodegenError> {
        profile.validate()?;
        if self.profiles.contains_key(&profile.id) {
            return Err(CodegenError::InvalidProfile(format!(
                "duplicate profile id {}",
                profile.id
            )));
        }
        self.profiles.insert(profile.id.clone(), profile);
        Ok(())
    }

    pub fn load_file(&mut self, path: &Path) -> Result<(), CodegenError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CodegenError::InvalidProfile(format!("{}: {e}", path.display())))?;
        self.register(LanguageProfile::from_json(&text)?)
    }

    pub fn get(&self, id: &str) -> Result<&LanguageProfile, CodegenError> {
        self.profiles
            .get(id)
            .ok_or_else(|| CodegenError::UnknownProfile(id.to_string()))
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.profiles.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = &LanguageProfile> {
        self.profiles.values()
    }
}

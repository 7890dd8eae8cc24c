//! Uniform generation interface with live HTTP, record/replay and
//! scripted adapters.

use std::collections::{BTreeMap, VecDeque};
use std::io::{BufRead, Write};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const ENV_ENDPOINT: &str = "MODEL_ENDPOINT";
pub const ENV_TOKEN: &str = "MODEL_TOKEN";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("model endpoint unreachable: {0}")]
    EndpointUnreachable(String),
    #[error("no recorded exchange for key {key}")]
    ReplayMiss { key: String },
    #[error("rate limited after {attempts} attempts")]
    RateLimited { attempts: u32 },
    #[error("invalid generation params: {0}")]
    InvalidParams(String),
    #[error("malformed model response: {0}")]
    Protocol(String),
    #[error("fixture error: {0}")]
    Fixture(String),
}

/// Decoding configuration. The default is the greedy-like setting used for
/// pass@1 evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationParams {
    pub temperature: f64,
    pub top_p: f64,
    pub top_k: u32,
    pub repetition_penalty: f64,
    pub max_new_tokens: u32,
    pub n: usize,
}

impl Default for GenerationParams {
    fn default() -> Self {
        GenerationParams {
            temperature: 0.01,
            top_p: 0.9,
            top_k: 50,
            repetition_penalty: 1.0,
            max_new_tokens: 2048,
            n: 1,
        }
    }
}

impl GenerationParams {
    /// Five samples at temperature 0.8.
    pub fn sampling5() -> Self {
        GenerationParams {
            temperature: 0.8,
            n: 5,
            ..GenerationParams::default()
        }
    }

    pub fn with_n(&self, n: usize) -> Self {
        GenerationParams { n, ..self.clone() }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(ModelError::InvalidParams(format!("temperature {} must be > 0", self.temperature)));
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err(ModelError::InvalidParams(format!("top_p {} must be in (0, 1]", self.top_p)));
        }
        if self.n == 0 {
            return Err(ModelError::InvalidParams("n must be at least 1".into()));
        }
        Ok(())
    }
}

/// Content hash of the normalized `(prompt, params)` pair.
pub fn fixture_key(prompt: &str, params: &GenerationParams) -> String {
    let normalized = prompt.replace("\r\n", "\n");
    let doc = json!({
        "prompt": normalized,
        "params": {
            "temperature": params.temperature,
            "top_p": params.top_p,
            "top_k": params.top_k,
            "repetition_penalty": params.repetition_penalty,
            "max_new_tokens": params.max_new_tokens,
            "n": params.n,
        },
    });
    hex::encode(Sha256::digest(doc.to_string().as_bytes()))
}

/// One line of a fixture file or exchange log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureRecord {
    pub key: String,
    pub prompt: String,
    pub params: GenerationParams,
    pub completions: Vec<String>,
}

/// A completed call, as seen by a [`RecordingClient`].
#[derive(Debug, Clone, PartialEq)]
pub struct ModelExchange {
    pub prompt: String,
    pub params: GenerationParams,
    pub completions: Vec<String>,
    pub adapter: String,
    pub latency: Duration,
}

impl ModelExchange {
    pub fn record(&self) -> FixtureRecord {
        FixtureRecord {
            key: fixture_key(&self.prompt, &self.params),
            prompt: self.prompt.clone(),
            params: self.params.clone(),
            completions: self.completions.clone(),
        }
    }
}

pub trait ModelClient: Send + Sync {
    fn id(&self) -> &str;

    /// Returns exactly `params.n` completions.
    fn generate(&self, prompt: &str, params: &GenerationParams) -> Result<Vec<String>, ModelError>;
}

fn check_count(completions: Vec<String>, params: &GenerationParams) -> Result<Vec<String>, ModelError> {
    if completions.len() != params.n {
        return Err(ModelError::Protocol(format!(
            "expected {} completions, got {}",
            params.n,
            completions.len()
        )));
    }
    Ok(completions)
}

/// Counting gate limiting concurrent in-flight calls.
#[derive(Debug)]
struct Gate {
    cap: usize,
    busy: Mutex<usize>,
    freed: Condvar,
}

impl Gate {
    fn new(cap: usize) -> Self {
        Gate {
            cap: cap.max(1),
            busy: Mutex::new(0),
            freed: Condvar::new(),
        }
    }

    fn run<T>(&self, f: impl FnOnce() -> T) -> T {
        {
            let mut busy = self.busy.lock().expect("gate lock");
            while *busy >= self.cap {
                busy = self.freed.wait(busy).expect("gate lock");
            }
            *busy += 1;
        }
        let out = f();
        *self.busy.lock().expect("gate lock") -= 1;
        self.freed.notify_one();
        out
    }
}

/// Live adapter: POSTs `{prompt, params}` and expects `{completions}`.
#[derive(Debug)]
pub struct HttpClient {
    endpoint: String,
    token: Option<String>,
    agent: ureq::Agent,
    max_retries: u32,
    backoff: Duration,
    gate: Gate,
}

impl HttpClient {
    pub fn new(endpoint: impl Into<String>, token: Option<String>) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(600)))
            .build()
            .into();
        HttpClient {
            endpoint: endpoint.into(),
            token,
            agent,
            max_retries: 3,
            backoff: Duration::from_millis(500),
            gate: Gate::new(8),
        }
    }

    /// Reads `MODEL_ENDPOINT` and the optional `MODEL_TOKEN`.
    pub fn from_env() -> Result<Self, ModelError> {
        let endpoint = std::env::var(ENV_ENDPOINT)
            .ok()
            .filter(|s| !s.trim().is_empty())
            .ok_or_else(|| ModelError::EndpointUnreachable(format!("{ENV_ENDPOINT} is not set")))?;
        let token = std::env::var(ENV_TOKEN).ok().filter(|s| !s.is_empty());
        Ok(HttpClient::new(endpoint, token))
    }

    pub fn with_retries(mut self, max_retries: u32, backoff: Duration) -> Self {
        self.max_retries = max_retries;
        self.backoff = backoff;
        self
    }

    pub fn with_max_in_flight(mut self, cap: usize) -> Self {
        self.gate = Gate::new(cap);
        self
    }

    fn attempt(&self, body: &serde_json::Value) -> Result<Vec<String>, Attempt> {
        let mut req = self.agent.post(&self.endpoint).header("Content-Type", "application/json");
        if let Some(t) = &self.token {
            req = req.header("Authorization", &format!("Bearer {t}"));
        }
        let mut resp = match req.send(body.to_string()) {
            Ok(r) => r,
            Err(e) => return Err(Attempt::Transient(e.to_string(), false)),
        };
        let status = resp.status().as_u16();
        if status == 429 {
            return Err(Attempt::Transient("429 Too Many Requests".into(), true));
        }
        if status >= 500 {
            return Err(Attempt::Transient(format!("HTTP {status}"), false));
        }
        if status >= 400 {
            return Err(Attempt::Fatal(ModelError::Protocol(format!("HTTP {status}"))));
        }
        #[derive(Deserialize)]
        struct Reply {
            completions: Vec<String>,
        }
        resp.body_mut()
            .read_json::<Reply>()
            .map(|r| r.completions)
            .map_err(|e| Attempt::Fatal(ModelError::Protocol(e.to_string())))
    }
}

enum Attempt {
    Transient(String, bool),
    Fatal(ModelError),
}

impl ModelClient for HttpClient {
    fn id(&self) -> &str {
        "http"
    }

    fn generate(&self, prompt: &str, params: &GenerationParams) -> Result<Vec<String>, ModelError> {
        params.validate()?;
        let body = json!({ "prompt": prompt, "params": params });
        self.gate.run(|| {
            let mut delay = self.backoff;
            let mut attempts = 0;
            loop {
                attempts += 1;
                match self.attempt(&body) {
                    Ok(c) => return check_count(c, params),
                    Err(Attempt::Fatal(e)) => return Err(e),
                    Err(Attempt::Transient(msg, limited)) => {
                        if attempts > self.max_retries {
                            return Err(if limited {
                                ModelError::RateLimited { attempts }
                            } else {
                                ModelError::EndpointUnreachable(msg)
                            });
                        }
                        std::thread::sleep(delay);
                        delay *= 2;
                    }
                }
            }
        })
    }
}

/// Serves recorded completions by fixture key. Repeated records for one
/// key are served in file order; the last one repeats.
#[derive(Debug, Default)]
pub struct ReplayClient {
    records: Mutex<BTreeMap<String, VecDeque<Vec<String>>>>,
}

impl ReplayClient {
    pub fn new(records: impl IntoIterator<Item = FixtureRecord>) -> Self {
        let mut map: BTreeMap<String, VecDeque<Vec<String>>> = BTreeMap::new();
        for r in records {
            map.entry(r.key).or_default().push_back(r.completions);
        }
        ReplayClient {
            records: Mutex::new(map),
        }
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        Ok(ReplayClient::new(read_fixture(path)?))
    }
}

impl ModelClient for ReplayClient {
    fn id(&self) -> &str {
        "replay"
    }

    fn generate(&self, prompt: &str, params: &GenerationParams) -> Result<Vec<String>, ModelError> {
        params.validate()?;
        let key = fixture_key(prompt, params);
        let mut records = self.records.lock().expect("replay lock");
        let queue = records.get_mut(&key).ok_or(ModelError::ReplayMiss { key })?;
        let completions = if queue.len() > 1 {
            queue.pop_front().expect("non-empty")
        } else {
            queue.front().cloned().expect("non-empty")
        };
        check_count(completions, params)
    }
}

/// Wraps another client and append-logs every successful exchange.
pub struct RecordingClient<C> {
    inner: C,
    log: Mutex<Vec<ModelExchange>>,
}

impl<C: ModelClient> RecordingClient<C> {
    pub fn new(inner: C) -> Self {
        RecordingClient {
            inner,
            log: Mutex::new(Vec::new()),
        }
    }

    pub fn inner(&self) -> &C {
        &self.inner
    }

    pub fn exchanges(&self) -> Vec<ModelExchange> {
        self.log.lock().expect("log lock").clone()
    }

    /// Log records, stably ordered by key so concurrent runs write the same
    /// file.
    pub fn records(&self) -> Vec<FixtureRecord> {
        let mut records: Vec<FixtureRecord> = self.exchanges().iter().map(ModelExchange::record).collect();
        records.sort_by(|a, b| a.key.cmp(&b.key));
        records
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<(), ModelError> {
        write_fixture(path, &self.records())
    }
}

impl<C: ModelClient> ModelClient for RecordingClient<C> {
    fn id(&self) -> &str {
        self.inner.id()
    }

    fn generate(&self, prompt: &str, params: &GenerationParams) -> Result<Vec<String>, ModelError> {
        let start = Instant::now();
        let completions = self.inner.generate(prompt, params)?;
        self.log.lock().expect("log lock").push(ModelExchange {
            prompt: prompt.to_string(),
            params: params.clone(),
            completions: completions.clone(),
            adapter: self.inner.id().to_string(),
            latency: start.elapsed(),
        });
        Ok(completions)
    }
}

type Script = Box<dyn Fn(&str, &GenerationParams) -> Vec<String> + Send + Sync>;

/// Mock adapter driven by a function of the prompt, or by a fixed queue of
/// replies.
pub struct ScriptedClient {
    script: Option<Script>,
    queue: Mutex<VecDeque<Vec<String>>>,
    calls: AtomicUsize,
    prompts: Mutex<Vec<String>>,
}

impl ScriptedClient {
    pub fn new(f: impl Fn(&str, &GenerationParams) -> Vec<String> + Send + Sync + 'static) -> Self {
        ScriptedClient {
            script: Some(Box::new(f)),
            queue: Mutex::new(VecDeque::new()),
            calls: AtomicUsize::new(0),
            prompts: Mutex::new(Vec::new()),
        }
    }

    /// Always answers with `text`, repeated `n` times.
    pub fn constant(text: impl Into<String>) -> Self {
        let text = text.into();
        ScriptedClient::new(move |_, p| vec![text.clone(); p.n])
    }

    /// Answers calls in order from `replies`.
    pub fn sequence(replies: Vec<Vec<String>>) -> Self {
        ScriptedClient {
            script: None,
            queue: Mutex::new(replies.into()),
            calls: AtomicUsize::new(0),
            prompts: Mutex::new(Vec::new()),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn prompts(&self) -> Vec<String> {
        self.prompts.lock().expect("prompt lock").clone()
    }
}

impl ModelClient for ScriptedClient {
    fn id(&self) -> &str {
        "scripted"
    }

    fn generate(&self, prompt: &str, params: &GenerationParams) -> Result<Vec<String>, ModelError> {
        params.validate()?;
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.prompts.lock().expect("prompt lock").push(prompt.to_string());
        let out = match &self.script {
            Some(f) => f(prompt, params),
            None => self
                .queue
                .lock()
                .expect("queue lock")
                .pop_front()
                .ok_or_else(|| ModelError::Protocol("scripted replies exhausted".into()))?,
        };
        check_count(out, params)
    }
}

impl<T: ModelClient + ?Sized> ModelClient for &T {
    fn id(&self) -> &str {
        (**self).id()
    }

    fn generate(&self, prompt: &str, params: &GenerationParams) -> Result<Vec<String>, ModelError> {
        (**self).generate(prompt, params)
    }
}

impl<T: ModelClient + ?Sized> ModelClient for Box<T> {
    fn id(&self) -> &str {
        (**self).id()
    }

    fn generate(&self, prompt: &str, params: &GenerationParams) -> Result<Vec<String>, ModelError> {
        (**self).generate(prompt, params)
    }
}

pub fn read_fixture(path: &Path) -> Result<Vec<FixtureRecord>, ModelError> {
    let file = std::fs::File::open(path).map_err(|e| ModelError::Fixture(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| ModelError::Fixture(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: FixtureRecord = serde_json::from_str(&line)
            .map_err(|e| ModelError::Fixture(format!("{}:{}: {e}", path.display(), i + 1)))?;
        out.push(rec);
    }
    Ok(out)
}

pub fn write_fixture(path: &Path, records: &[FixtureRecord]) -> Result<(), ModelError> {
    let io = |e: std::io::Error| ModelError::Fixture(format!("{}: {e}", path.display()));
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
    for r in records {
        let line = serde_json::to_string(r).map_err(|e| ModelError::Fixture(e.to_string()))?;
        writeln!(f, "{line}").map_err(io)?;
    }
    f.flush().map_err(io)
}

//! Generator bindings: deterministic mock, content-addressed replay,
//! fixture recording, and an HTTP client for completion endpoints.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use darank_core::generation::{CompletionRequest, GenerationError, Generator};
use darank_core::mock::MockGenerator;
use darank_core::{Ontology, PromptSpec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{GeneratorKind, GeneratorSettings};
use crate::error::DarankError;
use crate::retry::RetryPolicy;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Fixture key: SHA-256 of the request's canonical JSON.
pub fn request_key(request: &CompletionRequest) -> String {
    sha256_hex(serde_json::to_string(request).expect("request serializes").as_bytes())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fixture {
    pub request: CompletionRequest,
    pub completions: Vec<String>,
}

fn other(e: impl std::error::Error + Send + Sync + 'static) -> GenerationError {
    GenerationError::Other(Box::new(e))
}

/// Serves completions from `<dir>/<request key>.json`.
#[derive(Debug)]
pub struct ReplayGenerator {
    dir: PathBuf,
    consulted: Mutex<BTreeMap<String, String>>,
}

impl ReplayGenerator {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into(), consulted: Mutex::new(BTreeMap::new()) }
    }

    pub fn fixture_path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    /// File name → SHA-256 of contents for every fixture read so far.
    pub fn consulted(&self) -> BTreeMap<String, String> {
        self.consulted.lock().expect("lock").clone()
    }
}

impl Generator for ReplayGenerator {
    fn generate(&self, _prompt: &PromptSpec, request: &CompletionRequest) -> Result<Vec<String>, GenerationError> {
        let key = request_key(request);
        let path = self.fixture_path(&key);
        let bytes = match std::fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Err(GenerationError::FixtureMiss(key)),
            Err(e) => return Err(other(e)),
        };
        let fixture: Fixture = serde_json::from_slice(&bytes).map_err(other)?;
        if fixture.request != *request {
            return Err(GenerationError::FixtureMiss(key));
        }
        self.consulted.lock().expect("lock").insert(format!("{key}.json"), sha256_hex(&bytes));
        Ok(fixture.completions)
    }
}

/// Writes one pretty-printed fixture, via a temporary file so a crash
/// never leaves a truncated fixture behind.
pub fn write_fixture(dir: &Path, fixture: &Fixture) -> std::io::Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let key = request_key(&fixture.request);
    let path = dir.join(format!("{key}.json"));
    let tmp = dir.join(format!(".{key}.json.tmp"));
    let mut body = serde_json::to_vec_pretty(fixture).map_err(std::io::Error::other)?;
    body.push(b'\n');
    std::fs::write(&tmp, body)?;
    std::fs::rename(&tmp, &path)?;
    Ok(path)
}

/// Passes requests through and saves every response as a replay fixture.
pub struct RecordingGenerator<G> {
    pub inner: G,
    pub dir: PathBuf,
}

impl<G: Generator> Generator for RecordingGenerator<G> {
    fn generate(&self, prompt: &PromptSpec, request: &CompletionRequest) -> Result<Vec<String>, GenerationError> {
        let completions = self.inner.generate(prompt, request)?;
        let fixture = Fixture { request: request.clone(), completions };
        write_fixture(&self.dir, &fixture).map_err(other)?;
        Ok(fixture.completions)
    }
}

#[derive(Debug, Clone)]
pub struct RemoteSettings {
    /// Base URL; requests go to `<url>/completions`.
    pub url: String,
    pub model: Option<String>,
    pub api_key: Option<String>,
    pub supports_n: bool,
    pub retry: RetryPolicy,
    pub max_requests: Option<u64>,
    pub max_total_tokens: Option<u64>,
    pub timeout: Duration,
}

#[derive(Debug, Serialize)]
struct CompletionBody<'a> {
    #[serde(skip_serializing_if = "Option::is_none")]
    model: Option<&'a str>,
    prompt: &'a str,
    n: usize,
    temperature: f64,
    top_p: f64,
    max_tokens: u32,
    #[serde(skip_serializing_if = "<[String]>::is_empty")]
    stop: &'a [String],
}

#[derive(Debug, Deserialize)]
struct CompletionResponse {
    choices: Vec<Choice>,
    #[serde(default)]
    usage: Option<Usage>,
}

#[derive(Debug, Deserialize)]
struct Choice {
    text: String,
    #[serde(default)]
    index: Option<usize>,
}

#[derive(Debug, Deserialize)]
struct Usage {
    #[serde(default)]
    total_tokens: u64,
}

/// Client for an OpenAI-style `/completions` endpoint.
pub struct RemoteGenerator {
    settings: RemoteSettings,
    agent: ureq::Agent,
    requests: AtomicU64,
    tokens: AtomicU64,
}

fn endpoint_error(message: String, retryable: bool) -> GenerationError {
    GenerationError::Endpoint { message, retryable }
}

fn is_retryable(e: &GenerationError) -> bool {
    matches!(e, GenerationError::Endpoint { retryable: true, .. })
}

impl RemoteGenerator {
    pub fn new(settings: RemoteSettings) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(settings.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self { settings, agent, requests: AtomicU64::new(0), tokens: AtomicU64::new(0) }
    }

    pub fn requests_made(&self) -> u64 {
        self.requests.load(Ordering::SeqCst)
    }

    pub fn tokens_used(&self) -> u64 {
        self.tokens.load(Ordering::SeqCst)
    }

    fn check_budget(&self) -> Result<(), GenerationError> {
        if let Some(max) = self.settings.max_requests {
            if self.requests.fetch_add(1, Ordering::SeqCst) >= max {
                self.requests.fetch_sub(1, Ordering::SeqCst);
                return Err(GenerationError::BudgetExceeded(format!("request cap of {max} reached")));
            }
        } else {
            self.requests.fetch_add(1, Ordering::SeqCst);
        }
        if let Some(max) = self.settings.max_total_tokens {
            let used = self.tokens.load(Ordering::SeqCst);
            if used >= max {
                return Err(GenerationError::BudgetExceeded(format!("token cap of {max} reached ({used} used)")));
            }
        }
        Ok(())
    }

    fn call_once(&self, request: &CompletionRequest, n: usize) -> Result<Vec<String>, GenerationError> {
        self.check_budget()?;
        let body = CompletionBody {
            model: self.settings.model.as_deref(),
            prompt: &request.prompt,
            n,
            temperature: request.temperature,
            top_p: request.top_p,
            max_tokens: request.max_tokens,
            stop: &request.stop,
        };
        let url = format!("{}/completions", self.settings.url.trim_end_matches('/'));
        let mut req = self.agent.post(&url);
        if let Some(key) = &self.settings.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req.send_json(&body).map_err(|e| endpoint_error(e.to_string(), true))?;
        let status = resp.status().as_u16();
        if status != 200 {
            let text = resp.body_mut().read_to_string().unwrap_or_default();
            let retryable = status == 429 || status >= 500;
            return Err(endpoint_error(format!("HTTP {status}: {}", text.trim()), retryable));
        }
        let parsed: CompletionResponse =
            resp.body_mut().read_json().map_err(|e| endpoint_error(format!("malformed response: {e}"), false))?;
        if let Some(u) = &parsed.usage {
            self.tokens.fetch_add(u.total_tokens, Ordering::SeqCst);
        }
        let mut choices = parsed.choices;
        choices.sort_by_key(|c| c.index.unwrap_or(usize::MAX));
        Ok(choices.into_iter().map(|c| c.text).collect())
    }

    fn call(&self, request: &CompletionRequest, n: usize) -> Result<Vec<String>, GenerationError> {
        self.settings.retry.run(|| self.call_once(request, n), is_retryable)
    }
}

impl Generator for RemoteGenerator {
    /// With `n` support, one request for all k; otherwise k single
    /// requests. A k-fold loop that fails part-way after retries returns
    /// what it has and the caller pads.
    fn generate(&self, _prompt: &PromptSpec, request: &CompletionRequest) -> Result<Vec<String>, GenerationError> {
        if self.settings.supports_n {
            return self.call(request, request.n);
        }
        let mut out = Vec::with_capacity(request.n);
        for _ in 0..request.n {
            match self.call(request, 1) {
                Ok(texts) => out.extend(texts.into_iter().take(1)),
                Err(e @ GenerationError::BudgetExceeded(_)) => return Err(e),
                Err(e) if out.is_empty() => return Err(e),
                Err(_) => break,
            }
        }
        Ok(out)
    }
}

/// The generator a run is configured with.
pub enum Binding {
    Mock(MockGenerator),
    Replay(ReplayGenerator),
    Remote(RemoteGenerator),
    Recording(RecordingGenerator<Box<Binding>>),
}

impl Generator for Binding {
    fn generate(&self, prompt: &PromptSpec, request: &CompletionRequest) -> Result<Vec<String>, GenerationError> {
        match self {
            Binding::Mock(g) => g.generate(prompt, request),
            Binding::Replay(g) => g.generate(prompt, request),
            Binding::Remote(g) => g.generate(prompt, request),
            Binding::Recording(g) => g.generate(prompt, request),
        }
    }
}

impl Binding {
    pub fn from_settings(
        settings: &GeneratorSettings,
        ontology: &Ontology,
        seed: u64,
        resolve: impl Fn(&Path) -> PathBuf,
    ) -> Result<Self, DarankError> {
        let base = match settings.kind {
            GeneratorKind::Mock => {
                Binding::Mock(MockGenerator { ontology: ontology.clone(), policy: settings.policy.clone(), seed })
            }
            GeneratorKind::Replay => {
                let dir = settings
                    .fixtures
                    .as_deref()
                    .ok_or_else(|| DarankError::Config("replay generator needs `generator.fixtures`".into()))?;
                Binding::Replay(ReplayGenerator::new(resolve(dir)))
            }
            GeneratorKind::Remote => {
                let url = settings
                    .url
                    .clone()
                    .or_else(|| std::env::var("DARANK_LLM_URL").ok())
                    .ok_or_else(|| DarankError::Config("remote generator needs a URL".into()))?;
                Binding::Remote(RemoteGenerator::new(RemoteSettings {
                    url,
                    model: settings.model.clone().or_else(|| std::env::var("DARANK_LLM_MODEL").ok()),
                    api_key: std::env::var(&settings.api_key_env).ok(),
                    supports_n: settings.supports_n,
                    retry: settings.retry.clone(),
                    max_requests: settings.max_requests,
                    max_total_tokens: settings.max_total_tokens,
                    timeout: Duration::from_secs(settings.timeout_secs),
                }))
            }
        };
        Ok(match &settings.record {
            Some(dir) => Binding::Recording(RecordingGenerator { inner: Box::new(base), dir: resolve(dir) }),
            None => base,
        })
    }

    /// Replay fixtures consulted so far, for provenance.
    pub fn fixture_hashes(&self) -> BTreeMap<String, String> {
        match self {
            Binding::Replay(r) => r.consulted(),
            Binding::Recording(r) => r.inner.fixture_hashes(),
            _ => BTreeMap::new(),
        }
    }
}

//! Completion backends (chat-completions over HTTP, scripted mock) and parsing
//! of `the hint-text is "...", the input content is "..."` answers.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const MAX_RETRIES_LIMIT: u32 = 5;
pub const DEFAULT_IN_FLIGHT: usize = 4;

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("invalid backend configuration: {0}")]
    InvalidConfig(String),
    #[error("network error: {0}")]
    Network(String),
    #[error("request timed out after {0:?}")]
    Timeout(Duration),
    #[error("backend answered with HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("backend response has no message content: {0}")]
    BadResponse(String),
    #[error("no scripted response matches prompt {0}")]
    MockMiss(String),
    #[error("response does not contain a quoted hint-text")]
    UnparseableResponse,
    #[error("invalid mock script: {0}")]
    Script(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl GatewayError {
    fn retryable(&self) -> bool {
        matches!(self, GatewayError::Network(_) | GatewayError::Timeout(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    HttpChat,
    ScriptedMock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendConfig {
    pub kind: BackendKind,
    /// Full chat-completions URL, e.g. `https://host/v1/chat/completions`.
    pub endpoint: Option<String>,
    pub model_name: String,
    pub timeout: Duration,
    pub max_retries: u32,
    pub temperature: f64,
    /// Name of the environment variable holding the API key.
    pub api_key_env: Option<String>,
    pub max_in_flight: usize,
    /// Base delay of the exponential retry backoff.
    pub backoff: Duration,
    pub trace_path: Option<PathBuf>,
}

impl BackendConfig {
    pub fn mock() -> Self {
        Self {
            kind: BackendKind::ScriptedMock,
            endpoint: None,
            model_name: "scripted-mock".into(),
            timeout: Duration::from_secs(30),
            max_retries: 2,
            temperature: 0.0,
            api_key_env: None,
            max_in_flight: DEFAULT_IN_FLIGHT,
            backoff: Duration::from_millis(250),
            trace_path: None,
        }
    }

    pub fn http(endpoint: impl Into<String>, model_name: impl Into<String>) -> Self {
        Self {
            kind: BackendKind::HttpChat,
            endpoint: Some(endpoint.into()),
            model_name: model_name.into(),
            ..Self::mock()
        }
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        let bad = |m: &str| Err(GatewayError::InvalidConfig(m.to_string()));
        if self.timeout.is_zero() {
            return bad("timeout must be positive");
        }
        if self.max_retries > MAX_RETRIES_LIMIT {
            return bad("max_retries must be at most 5");
        }
        if !(self.temperature >= 0.0) {
            return bad("temperature must be non-negative");
        }
        if self.max_in_flight == 0 {
            return bad("max_in_flight must be at least 1");
        }
        match self.kind {
            BackendKind::HttpChat if self.endpoint.as_deref().unwrap_or("").is_empty() => {
                bad("http_chat backend needs an endpoint")
            }
            BackendKind::ScriptedMock if self.endpoint.is_some() => {
                bad("scripted_mock backend takes no endpoint")
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HintResult {
    pub hint_text: String,
    pub input_content: String,
    pub raw_response: String,
}

/// Anything that turns a prompt into raw completion text.
pub trait CompletionBackend: Send + Sync {
    fn complete(&self, prompt: &str) -> Result<String, GatewayError>;
}

/// Hex SHA-256 of the prompt bytes; the key used by mock scripts.
pub fn prompt_fingerprint(prompt: &str) -> String {
    hex::encode(Sha256::digest(prompt.as_bytes()))
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MockRule {
    /// All of these substrings must occur in the prompt.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub contains: Vec<String>,
    /// None of these substrings may occur in the prompt.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub excludes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fingerprint: Option<String>,
    pub response: String,
}

impl MockRule {
    fn matches(&self, prompt: &str, fp: &str) -> bool {
        self.fingerprint.as_deref().is_none_or(|f| f == fp)
            && self.contains.iter().all(|c| prompt.contains(c.as_str()))
            && !self.excludes.iter().any(|c| prompt.contains(c.as_str()))
    }
}

/// Canned responses. Lookup order: first matching rule, then the next unread
/// `sequence` entry, then `default`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MockScript {
    #[serde(default)]
    pub rules: Vec<MockRule>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sequence: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default: Option<String>,
}

impl MockScript {
    pub fn from_json(text: &str) -> Result<Self, GatewayError> {
        let script: MockScript =
            serde_json::from_str(text).map_err(|e| GatewayError::Script(e.to_string()))?;
        for (i, r) in script.rules.iter().enumerate() {
            if r.contains.is_empty() && r.fingerprint.is_none() {
                return Err(GatewayError::Script(format!(
                    "rules[{i}] needs `contains` or `fingerprint`"
                )));
            }
        }
        Ok(script)
    }

    pub fn load_path(path: &Path) -> Result<Self, GatewayError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[derive(Debug)]
pub struct ScriptedMock {
    script: MockScript,
    cursor: AtomicUsize,
}

impl ScriptedMock {
    pub fn new(script: MockScript) -> Self {
        Self {
            script,
            cursor: AtomicUsize::new(0),
        }
    }
}

impl CompletionBackend for ScriptedMock {
    fn complete(&self, prompt: &str) -> Result<String, GatewayError> {
        let fp = prompt_fingerprint(prompt);
        if let Some(rule) = self.script.rules.iter().find(|r| r.matches(prompt, &fp)) {
            return Ok(rule.response.clone());
        }
        if !self.script.sequence.is_empty() {
            let i = self.cursor.fetch_add(1, Ordering::Relaxed);
            if let Some(r) = self.script.sequence.get(i) {
                return Ok(r.clone());
            }
        }
        self.script
            .default
            .clone()
            .ok_or(GatewayError::MockMiss(fp))
    }
}

/// Chat-completions client: one user message in, first choice's content out.
#[derive(Debug)]
pub struct HttpChat {
    client: reqwest::blocking::Client,
    endpoint: String,
    model: String,
    temperature: f64,
    timeout: Duration,
    max_retries: u32,
    backoff: Duration,
    api_key: Option<String>,
}

impl HttpChat {
    pub fn new(cfg: &BackendConfig) -> Result<Self, GatewayError> {
        cfg.validate()?;
        let endpoint = cfg
            .endpoint
            .clone()
            .ok_or_else(|| GatewayError::InvalidConfig("missing endpoint".into()))?;
        let client = reqwest::blocking::Client::builder()
            .timeout(cfg.timeout)
            .build()
            .map_err(|e| GatewayError::InvalidConfig(e.to_string()))?;
        let api_key = cfg
            .api_key_env
            .as_deref()
            .and_then(|var| std::env::var(var).ok())
            .filter(|k| !k.is_empty());
        Ok(Self {
            client,
            endpoint,
            model: cfg.model_name.clone(),
            temperature: cfg.temperature,
            timeout: cfg.timeout,
            max_retries: cfg.max_retries,
            backoff: cfg.backoff,
            api_key,
        })
    }

    fn attempt(&self, prompt: &str) -> Result<String, GatewayError> {
        let body = json!({
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.temperature,
        });
        let mut req = self.client.post(&self.endpoint).json(&body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| self.classify(e))?;
        let status = resp.status();
        let text = resp.text().map_err(|e| self.classify(e))?;
        if status.as_u16() == 429 || status.is_server_error() {
            return Err(GatewayError::Network(format!("HTTP {}", status.as_u16())));
        }
        if !status.is_success() {
            return Err(GatewayError::Status {
                status: status.as_u16(),
                body: text,
            });
        }
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| GatewayError::BadResponse(e.to_string()))?;
        value
            .pointer("/choices/0/message/content")
            .and_then(|c| c.as_str())
            .map(str::to_string)
            .ok_or(GatewayError::BadResponse(text))
    }

    fn classify(&self, e: reqwest::Error) -> GatewayError {
        if e.is_timeout() {
            GatewayError::Timeout(self.timeout)
        } else {
            GatewayError::Network(e.to_string())
        }
    }
}

impl CompletionBackend for HttpChat {
    fn complete(&self, prompt: &str) -> Result<String, GatewayError> {
        let mut attempt = 0u32;
        loop {
            match self.attempt(prompt) {
                Err(e) if e.retryable() && attempt < self.max_retries => {
                    let delay = self.backoff * 2u32.pow(attempt);
                    log::warn!("chat request failed ({e}); retrying in {delay:?}");
                    std::thread::sleep(delay);
                    attempt += 1;
                }
                other => return other,
            }
        }
    }
}

/// Counting semaphore bounding concurrent backend calls.
#[derive(Debug)]
struct InFlight {
    used: Mutex<usize>,
    freed: Condvar,
    limit: usize,
}

impl InFlight {
    fn acquire(&self) -> InFlightGuard<'_> {
        let mut used = self.used.lock().unwrap_or_else(|p| p.into_inner());
        while *used >= self.limit {
            used = self.freed.wait(used).unwrap_or_else(|p| p.into_inner());
        }
        *used += 1;
        InFlightGuard(self)
    }
}

struct InFlightGuard<'a>(&'a InFlight);

impl Drop for InFlightGuard<'_> {
    fn drop(&mut self) {
        let mut used = self.0.used.lock().unwrap_or_else(|p| p.into_inner());
        *used -= 1;
        self.0.freed.notify_one();
    }
}

/// Shareable front door to a backend: bounds in-flight requests and
/// optionally logs every exchange to a trace file.
pub struct Gateway {
    backend: Box<dyn CompletionBackend>,
    in_flight: InFlight,
    trace: Option<Mutex<BufWriter<File>>>,
}

impl std::fmt::Debug for Gateway {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Gateway")
            .field("limit", &self.in_flight.limit)
            .field("trace", &self.trace.is_some())
            .finish()
    }
}

impl Gateway {
    pub fn new(backend: Box<dyn CompletionBackend>, max_in_flight: usize) -> Self {
        Self {
            backend,
            in_flight: InFlight {
                used: Mutex::new(0),
                freed: Condvar::new(),
                limit: max_in_flight.max(1),
            },
            trace: None,
        }
    }

    /// Builds the backend named by `cfg`. A scripted mock needs its script.
    pub fn from_config(cfg: &BackendConfig, script: Option<MockScript>) -> Result<Self, GatewayError> {
        cfg.validate()?;
        let backend: Box<dyn CompletionBackend> = match cfg.kind {
            BackendKind::ScriptedMock => Box::new(ScriptedMock::new(script.ok_or_else(|| {
                GatewayError::InvalidConfig("scripted_mock backend needs a mock script".into())
            })?)),
            BackendKind::HttpChat => Box::new(HttpChat::new(cfg)?),
        };
        let mut gw = Self::new(backend, cfg.max_in_flight);
        if let Some(path) = &cfg.trace_path {
            gw = gw.with_trace(path)?;
        }
        Ok(gw)
    }

    pub fn mock(script: MockScript) -> Self {
        Self::new(Box::new(ScriptedMock::new(script)), DEFAULT_IN_FLIGHT)
    }

    pub fn with_trace(mut self, path: &Path) -> Result<Self, GatewayError> {
        self.trace = Some(Mutex::new(BufWriter::new(File::create(path)?)));
        Ok(self)
    }

    pub fn complete(&self, prompt: &str) -> Result<String, GatewayError> {
        let result = {
            let _slot = self.in_flight.acquire();
            self.backend.complete(prompt)
        };
        if let Some(trace) = &self.trace {
            let entry = match &result {
                Ok(r) => json!({"prompt": prompt, "response": r}),
                Err(e) => json!({"prompt": prompt, "error": e.to_string()}),
            };
            let mut w = trace.lock().unwrap_or_else(|p| p.into_inner());
            let _ = writeln!(w, "{entry}");
            let _ = w.flush();
        }
        result
    }
}

const OPEN_QUOTES: [char; 3] = ['"', '\u{201C}', '\u{201D}'];
const CLOSE_QUOTES: [char; 3] = ['"', '\u{201D}', '\u{201C}'];
const HINT_MARKERS: [&str; 2] = ["hint-text is", "hint text is"];
const INPUT_MARKERS: [&str; 1] = ["input content is"];

fn find_marker(lower: &str, markers: &[&str]) -> Option<(usize, usize)> {
    markers
        .iter()
        .filter_map(|m| lower.find(m).map(|at| (at, at + m.len())))
        .min()
}

/// First quoted span in `raw[from..to]`.
fn quoted_span(raw: &str, from: usize, to: usize) -> Option<&str> {
    let region = &raw[from..to];
    let open = region.find(OPEN_QUOTES)?;
    let open_len = region[open..].chars().next()?.len_utf8();
    let body = &region[open + open_len..];
    let close = body.find(CLOSE_QUOTES)?;
    Some(&body[..close])
}

/// Extracts hint-text and input content from a model answer. Marker order
/// does not matter; straight and curly double quotes are accepted.
pub fn parse_hint_response(raw: &str) -> Result<HintResult, GatewayError> {
    // ASCII lowercasing keeps byte offsets aligned with `raw`.
    let lower = raw.to_ascii_lowercase();
    let (hint_at, hint_end) = find_marker(&lower, &HINT_MARKERS).ok_or(GatewayError::UnparseableResponse)?;
    let input = find_marker(&lower, &INPUT_MARKERS);

    let hint_limit = match input {
        Some((at, _)) if at > hint_at => at,
        _ => raw.len(),
    };
    let hint = quoted_span(raw, hint_end, hint_limit)
        .map(str::trim)
        .filter(|h| !h.is_empty())
        .ok_or(GatewayError::UnparseableResponse)?;

    let input_content = input
        .and_then(|(at, end)| {
            let limit = if hint_at > at { hint_at } else { raw.len() };
            quoted_span(raw, end, limit)
        })
        .unwrap_or("");

    Ok(HintResult {
        hint_text: hint.to_string(),
        input_content: input_content.to_string(),
        raw_response: raw.to_string(),
    })
}

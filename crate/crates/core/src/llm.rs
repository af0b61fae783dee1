//! Chat-completion gateway with a live HTTP backend and a transcript replay
//! backend. Every exchange is recorded in a JSON-lines transcript.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::thread;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const API_KEY_ENV: &str = "GENPLAN_API_KEY";
pub const BASE_URL_ENV: &str = "GENPLAN_BASE_URL";
pub const DEFAULT_BASE_URL: &str = "https://api.openai.com/v1";
pub const DEFAULT_MODEL: &str = "gpt-4o";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

impl Message {
    pub fn system(content: impl Into<String>) -> Self {
        Message { role: Role::System, content: content.into() }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Message { role: Role::User, content: content.into() }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Message { role: Role::Assistant, content: content.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    /// Names the exchange in the transcript (e.g. `code_revision`); not sent.
    pub label: String,
    pub messages: Vec<Message>,
    pub model: String,
    pub temperature: f64,
    pub seed: i64,
    pub max_retries: u32,
}

impl CompletionRequest {
    pub fn new(label: impl Into<String>, model: impl Into<String>, messages: Vec<Message>) -> Self {
        CompletionRequest {
            label: label.into(),
            messages,
            model: model.into(),
            temperature: 0.0,
            seed: 1,
            max_retries: 3,
        }
    }

    pub fn digest(&self) -> String {
        request_digest(&self.model, self.temperature, self.seed, &self.messages)
    }
}

/// SHA-256 over model, temperature, seed and the role-tagged messages.
pub fn request_digest(model: &str, temperature: f64, seed: i64, messages: &[Message]) -> String {
    let canonical = json!({
        "model": model,
        "temperature": temperature,
        "seed": seed,
        "messages": messages.iter().map(|m| [serde_json::to_value(m.role).unwrap(), json!(m.content)]).collect::<Vec<_>>(),
    });
    hex::encode(Sha256::digest(canonical.to_string().as_bytes()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exchange {
    pub label: String,
    pub digest: String,
    pub model: String,
    pub temperature: f64,
    pub seed: i64,
    pub messages: Vec<Message>,
    pub reply: String,
    /// Milliseconds since the Unix epoch.
    pub timestamp_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub usage: Option<Usage>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub exchanges: Vec<Exchange>,
}

impl Transcript {
    pub fn len(&self) -> usize {
        self.exchanges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exchanges.is_empty()
    }

    pub fn count_label(&self, label: &str) -> usize {
        self.exchanges.iter().filter(|e| e.label == label).count()
    }

    pub fn labels(&self) -> Vec<&str> {
        self.exchanges.iter().map(|e| e.label.as_str()).collect()
    }

    pub fn save(&self, path: &Path) -> Result<(), LlmError> {
        let mut f = File::create(path).map_err(|e| LlmError::io(path, e))?;
        for e in &self.exchanges {
            writeln!(f, "{}", serde_json::to_string(e).expect("exchange serializes")).map_err(|e| LlmError::io(path, e))?;
        }
        Ok(())
    }
}

/// Load a JSON-lines transcript, recomputing every digest.
pub fn load_transcript(path: &Path) -> Result<Transcript, LlmError> {
    let f = File::open(path).map_err(|e| LlmError::io(path, e))?;
    let mut exchanges = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| LlmError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let format = |message: String| LlmError::Format { line: i + 1, message };
        let e: Exchange = serde_json::from_str(&line).map_err(|e| format(e.to_string()))?;
        let recomputed = request_digest(&e.model, e.temperature, e.seed, &e.messages);
        if recomputed != e.digest {
            return Err(format(format!("digest {} does not match the recorded request ({recomputed})", e.digest)));
        }
        exchanges.push(e);
    }
    Ok(Transcript { exchanges })
}

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("request failed after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("replay transcript exhausted at exchange {position}")]
    ReplayExhausted { position: usize },
    #[error("replay mismatch at exchange {position} ({label}): expected digest {expected_digest}, got {got_digest}")]
    ReplayMismatch {
        position: usize,
        label: String,
        expected_digest: String,
        got_digest: String,
    },
    #[error("transcript line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("no API key: set {API_KEY_ENV}")]
    MissingApiKey,
}

impl LlmError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        LlmError::Io { path: path.to_path_buf(), source }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    pub content: String,
    pub usage: Option<Usage>,
}

pub trait ChatBackend: Send {
    fn complete(&mut self, request: &CompletionRequest) -> Result<Completion, LlmError>;
}

/// OpenAI-compatible `/chat/completions` client.
pub struct LiveBackend {
    base_url: String,
    api_key: String,
    client: reqwest::blocking::Client,
    backoff: Duration,
}

impl LiveBackend {
    pub fn new(base_url: impl Into<String>, api_key: impl Into<String>) -> Self {
        LiveBackend {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            api_key: api_key.into(),
            client: reqwest::blocking::Client::builder()
                .timeout(Duration::from_secs(600))
                .build()
                .expect("HTTP client"),
            backoff: Duration::from_secs(1),
        }
    }

    /// Base URL and key from the environment.
    pub fn from_env() -> Result<Self, LlmError> {
        let key = std::env::var(API_KEY_ENV).map_err(|_| LlmError::MissingApiKey)?;
        let base = std::env::var(BASE_URL_ENV).unwrap_or_else(|_| DEFAULT_BASE_URL.to_string());
        Ok(LiveBackend::new(base, key))
    }

    /// Delay before the first retry; doubles on each further retry.
    pub fn with_backoff(mut self, base: Duration) -> Self {
        self.backoff = base;
        self
    }

    fn attempt(&self, request: &CompletionRequest) -> Result<Completion, (bool, String)> {
        let body = json!({
            "model": request.model,
            "messages": request.messages,
            "temperature": request.temperature,
            "seed": request.seed,
        });
        let resp = self
            .client
            .post(format!("{}/chat/completions", self.base_url))
            .bearer_auth(&self.api_key)
            .json(&body)
            .send()
            .map_err(|e| (true, e.to_string()))?;
        let status = resp.status();
        if !status.is_success() {
            let retry = status.is_server_error() || status.as_u16() == 429 || status.as_u16() == 408;
            let text = resp.text().unwrap_or_default();
            return Err((retry, format!("HTTP {status}: {}", text.chars().take(500).collect::<String>())));
        }
        let v: serde_json::Value = resp.json().map_err(|e| (true, e.to_string()))?;
        let content = v["choices"][0]["message"]["content"]
            .as_str()
            .ok_or_else(|| (false, format!("response has no message content: {v}")))?
            .to_string();
        let usage = match (v["usage"]["prompt_tokens"].as_u64(), v["usage"]["completion_tokens"].as_u64()) {
            (Some(p), Some(c)) => Some(Usage { prompt_tokens: p, completion_tokens: c }),
            _ => None,
        };
        Ok(Completion { content, usage })
    }
}

impl ChatBackend for LiveBackend {
    fn complete(&mut self, request: &CompletionRequest) -> Result<Completion, LlmError> {
        let mut attempts = 0;
        loop {
            attempts += 1;
            match self.attempt(request) {
                Ok(c) => return Ok(c),
                Err((retry, message)) => {
                    if !retry || attempts > request.max_retries {
                        return Err(LlmError::Transport { attempts, message });
                    }
                    thread::sleep(self.backoff * 2u32.saturating_pow(attempts - 1));
                }
            }
        }
    }
}

/// Returns recorded replies in order.
pub struct ReplayBackend {
    exchanges: Vec<Exchange>,
    position: usize,
    loose: bool,
}

impl ReplayBackend {
    pub fn new(transcript: Transcript) -> Self {
        ReplayBackend { exchanges: transcript.exchanges, position: 0, loose: false }
    }

    /// Accept requests whose digest differs from the recording.
    pub fn loose(mut self, loose: bool) -> Self {
        self.loose = loose;
        self
    }

    pub fn remaining(&self) -> usize {
        self.exchanges.len() - self.position
    }
}

impl ChatBackend for ReplayBackend {
    fn complete(&mut self, request: &CompletionRequest) -> Result<Completion, LlmError> {
        let Some(recorded) = self.exchanges.get(self.position) else {
            return Err(LlmError::ReplayExhausted { position: self.position });
        };
        let got = request.digest();
        if !self.loose && recorded.digest != got {
            return Err(LlmError::ReplayMismatch {
                position: self.position,
                label: request.label.clone(),
                expected_digest: recorded.digest.clone(),
                got_digest: got,
            });
        }
        self.position += 1;
        Ok(Completion { content: recorded.reply.clone(), usage: recorded.usage })
    }
}

/// Replies produced by a closure, for scripted runs and tests.
pub struct ScriptedBackend<F>(pub F);

impl<F> ChatBackend for ScriptedBackend<F>
where
    F: FnMut(&CompletionRequest) -> String + Send,
{
    fn complete(&mut self, request: &CompletionRequest) -> Result<Completion, LlmError> {
        Ok(Completion { content: (self.0)(request), usage: None })
    }
}

/// Front door used by the pipeline: forwards to a backend and records.
pub struct Gateway {
    backend: Box<dyn ChatBackend>,
    transcript: Transcript,
    sink: Option<PathBuf>,
    pub model: String,
    pub temperature: f64,
    pub seed: i64,
    pub max_retries: u32,
}

impl Gateway {
    pub fn new(backend: Box<dyn ChatBackend>) -> Self {
        Gateway {
            backend,
            transcript: Transcript::default(),
            sink: None,
            model: DEFAULT_MODEL.to_string(),
            temperature: 0.0,
            seed: 1,
            max_retries: 3,
        }
    }

    /// Also append every exchange to `path` as it happens (file is truncated).
    pub fn record_to(mut self, path: &Path) -> Result<Self, LlmError> {
        File::create(path).map_err(|e| LlmError::io(path, e))?;
        self.sink = Some(path.to_path_buf());
        Ok(self)
    }

    pub fn request(&self, label: &str, messages: Vec<Message>) -> CompletionRequest {
        CompletionRequest {
            label: label.to_string(),
            messages,
            model: self.model.clone(),
            temperature: self.temperature,
            seed: self.seed,
            max_retries: self.max_retries,
        }
    }

    pub fn complete(&mut self, request: &CompletionRequest) -> Result<String, LlmError> {
        assert!(!request.messages.is_empty(), "completion request without messages");
        assert!(request.temperature >= 0.0, "negative temperature");
        let c = self.backend.complete(request)?;
        let timestamp_ms = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64);
        let exchange = Exchange {
            label: request.label.clone(),
            digest: request.digest(),
            model: request.model.clone(),
            temperature: request.temperature,
            seed: request.seed,
            messages: request.messages.clone(),
            reply: c.content.clone(),
            timestamp_ms,
            usage: c.usage,
        };
        if let Some(path) = &self.sink {
            let mut f = OpenOptions::new().append(true).open(path).map_err(|e| LlmError::io(path, e))?;
            writeln!(f, "{}", serde_json::to_string(&exchange).expect("exchange serializes"))
                .map_err(|e| LlmError::io(path, e))?;
        }
        self.transcript.exchanges.push(exchange);
        Ok(c.content)
    }

    /// Convenience: build the request and complete it.
    pub fn chat(&mut self, label: &str, messages: Vec<Message>) -> Result<String, LlmError> {
        let req = self.request(label, messages);
        self.complete(&req)
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }
}

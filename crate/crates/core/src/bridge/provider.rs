//! Chat-completion providers: OpenAI-compatible HTTP, scripted mocks, and
//! record/replay of transcripts as JSON lines.

use std::collections::VecDeque;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: Role::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self {
            role: Role::Assistant,
            content: content.into(),
        }
    }

    pub fn system(content: impl Into<String>) -> Self {
        Self {
            role: Role::System,
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChatParams {
    pub temperature: f64,
    pub max_output_tokens: u32,
    pub timeout: Duration,
}

impl Default for ChatParams {
    fn default() -> Self {
        Self {
            temperature: 0.0,
            max_output_tokens: 2048,
            timeout: Duration::from_secs(120),
        }
    }
}

/// Transport-level failure reported by a provider.
#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "detail")]
pub enum ProviderError {
    #[error("request timed out: {0}")]
    Timeout(String),
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("request rejected: {0}")]
    Rejected(String),
}

impl ProviderError {
    pub fn is_transient(&self) -> bool {
        matches!(self, ProviderError::Timeout(_) | ProviderError::Transport(_))
    }
}

pub trait ChatProvider: Send + Sync {
    fn complete(&self, messages: &[ChatMessage], params: &ChatParams) -> Result<String, ProviderError>;
}

/// One entry of a provider config file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProviderProfile {
    pub id: String,
    /// `http(s)://...` for live gateways, `mock:<name>` for built-in mocks.
    pub endpoint: String,
    #[serde(default)]
    pub auth_env_var: String,
    pub model_id: String,
    pub context_tokens: u64,
}

impl ProviderProfile {
    pub fn is_live(&self) -> bool {
        self.endpoint.starts_with("http://") || self.endpoint.starts_with("https://")
    }

    pub fn mock_name(&self) -> Option<&str> {
        self.endpoint.strip_prefix("mock:")
    }
}

#[derive(Debug, Error)]
pub enum ProviderConfigError {
    #[error("cannot read provider config: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid provider config: {0}")]
    Invalid(String),
}

/// Reads a JSON array of [`ProviderProfile`].
pub fn load_provider_profiles(path: &Path) -> Result<Vec<ProviderProfile>, ProviderConfigError> {
    let text = std::fs::read_to_string(path)?;
    let profiles: Vec<ProviderProfile> =
        serde_json::from_str(&text).map_err(|e| ProviderConfigError::Invalid(e.to_string()))?;
    for p in &profiles {
        if p.context_tokens == 0 {
            return Err(ProviderConfigError::Invalid(format!("provider {} has zero context_tokens", p.id)));
        }
        if !p.is_live() && p.mock_name().is_none() {
            return Err(ProviderConfigError::Invalid(format!(
                "provider {} endpoint must be http(s):// or mock:<name>",
                p.id
            )));
        }
    }
    let mut ids: Vec<&str> = profiles.iter().map(|p| p.id.as_str()).collect();
    ids.sort_unstable();
    if ids.windows(2).any(|w| w[0] == w[1]) {
        return Err(ProviderConfigError::Invalid("duplicate provider id".into()));
    }
    Ok(profiles)
}

/// OpenAI-compatible `chat/completions` client. The endpoint is the full URL.
pub struct HttpProvider {
    endpoint: String,
    model_id: String,
    auth_env_var: String,
}

impl HttpProvider {
    pub fn new(profile: &ProviderProfile) -> Self {
        Self {
            endpoint: profile.endpoint.clone(),
            model_id: profile.model_id.clone(),
            auth_env_var: profile.auth_env_var.clone(),
        }
    }
}

#[derive(Deserialize)]
struct CompletionResponse {
    choices: Vec<CompletionChoice>,
}

#[derive(Deserialize)]
struct CompletionChoice {
    message: CompletionMessage,
}

#[derive(Deserialize)]
struct CompletionMessage {
    content: Option<String>,
}

impl ChatProvider for HttpProvider {
    fn complete(&self, messages: &[ChatMessage], params: &ChatParams) -> Result<String, ProviderError> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(params.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        let body = serde_json::json!({
            "model": self.model_id,
            "messages": messages,
            "temperature": params.temperature,
            "max_tokens": params.max_output_tokens,
        });
        let mut request = agent.post(&self.endpoint);
        // Keys are read per call and never stored or logged.
        if !self.auth_env_var.is_empty() {
            if let Ok(key) = std::env::var(&self.auth_env_var) {
                request = request.header("Authorization", format!("Bearer {key}"));
            }
        }
        let mut response = request.send_json(&body).map_err(|e| match e {
            ureq::Error::Timeout(t) => ProviderError::Timeout(t.to_string()),
            other => ProviderError::Transport(other.to_string()),
        })?;
        let status = response.status().as_u16();
        match status {
            200..=299 => {}
            401 | 403 | 429 => return Err(ProviderError::Rejected(format!("HTTP {status}"))),
            500..=599 => return Err(ProviderError::Transport(format!("HTTP {status}"))),
            _ => return Err(ProviderError::Rejected(format!("HTTP {status}"))),
        }
        let parsed: CompletionResponse = response
            .body_mut()
            .read_json()
            .map_err(|e| ProviderError::Transport(format!("unreadable completion body: {e}")))?;
        parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| ProviderError::Rejected("completion without content".into()))
    }
}

/// Returns canned outcomes in order; rejects once exhausted.
pub struct ScriptedProvider {
    script: Mutex<VecDeque<Result<String, ProviderError>>>,
}

impl ScriptedProvider {
    pub fn new(script: impl IntoIterator<Item = Result<String, ProviderError>>) -> Self {
        Self {
            script: Mutex::new(script.into_iter().collect()),
        }
    }

    pub fn replies<S: Into<String>>(replies: impl IntoIterator<Item = S>) -> Self {
        Self::new(replies.into_iter().map(|r| Ok(r.into())))
    }
}

impl ChatProvider for ScriptedProvider {
    fn complete(&self, _messages: &[ChatMessage], _params: &ChatParams) -> Result<String, ProviderError> {
        self.script
            .lock()
            .expect("script lock")
            .pop_front()
            .unwrap_or_else(|| Err(ProviderError::Rejected("script exhausted".into())))
    }
}

/// One provider call as stored on disk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TurnRecord {
    pub turn: usize,
    pub model_id: String,
    pub user: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assistant: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ProviderError>,
}

pub fn read_turn_records(path: &Path) -> Result<Vec<TurnRecord>, ProviderConfigError> {
    let file = File::open(path)?;
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: TurnRecord = serde_json::from_str(&line)
            .map_err(|e| ProviderConfigError::Invalid(format!("{}:{}: {e}", path.display(), i + 1)))?;
        records.push(record);
    }
    Ok(records)
}

/// Plays back recorded turns in order, including recorded failures.
pub struct ReplayProvider {
    records: Mutex<VecDeque<TurnRecord>>,
}

impl ReplayProvider {
    pub fn new(records: Vec<TurnRecord>) -> Self {
        Self {
            records: Mutex::new(records.into()),
        }
    }

    pub fn from_file(path: &Path) -> Result<Self, ProviderConfigError> {
        Ok(Self::new(read_turn_records(path)?))
    }
}

impl ChatProvider for ReplayProvider {
    fn complete(&self, messages: &[ChatMessage], _params: &ChatParams) -> Result<String, ProviderError> {
        let record = self
            .records
            .lock()
            .expect("replay lock")
            .pop_front()
            .ok_or_else(|| ProviderError::Rejected("replay exhausted".into()))?;
        if let Some(last) = messages.last() {
            if last.content != record.user {
                tracing::warn!(turn = record.turn, "replayed turn was recorded for a different prompt");
            }
        }
        match (record.assistant, record.error) {
            (_, Some(err)) => Err(err),
            (Some(reply), None) => Ok(reply),
            (None, None) => Err(ProviderError::Rejected(format!("record {} has no outcome", record.turn))),
        }
    }
}

/// Wraps another provider and appends every call to a JSON-lines file.
pub struct RecordingProvider<P> {
    inner: P,
    model_id: String,
    sink: Mutex<(File, usize)>,
}

impl<P: ChatProvider> RecordingProvider<P> {
    /// Truncates `path` and starts a fresh record.
    pub fn create(inner: P, model_id: impl Into<String>, path: &Path) -> std::io::Result<Self> {
        let file = OpenOptions::new().create(true).write(true).truncate(true).open(path)?;
        Ok(Self {
            inner,
            model_id: model_id.into(),
            sink: Mutex::new((file, 0)),
        })
    }
}

impl<P: ChatProvider> ChatProvider for RecordingProvider<P> {
    fn complete(&self, messages: &[ChatMessage], params: &ChatParams) -> Result<String, ProviderError> {
        let result = self.inner.complete(messages, params);
        let mut sink = self.sink.lock().expect("record lock");
        sink.1 += 1;
        let record = TurnRecord {
            turn: sink.1,
            model_id: self.model_id.clone(),
            user: messages.last().map(|m| m.content.clone()).unwrap_or_default(),
            assistant: result.as_ref().ok().cloned(),
            error: result.as_ref().err().cloned(),
        };
        let line = serde_json::to_string(&record).expect("record serializes");
        if let Err(e) = writeln!(sink.0, "{line}").and_then(|_| sink.0.flush()) {
            tracing::error!("failed to append transcript record: {e}");
        }
        result
    }
}

impl<T: ChatProvider + ?Sized> ChatProvider for std::sync::Arc<T> {
    fn complete(&self, messages: &[ChatMessage], params: &ChatParams) -> Result<String, ProviderError> {
        (**self).complete(messages, params)
    }
}

impl<T: ChatProvider + ?Sized> ChatProvider for Box<T> {
    fn complete(&self, messages: &[ChatMessage], params: &ChatParams) -> Result<String, ProviderError> {
        (**self).complete(messages, params)
    }
}

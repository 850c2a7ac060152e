//! Chat-completion access with interchangeable backends.
//!
//! Every backend sees the same [`CompletionRequest`]; a per-trial [`Gateway`]
//! session wraps a shared backend and records one transcript entry per call.

mod http;
pub mod message;
mod replay;
pub mod scripted;
pub mod transcript;

use std::fmt;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use http::HttpBackend;
pub use message::{ChatMessage, MessageError, Part, Role, Stage};
pub use replay::ReplayBackend;
pub use scripted::{FixtureKey, FixtureSet, ScriptedBackend};
pub use transcript::{request_digest, Transcript, TranscriptEntry, TranscriptError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GatewayError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("no fixture for `{0}`")]
    FixtureMissing(String),
    #[error("replay exhausted after {consumed} recorded exchanges")]
    ReplayExhausted { consumed: usize },
    #[error("replay diverged at entry {seq}: {detail}")]
    ReplayMismatch { seq: usize, detail: String },
    #[error("backend configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompletionRequest {
    pub stage: Stage,
    pub subtask: Option<String>,
    /// Generation index within the stage: 0 for the first plan, k for the k-th refinement.
    pub attempt: u32,
    pub format_retry: bool,
    pub messages: Vec<ChatMessage>,
}

pub trait ChatBackend: Send + Sync {
    fn complete(&self, request: &CompletionRequest) -> Result<String, GatewayError>;
    fn name(&self) -> &str;
}

/// One trial's view of a backend. Owns the transcript for that trial.
pub struct Gateway {
    backend: Arc<dyn ChatBackend>,
    transcript: Transcript,
}

impl fmt::Debug for Gateway {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Gateway")
            .field("backend", &self.backend.name())
            .field("entries", &self.transcript.len())
            .finish()
    }
}

impl Gateway {
    pub fn new(backend: Arc<dyn ChatBackend>) -> Self {
        Gateway { backend, transcript: Transcript::new() }
    }

    /// Sends one request. The transcript grows by exactly one entry whether or not it succeeds.
    pub fn complete(&mut self, request: CompletionRequest) -> Result<String, GatewayError> {
        let started = Instant::now();
        let outcome = self.backend.complete(&request);
        let latency_ms = started.elapsed().as_secs_f64() * 1000.0;
        let timestamp_ms = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0);
        let (response, error) = match &outcome {
            Ok(text) => (text.clone(), None),
            Err(e) => (String::new(), Some(e.to_string())),
        };
        self.transcript.push(TranscriptEntry {
            seq: 0,
            stage: request.stage,
            subtask: request.subtask,
            attempt: request.attempt,
            format_retry: request.format_retry,
            request_digest: request_digest(&request.messages),
            request: request.messages,
            response,
            error,
            latency_ms,
            timestamp_ms,
        });
        outcome
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    pub fn into_transcript(self) -> Transcript {
        self.transcript
    }

    pub fn backend_name(&self) -> &str {
        self.backend.name()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendMode {
    Http,
    Scripted,
    Replay,
}

impl BackendMode {
    pub fn parse(text: &str) -> Option<BackendMode> {
        match text.to_ascii_lowercase().as_str() {
            "http" => Some(BackendMode::Http),
            "scripted" => Some(BackendMode::Scripted),
            "replay" => Some(BackendMode::Replay),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    /// Delay before retry i is `backoff_ms[min(i, len-1)]`.
    pub backoff_ms: Vec<u64>,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy { max_attempts: 3, backoff_ms: vec![500, 2000, 8000] }
    }
}

impl RetryPolicy {
    pub fn delay_before_retry(&self, retry: usize) -> u64 {
        match self.backoff_ms.as_slice() {
            [] => 0,
            schedule => schedule[retry.min(schedule.len() - 1)],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendConfig {
    pub mode: BackendMode,
    pub endpoint: Option<String>,
    pub model_name: String,
    /// Name of the environment variable holding the bearer token. The token itself is never stored.
    pub credential_env: String,
    pub retry: RetryPolicy,
    pub timeout_secs: u64,
    /// Fixture file, fixture directory, or the name of a bundled fixture set.
    pub fixtures: Option<String>,
    pub transcript: Option<PathBuf>,
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            mode: BackendMode::Scripted,
            endpoint: None,
            model_name: "gpt-4o".to_string(),
            credential_env: "OPENAI_API_KEY".to_string(),
            retry: RetryPolicy::default(),
            timeout_secs: 120,
            fixtures: Some("golden".to_string()),
            transcript: None,
        }
    }
}

impl BackendConfig {
    pub fn scripted(fixtures: impl Into<String>) -> Self {
        BackendConfig { mode: BackendMode::Scripted, fixtures: Some(fixtures.into()), ..BackendConfig::default() }
    }

    pub fn replay(transcript: impl Into<PathBuf>) -> Self {
        BackendConfig {
            mode: BackendMode::Replay,
            transcript: Some(transcript.into()),
            fixtures: None,
            ..BackendConfig::default()
        }
    }

    /// Checks the per-mode requirements without touching the network or the filesystem.
    pub fn validate(&self) -> Result<(), GatewayError> {
        let missing = |what: &str| Err(GatewayError::Config(format!("{:?} mode requires {what}", self.mode)));
        match self.mode {
            BackendMode::Http if self.endpoint.as_deref().is_none_or(str::is_empty) => missing("an endpoint"),
            BackendMode::Http if self.credential_env.is_empty() => missing("a credential variable name"),
            BackendMode::Scripted if self.fixtures.is_none() => missing("a fixture path"),
            BackendMode::Replay if self.transcript.is_none() => missing("a transcript path"),
            _ if self.retry.max_attempts == 0 => {
                Err(GatewayError::Config("retry.max_attempts must be at least 1".into()))
            }
            _ => Ok(()),
        }
    }

    /// Builds a fresh backend for one task. Scripted fixtures are selected per task name.
    pub fn build(&self, task: &str) -> Result<Arc<dyn ChatBackend>, GatewayError> {
        self.validate()?;
        Ok(match self.mode {
            BackendMode::Http => Arc::new(HttpBackend::from_config(self)?),
            BackendMode::Scripted => {
                let source = self.fixtures.as_deref().unwrap_or_default();
                Arc::new(ScriptedBackend::new(FixtureSet::for_task(source, task)?))
            }
            BackendMode::Replay => {
                let path = self.transcript.as_ref().expect("validated");
                let transcript = Transcript::load(path).map_err(|e| GatewayError::Config(e.to_string()))?;
                Arc::new(ReplayBackend::new(transcript))
            }
        })
    }
}

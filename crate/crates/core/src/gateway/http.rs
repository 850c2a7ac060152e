use std::thread;
use std::time::Duration;

use serde_json::{json, Value};

use super::message::{ChatMessage, Part};
use super::{BackendConfig, ChatBackend, CompletionRequest, GatewayError, RetryPolicy};

/// Chat-completions over HTTP with a bearer token taken from the environment.
#[derive(Debug)]
pub struct HttpBackend {
    client: reqwest::blocking::Client,
    endpoint: String,
    model: String,
    token: String,
    retry: RetryPolicy,
}

enum Attempt {
    Done(String),
    Transient(String),
    Fatal(String),
}

impl HttpBackend {
    pub fn from_config(config: &BackendConfig) -> Result<Self, GatewayError> {
        let endpoint =
            config.endpoint.clone().ok_or_else(|| GatewayError::Config("http mode requires an endpoint".into()))?;
        let token = std::env::var(&config.credential_env)
            .map_err(|_| GatewayError::Config(format!("environment variable {} is not set", config.credential_env)))?;
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs.max(1)))
            .build()
            .map_err(|e| GatewayError::Config(e.to_string()))?;
        Ok(HttpBackend { client, endpoint, model: config.model_name.clone(), token, retry: config.retry.clone() })
    }

    pub fn request_body(&self, messages: &[ChatMessage]) -> Value {
        let messages: Vec<Value> = messages
            .iter()
            .map(|m| {
                let content: Vec<Value> = m.parts.iter().map(wire_part).collect();
                json!({ "role": m.role.as_str(), "content": content })
            })
            .collect();
        json!({ "model": self.model, "messages": messages, "stream": false })
    }

    fn attempt(&self, body: &Value) -> Attempt {
        let sent = self.client.post(&self.endpoint).bearer_auth(&self.token).json(body).send();
        let response = match sent {
            Ok(r) => r,
            Err(e) if e.is_timeout() || e.is_connect() || e.is_request() => return Attempt::Transient(e.to_string()),
            Err(e) => return Attempt::Fatal(e.to_string()),
        };
        let status = response.status();
        let text = match response.text() {
            Ok(t) => t,
            Err(e) => return Attempt::Transient(e.to_string()),
        };
        if status.as_u16() == 429 || status.is_server_error() {
            return Attempt::Transient(format!("HTTP {status}"));
        }
        if !status.is_success() {
            return Attempt::Fatal(format!("HTTP {status}: {}", text.chars().take(200).collect::<String>()));
        }
        match serde_json::from_str::<Value>(&text) {
            Ok(v) => match v.pointer("/choices/0/message/content").and_then(Value::as_str) {
                Some(content) => Attempt::Done(content.to_string()),
                None => Attempt::Fatal("response has no choices[0].message.content".into()),
            },
            Err(e) => Attempt::Fatal(format!("response is not JSON: {e}")),
        }
    }
}

/// Image blobs go out as data URLs; any other blob stays text carrying its base64 payload.
fn wire_part(part: &Part) -> Value {
    match part {
        Part::Text { text } => json!({ "type": "text", "text": text }),
        Part::EncodedBlob { media_type, data } if media_type.starts_with("image/") => {
            json!({ "type": "image_url", "image_url": { "url": format!("data:{media_type};base64,{data}") } })
        }
        Part::EncodedBlob { media_type, data } => {
            json!({ "type": "text", "text": format!("data:{media_type};base64,{data}") })
        }
    }
}

impl ChatBackend for HttpBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<String, GatewayError> {
        let body = self.request_body(&request.messages);
        let mut last = String::new();
        for attempt in 0..self.retry.max_attempts {
            if attempt > 0 {
                thread::sleep(Duration::from_millis(self.retry.delay_before_retry(attempt as usize - 1)));
            }
            match self.attempt(&body) {
                Attempt::Done(text) => return Ok(text),
                Attempt::Fatal(msg) => return Err(GatewayError::Transport(msg)),
                Attempt::Transient(msg) => {
                    tracing::warn!(attempt, error = %msg, "transient chat-completion failure");
                    last = msg;
                }
            }
        }
        Err(GatewayError::Transport(format!("gave up after {} attempts: {last}", self.retry.max_attempts)))
    }

    fn name(&self) -> &str {
        "http"
    }
}

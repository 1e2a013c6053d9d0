//! Chat-completion client.
//!
//! Core code sees one contract: role-tagged messages in, text plus the
//! provider-reported token usage out. Wire shapes of individual providers are
//! handled by the [`Transport`] implementations. Offline runs install a
//! [`MockTransport`] or replay a recorded session.

mod http;
mod mock;
mod record;

use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::Value;

pub use http::HttpTransport;
pub use mock::{install_mock, MockEntry, MockTransport};
pub use record::{RecordedExchange, RecordingTransport, ReplayTransport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provider {
    OpenAi,
    Anthropic,
    #[default]
    Generic,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelBinding {
    pub model_id: String,
    pub endpoint_url: String,
    /// Name of the environment variable holding the API key. `None` sends
    /// no credentials (mock and local endpoints).
    #[serde(default)]
    pub auth_env_var: Option<String>,
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
    /// First backoff delay; doubles on every retry.
    #[serde(default = "default_backoff_ms")]
    pub backoff_ms: u64,
    #[serde(default)]
    pub provider: Provider,
}

fn default_max_retries() -> u32 {
    3
}

fn default_timeout_ms() -> u64 {
    60_000
}

fn default_backoff_ms() -> u64 {
    500
}

impl ModelBinding {
    /// Binding for an in-process transport: no credentials, no backoff sleeps.
    pub fn offline(model_id: &str) -> Self {
        ModelBinding {
            model_id: model_id.to_string(),
            endpoint_url: "mock://".to_string(),
            auth_env_var: None,
            max_retries: default_max_retries(),
            timeout_ms: default_timeout_ms(),
            backoff_ms: 0,
            provider: Provider::Generic,
        }
    }
}

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
    pub fn system(content: impl Into<String>) -> Self {
        ChatMessage { role: Role::System, content: content.into() }
    }

    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage { role: Role::User, content: content.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decoding {
    pub temperature: f64,
    pub max_tokens: u32,
}

impl Decoding {
    /// Temperature 0 with a 2048-token cap.
    pub fn greedy() -> Self {
        Decoding { temperature: 0.0, max_tokens: 2048 }
    }
}

impl Default for Decoding {
    fn default() -> Self {
        Decoding::greedy()
    }
}

/// Request body as sent on the wire. Field order is fixed by the struct.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub max_tokens: u32,
}

pub fn request_body(binding: &ModelBinding, messages: &[ChatMessage], decoding: Decoding) -> String {
    let req = CompletionRequest {
        model: binding.model_id.clone(),
        messages: messages.to_vec(),
        temperature: decoding.temperature,
        max_tokens: decoding.max_tokens,
    };
    serde_json::to_string(&req).expect("request serializes")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletionResult {
    pub text: String,
    pub tokens_in: u64,
    pub tokens_out: u64,
    pub latency_ms: u64,
    /// 1 for a first-try success.
    pub attempt: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TransportError {
    /// Worth retrying: timeouts, connection resets, 429 and 5xx.
    #[error("transient transport failure: {0}")]
    Transient(String),
    #[error("transport failure: {0}")]
    Fatal(String),
    #[error("mock script exhausted")]
    ScriptExhausted,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GatewayError {
    #[error("gave up after {attempts} attempts: {last}")]
    RetriesExhausted { attempts: u32, last: String },
    #[error("environment variable {0} is not set")]
    AuthMissing(String),
    #[error("response has no usable text or usage: {0}")]
    MalformedResponse(String),
    #[error("mock script exhausted")]
    ScriptExhausted,
    #[error("transport failure: {0}")]
    Transport(String),
}

/// Moves one request body to a model endpoint and returns the raw response body.
pub trait Transport: Send + Sync {
    fn send(&self, binding: &ModelBinding, body: &str, api_key: Option<&str>) -> Result<String, TransportError>;
}

/// Text and token usage extracted from a provider response.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizedResponse {
    pub text: String,
    pub tokens_in: u64,
    pub tokens_out: u64,
}

/// Accepts the generic shape (`text`, `usage.input_tokens/output_tokens`),
/// OpenAI chat completions (`choices[0].message.content`,
/// `usage.prompt_tokens/completion_tokens`) and Anthropic messages
/// (`content[*].text`, `usage.input_tokens/output_tokens`).
pub fn normalize_response(body: &str) -> Result<NormalizedResponse, GatewayError> {
    let malformed = |why: &str| GatewayError::MalformedResponse(why.to_string());
    let v: Value = serde_json::from_str(body).map_err(|e| malformed(&e.to_string()))?;
    let text = if let Some(t) = v.get("text").and_then(Value::as_str) {
        t.to_string()
    } else if let Some(t) = v.pointer("/choices/0/message/content").and_then(Value::as_str) {
        t.to_string()
    } else if let Some(blocks) = v.get("content").and_then(Value::as_array) {
        let parts: Vec<&str> = blocks.iter().filter_map(|b| b.get("text").and_then(Value::as_str)).collect();
        if parts.is_empty() {
            return Err(malformed("content has no text blocks"));
        }
        parts.concat()
    } else {
        return Err(malformed("no text field"));
    };
    let usage = v.get("usage").ok_or_else(|| malformed("no usage field"))?;
    let count = |names: [&str; 2]| names.iter().find_map(|n| usage.get(*n).and_then(Value::as_u64));
    let tokens_in = count(["input_tokens", "prompt_tokens"]).ok_or_else(|| malformed("no input token count"))?;
    let tokens_out =
        count(["output_tokens", "completion_tokens"]).ok_or_else(|| malformed("no output token count"))?;
    Ok(NormalizedResponse { text, tokens_in, tokens_out })
}

/// Sends one completion request, retrying transient failures with
/// exponential backoff. Malformed responses are not retried.
pub fn complete(
    transport: &dyn Transport,
    binding: &ModelBinding,
    messages: &[ChatMessage],
    decoding: Decoding,
) -> Result<CompletionResult, GatewayError> {
    let api_key = match &binding.auth_env_var {
        Some(var) => Some(std::env::var(var).map_err(|_| GatewayError::AuthMissing(var.clone()))?),
        None => None,
    };
    let body = request_body(binding, messages, decoding);
    let attempts = binding.max_retries + 1;
    let mut last = String::new();
    for attempt in 1..=attempts {
        if attempt > 1 && binding.backoff_ms > 0 {
            let delay = binding.backoff_ms.saturating_mul(1 << (attempt - 2).min(16));
            thread::sleep(Duration::from_millis(delay));
        }
        let started = Instant::now();
        match transport.send(binding, &body, api_key.as_deref()) {
            Ok(raw) => {
                let r = normalize_response(&raw)?;
                return Ok(CompletionResult {
                    text: r.text,
                    tokens_in: r.tokens_in,
                    tokens_out: r.tokens_out,
                    latency_ms: started.elapsed().as_millis() as u64,
                    attempt,
                });
            }
            Err(TransportError::Transient(why)) => {
                log::warn!("{}: attempt {attempt}/{attempts} failed: {why}", binding.model_id);
                last = why;
            }
            Err(TransportError::Fatal(why)) => return Err(GatewayError::Transport(why)),
            Err(TransportError::ScriptExhausted) => return Err(GatewayError::ScriptExhausted),
        }
    }
    Err(GatewayError::RetriesExhausted { attempts, last })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn msgs() -> Vec<ChatMessage> {
        vec![ChatMessage::system("You control agent0."), ChatMessage::user("state")]
    }

    #[test]
    fn mock_passthrough() {
        let mock = install_mock(vec![MockEntry::reply("noop(agent0)", 120, 8)]);
        let r = complete(&mock, &ModelBinding::offline("gpt-4o-mini"), &msgs(), Decoding::greedy()).unwrap();
        assert_eq!((r.text.as_str(), r.tokens_in, r.tokens_out, r.attempt), ("noop(agent0)", 120, 8, 1));
    }

    #[test]
    fn retries_then_succeeds() {
        let mock = install_mock(vec![
            MockEntry::TransientFailure,
            MockEntry::TransientFailure,
            MockEntry::reply("ok", 1, 1),
        ]);
        let r = complete(&mock, &ModelBinding::offline("m"), &msgs(), Decoding::greedy()).unwrap();
        assert_eq!(r.attempt, 3);
    }

    #[test]
    fn retry_budget_is_enforced() {
        let mock = install_mock(vec![MockEntry::TransientFailure; 5]);
        let mut binding = ModelBinding::offline("m");
        binding.max_retries = 1;
        let err = complete(&mock, &binding, &msgs(), Decoding::greedy()).unwrap_err();
        assert!(matches!(err, GatewayError::RetriesExhausted { attempts: 2, .. }));
        assert_eq!(mock.remaining(), 3);
    }

    #[test]
    fn empty_script_is_exhausted() {
        let mock = install_mock(vec![]);
        let err = complete(&mock, &ModelBinding::offline("m"), &msgs(), Decoding::greedy()).unwrap_err();
        assert_eq!(err, GatewayError::ScriptExhausted);
    }

    #[test]
    fn malformed_entry_surfaces() {
        let mock = install_mock(vec![MockEntry::Malformed]);
        let err = complete(&mock, &ModelBinding::offline("m"), &msgs(), Decoding::greedy()).unwrap_err();
        assert!(matches!(err, GatewayError::MalformedResponse(_)));
    }

    #[test]
    fn missing_auth_is_reported_before_sending() {
        let mock = install_mock(vec![MockEntry::reply("x", 1, 1)]);
        let mut binding = ModelBinding::offline("m");
        binding.auth_env_var = Some("TASKALLOC_TEST_KEY_THAT_IS_NOT_SET".into());
        let err = complete(&mock, &binding, &msgs(), Decoding::greedy()).unwrap_err();
        assert_eq!(err, GatewayError::AuthMissing("TASKALLOC_TEST_KEY_THAT_IS_NOT_SET".into()));
        assert_eq!(mock.remaining(), 1);
    }

    #[test]
    fn greedy_body_fields() {
        let body = request_body(&ModelBinding::offline("gpt-4o"), &msgs(), Decoding::greedy());
        let v: Value = serde_json::from_str(&body).unwrap();
        assert_eq!(v["temperature"], 0.0);
        assert_eq!(v["max_tokens"], 2048);
        assert_eq!(v["model"], "gpt-4o");
        assert_eq!(v["messages"][0]["role"], "system");
        assert_eq!(body, request_body(&ModelBinding::offline("gpt-4o"), &msgs(), Decoding::greedy()));
        assert!(body.starts_with(r#"{"model":"gpt-4o","messages":["#));
    }

    #[test]
    fn provider_shapes_normalize() {
        let openai = r#"{"choices":[{"message":{"role":"assistant","content":"hi"}}],"usage":{"prompt_tokens":5,"completion_tokens":2}}"#;
        let anthropic = r#"{"content":[{"type":"text","text":"h"},{"type":"text","text":"i"}],"usage":{"input_tokens":5,"output_tokens":2}}"#;
        let generic = r#"{"text":"hi","usage":{"input_tokens":5,"output_tokens":2}}"#;
        for body in [openai, anthropic, generic] {
            assert_eq!(
                normalize_response(body).unwrap(),
                NormalizedResponse { text: "hi".into(), tokens_in: 5, tokens_out: 2 }
            );
        }
        assert!(normalize_response(r#"{"text":"hi"}"#).is_err());
        assert!(normalize_response("not json").is_err());
    }
}

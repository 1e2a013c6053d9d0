use std::time::Duration;

use serde_json::{json, Value};

use super::{ModelBinding, Provider, Transport, TransportError};

/// Blocking HTTP transport. The request body is posted as-is for OpenAI and
/// generic endpoints; for Anthropic, system messages move to the top-level
/// `system` field.
#[derive(Debug, Default)]
pub struct HttpTransport {
    client: reqwest::blocking::Client,
}

impl HttpTransport {
    pub fn new() -> Self {
        HttpTransport { client: reqwest::blocking::Client::new() }
    }
}

fn anthropic_body(body: &str) -> Result<String, TransportError> {
    let mut v: Value = serde_json::from_str(body).map_err(|e| TransportError::Fatal(e.to_string()))?;
    let messages = v["messages"].as_array().cloned().unwrap_or_default();
    let (system, rest): (Vec<Value>, Vec<Value>) = messages.into_iter().partition(|m| m["role"] == "system");
    let system: Vec<&str> = system.iter().filter_map(|m| m["content"].as_str()).collect();
    v["messages"] = json!(rest);
    if !system.is_empty() {
        v["system"] = json!(system.join("\n\n"));
    }
    Ok(v.to_string())
}

impl Transport for HttpTransport {
    fn send(&self, binding: &ModelBinding, body: &str, api_key: Option<&str>) -> Result<String, TransportError> {
        let mut req = self
            .client
            .post(&binding.endpoint_url)
            .timeout(Duration::from_millis(binding.timeout_ms))
            .header("content-type", "application/json");
        let payload = match binding.provider {
            Provider::Anthropic => {
                req = req.header("anthropic-version", "2023-06-01");
                if let Some(key) = api_key {
                    req = req.header("x-api-key", key);
                }
                anthropic_body(body)?
            }
            Provider::OpenAi | Provider::Generic => {
                if let Some(key) = api_key {
                    req = req.bearer_auth(key);
                }
                body.to_string()
            }
        };
        let resp = req.body(payload).send().map_err(|e| {
            if e.is_timeout() || e.is_connect() || e.is_request() {
                TransportError::Transient(e.to_string())
            } else {
                TransportError::Fatal(e.to_string())
            }
        })?;
        let status = resp.status();
        let text = resp.text().map_err(|e| TransportError::Transient(e.to_string()))?;
        if status.as_u16() == 429 || status.is_server_error() {
            return Err(TransportError::Transient(format!("HTTP {status}")));
        }
        if !status.is_success() {
            return Err(TransportError::Fatal(format!("HTTP {status}: {text}")));
        }
        Ok(text)
    }
}

use std::collections::VecDeque;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use super::{ModelBinding, Transport, TransportError};

/// One scripted response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MockEntry {
    Reply { text: String, tokens_in: u64, tokens_out: u64 },
    /// A body with no text field.
    Malformed,
    TransientFailure,
}

impl MockEntry {
    pub fn reply(text: &str, tokens_in: u64, tokens_out: u64) -> Self {
        MockEntry::Reply { text: text.to_string(), tokens_in, tokens_out }
    }
}

/// Serves a fixed script in call order and records every request body.
#[derive(Debug, Default)]
pub struct MockTransport {
    script: Mutex<VecDeque<MockEntry>>,
    requests: Mutex<Vec<String>>,
}

pub fn install_mock(script: Vec<MockEntry>) -> MockTransport {
    MockTransport { script: Mutex::new(script.into()), requests: Mutex::new(Vec::new()) }
}

impl MockTransport {
    pub fn remaining(&self) -> usize {
        self.script.lock().expect("mock lock").len()
    }

    pub fn requests(&self) -> Vec<String> {
        self.requests.lock().expect("mock lock").clone()
    }
}

impl Transport for MockTransport {
    fn send(&self, _binding: &ModelBinding, body: &str, _api_key: Option<&str>) -> Result<String, TransportError> {
        // Pop and record under one lock so the script order matches call order.
        let mut script = self.script.lock().expect("mock lock");
        self.requests.lock().expect("mock lock").push(body.to_string());
        match script.pop_front() {
            None => Err(TransportError::ScriptExhausted),
            Some(MockEntry::TransientFailure) => Err(TransportError::Transient("scripted failure".into())),
            Some(MockEntry::Malformed) => Ok(r#"{"usage":{"input_tokens":0,"output_tokens":0}}"#.to_string()),
            Some(MockEntry::Reply { text, tokens_in, tokens_out }) => Ok(serde_json::json!({
                "text": text,
                "usage": {"input_tokens": tokens_in, "output_tokens": tokens_out},
            })
            .to_string()),
        }
    }
}

impl<T: Transport + ?Sized> Transport for Arc<T> {
    fn send(&self, binding: &ModelBinding, body: &str, api_key: Option<&str>) -> Result<String, TransportError> {
        (**self).send(binding, body, api_key)
    }
}

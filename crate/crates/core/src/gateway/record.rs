use std::collections::{BTreeMap, VecDeque};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{ModelBinding, Transport, TransportError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordedExchange {
    pub model_id: String,
    pub request: String,
    pub response: String,
}

/// Passes requests through to another transport and keeps every successful
/// request/response pair.
pub struct RecordingTransport<T> {
    inner: T,
    log: Mutex<Vec<RecordedExchange>>,
}

impl<T: Transport> RecordingTransport<T> {
    pub fn new(inner: T) -> Self {
        RecordingTransport { inner, log: Mutex::new(Vec::new()) }
    }

    pub fn exchanges(&self) -> Vec<RecordedExchange> {
        self.log.lock().expect("recording lock").clone()
    }

    /// JSON-lines session file.
    pub fn to_jsonl(&self) -> String {
        self.exchanges().iter().map(|e| serde_json::to_string(e).expect("exchange serializes") + "\n").collect()
    }
}

impl<T: Transport> Transport for RecordingTransport<T> {
    fn send(&self, binding: &ModelBinding, body: &str, api_key: Option<&str>) -> Result<String, TransportError> {
        let response = self.inner.send(binding, body, api_key)?;
        self.log.lock().expect("recording lock").push(RecordedExchange {
            model_id: binding.model_id.clone(),
            request: body.to_string(),
            response: response.clone(),
        });
        Ok(response)
    }
}

/// Answers from a recorded session, matching on the exact request bytes.
/// Repeated identical requests are answered in recorded order.
#[derive(Debug, Default)]
pub struct ReplayTransport {
    answers: Mutex<BTreeMap<String, VecDeque<String>>>,
}

impl ReplayTransport {
    pub fn new(exchanges: Vec<RecordedExchange>) -> Self {
        let mut answers: BTreeMap<String, VecDeque<String>> = BTreeMap::new();
        for e in exchanges {
            answers.entry(e.request).or_default().push_back(e.response);
        }
        ReplayTransport { answers: Mutex::new(answers) }
    }

    pub fn from_jsonl(text: &str) -> Result<Self, serde_json::Error> {
        let exchanges = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<Result<Vec<RecordedExchange>, _>>()?;
        Ok(ReplayTransport::new(exchanges))
    }
}

impl Transport for ReplayTransport {
    fn send(&self, _binding: &ModelBinding, body: &str, _api_key: Option<&str>) -> Result<String, TransportError> {
        self.answers
            .lock()
            .expect("replay lock")
            .get_mut(body)
            .and_then(VecDeque::pop_front)
            .ok_or_else(|| TransportError::Fatal("request not in recorded session".into()))
    }
}

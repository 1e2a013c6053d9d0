//! Episode traces: one JSON record per step, plus a small header that pins
//! the level, team size and seed so the episode can be re-executed.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{
    load_level, observation_hash, ActionResult, AgentId, JointAction, KitchenAction, KitchenError, KitchenEvent,
    KitchenState, LevelConfig,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub level: LevelConfig,
    pub agents: usize,
    pub seed: u64,
    /// Hash of the observation before the first step.
    pub initial_hash: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub step: u32,
    pub actions: BTreeMap<AgentId, KitchenAction>,
    pub results: BTreeMap<AgentId, ActionResult>,
    pub events: Vec<KitchenEvent>,
    /// Hash of the observation after this step was applied.
    pub observation_hash: String,
}

#[derive(Debug, thiserror::Error)]
pub enum TraceError {
    #[error("trace line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Kitchen(#[from] KitchenError),
    #[error("replay diverged at step {step}: {what}")]
    Mismatch { step: u32, what: String },
}

/// Records steps as they are applied.
#[derive(Debug, Clone)]
pub struct TraceWriter {
    pub meta: TraceMeta,
    pub records: Vec<TraceRecord>,
}

impl TraceWriter {
    pub fn new(initial: &KitchenState) -> Self {
        TraceWriter {
            meta: TraceMeta {
                level: initial.level().clone(),
                agents: initial.agent_count(),
                seed: initial.seed(),
                initial_hash: observation_hash(initial),
            },
            records: Vec::new(),
        }
    }

    pub fn record(
        &mut self,
        before: &KitchenState,
        joint: &JointAction,
        results: &BTreeMap<AgentId, ActionResult>,
        events: &[KitchenEvent],
        after: &KitchenState,
    ) {
        self.records.push(TraceRecord {
            step: before.step_index(),
            actions: joint.clone(),
            results: results.clone(),
            events: events.to_vec(),
            observation_hash: observation_hash(after),
        });
    }

    pub fn meta_json(&self) -> String {
        serde_json::to_string_pretty(&self.meta).expect("trace meta serializes")
    }

    pub fn to_jsonl(&self) -> String {
        to_jsonl(&self.records)
    }
}

pub fn to_jsonl(records: &[TraceRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("trace record serializes"));
        out.push('\n');
    }
    out
}

pub fn from_jsonl(text: &str) -> Result<Vec<TraceRecord>, TraceError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(k, l)| serde_json::from_str(l).map_err(|e| TraceError::Parse { line: k + 1, message: e.to_string() }))
        .collect()
}

pub fn meta_from_json(text: &str) -> Result<TraceMeta, TraceError> {
    serde_json::from_str(text).map_err(|e| TraceError::Parse { line: e.line(), message: e.to_string() })
}

/// Re-executes a trace and checks every result, event and hash. Returns the
/// final state on success.
pub fn replay(meta: &TraceMeta, records: &[TraceRecord]) -> Result<KitchenState, TraceError> {
    let mut state = load_level(&meta.level, meta.agents, meta.seed)?;
    if observation_hash(&state) != meta.initial_hash {
        return Err(TraceError::Mismatch { step: 0, what: "initial observation hash".into() });
    }
    for r in records {
        if r.step != state.step_index() {
            return Err(TraceError::Mismatch {
                step: state.step_index(),
                what: format!("record is numbered {}", r.step),
            });
        }
        let outcome = state.step(&r.actions)?;
        if outcome.per_agent_result != r.results {
            return Err(TraceError::Mismatch { step: r.step, what: "action results".into() });
        }
        if outcome.events != r.events {
            return Err(TraceError::Mismatch { step: r.step, what: "events".into() });
        }
        if observation_hash(&outcome.next_state) != r.observation_hash {
            return Err(TraceError::Mismatch { step: r.step, what: "observation hash".into() });
        }
        state = outcome.next_state;
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::super::levels;
    use super::*;

    #[test]
    fn round_trip_and_replay() {
        let level = levels::builtin("level_1").unwrap();
        let mut state = load_level(&level, 1, 5).unwrap();
        let mut w = TraceWriter::new(&state);
        for text in ["goto(agent0, storage0)", "get(agent0, storage0, salmon)", "noop(agent0)"] {
            let a: KitchenAction = text.parse().unwrap();
            let joint: JointAction = [(a.agent(), a)].into_iter().collect();
            let out = state.step(&joint).unwrap();
            w.record(&state, &joint, &out.per_agent_result, &out.events, &out.next_state);
            state = out.next_state;
        }
        let text = w.to_jsonl();
        let records = from_jsonl(&text).unwrap();
        assert_eq!(to_jsonl(&records), text);
        let meta = meta_from_json(&w.meta_json()).unwrap();
        assert_eq!(replay(&meta, &records).unwrap(), state);

        let mut tampered = records.clone();
        tampered[1].observation_hash = "0".repeat(64);
        assert!(matches!(replay(&meta, &tampered), Err(TraceError::Mismatch { step: 1, .. })));
    }
}

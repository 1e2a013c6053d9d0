use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::gateway::{complete, Decoding, GatewayError, ModelBinding, Transport};
use crate::kitchen::{KitchenAction, KitchenState};
use crate::seed;

use super::oracle::{follow_plan, oracle_joint, scripted_plan};
use super::{prompts, PolicyQuery, ReplanRequest};

/// Token usage of one model call.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallUsage {
    pub model_id: String,
    pub tokens_in: u64,
    pub tokens_out: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicyReply {
    pub text: String,
    /// Absent for scripted policies, which cost nothing.
    pub usage: Option<CallUsage>,
}

impl PolicyReply {
    fn scripted(text: String) -> Self {
        PolicyReply { text, usage: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PolicyError {
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("{0}")]
    Other(String),
}

/// Controls one agent. Used in Individual and Planner modes.
pub trait WorkerPolicy: Send {
    fn model_id(&self) -> &str;
    fn act(&mut self, query: &PolicyQuery, state: &KitchenState) -> Result<PolicyReply, PolicyError>;
}

/// Emits the whole joint action every step.
pub trait OrchestratorPolicy: Send {
    fn model_id(&self) -> &str;
    fn act(&mut self, query: &PolicyQuery, state: &KitchenState) -> Result<PolicyReply, PolicyError>;
}

/// Produces plan text when an event fires.
pub trait PlannerPolicy: Send {
    fn model_id(&self) -> &str;
    fn replan(&mut self, request: &ReplanRequest, state: &KitchenState) -> Result<PolicyReply, PolicyError>;
}

/// Oracle worker. With a plan slice it follows the slice; without one it
/// plays its part of the oracle's joint action.
#[derive(Debug, Clone)]
pub struct ScriptedWorker {
    label: String,
}

impl ScriptedWorker {
    pub fn new() -> Self {
        ScriptedWorker { label: "scripted".to_string() }
    }

    pub fn labelled(label: &str) -> Self {
        ScriptedWorker { label: label.to_string() }
    }

    fn action(query: &PolicyQuery, state: &KitchenState) -> KitchenAction {
        let agent = query.agent.expect("worker queries name an agent");
        match &query.directives {
            Some(directives) => follow_plan(state, agent, directives),
            None => oracle_joint(state).remove(&agent).expect("oracle covers every agent"),
        }
    }
}

impl Default for ScriptedWorker {
    fn default() -> Self {
        Self::new()
    }
}

impl WorkerPolicy for ScriptedWorker {
    fn model_id(&self) -> &str {
        &self.label
    }

    fn act(&mut self, query: &PolicyQuery, state: &KitchenState) -> Result<PolicyReply, PolicyError> {
        Ok(PolicyReply::scripted(Self::action(query, state).to_string()))
    }
}

/// Oracle worker that replies with unparseable text at a fixed rate.
#[derive(Debug, Clone)]
pub struct FaultyWorker {
    label: String,
    failure_rate: f64,
    rng: ChaCha8Rng,
}

pub const FUMBLE_TEXT: &str = "I am not sure what to do next.";

impl FaultyWorker {
    pub fn new(label: &str, failure_rate: f64, seed: u64) -> Self {
        FaultyWorker { label: label.to_string(), failure_rate: failure_rate.clamp(0.0, 1.0), rng: seed::rng(seed) }
    }
}

impl WorkerPolicy for FaultyWorker {
    fn model_id(&self) -> &str {
        &self.label
    }

    fn act(&mut self, query: &PolicyQuery, state: &KitchenState) -> Result<PolicyReply, PolicyError> {
        if self.rng.gen_bool(self.failure_rate) {
            return Ok(PolicyReply::scripted(FUMBLE_TEXT.to_string()));
        }
        Ok(PolicyReply::scripted(ScriptedWorker::action(query, state).to_string()))
    }
}

#[derive(Debug, Clone, Default)]
pub struct ScriptedOrchestrator;

impl OrchestratorPolicy for ScriptedOrchestrator {
    fn model_id(&self) -> &str {
        "scripted"
    }

    fn act(&mut self, _query: &PolicyQuery, state: &KitchenState) -> Result<PolicyReply, PolicyError> {
        let lines: Vec<String> = oracle_joint(state).values().map(ToString::to_string).collect();
        Ok(PolicyReply::scripted(lines.join("\n")))
    }
}

/// Deals recipe steps round-robin. When success rates are supplied, workers
/// below `min_success_rate` are left idle unless that would idle everyone.
#[derive(Debug, Clone)]
pub struct ScriptedPlanner {
    pub min_success_rate: f64,
}

impl Default for ScriptedPlanner {
    fn default() -> Self {
        ScriptedPlanner { min_success_rate: 0.5 }
    }
}

impl PlannerPolicy for ScriptedPlanner {
    fn model_id(&self) -> &str {
        "scripted"
    }

    fn replan(&mut self, request: &ReplanRequest, state: &KitchenState) -> Result<PolicyReply, PolicyError> {
        let roster: Vec<_> = request.roster.iter().map(|r| r.agent).collect();
        let mut workers: Vec<_> = request
            .roster
            .iter()
            .filter(|r| r.success_rate.is_none_or(|rate| rate >= self.min_success_rate))
            .map(|r| r.agent)
            .collect();
        if workers.is_empty() {
            workers = roster.clone();
        }
        let plan = scripted_plan(state, &roster, &workers, request.step, request.events.clone());
        Ok(PolicyReply::scripted(plan.to_text()))
    }
}

/// Any role backed by a chat-completion endpoint.
#[derive(Clone)]
pub struct ModelPolicy {
    transport: Arc<dyn Transport>,
    binding: ModelBinding,
    decoding: Decoding,
}

impl ModelPolicy {
    pub fn new(transport: Arc<dyn Transport>, binding: ModelBinding, decoding: Decoding) -> Self {
        ModelPolicy { transport, binding, decoding }
    }

    fn call(&self, messages: &[crate::gateway::ChatMessage]) -> Result<PolicyReply, PolicyError> {
        let r = complete(self.transport.as_ref(), &self.binding, messages, self.decoding)?;
        Ok(PolicyReply {
            text: r.text,
            usage: Some(CallUsage {
                model_id: self.binding.model_id.clone(),
                tokens_in: r.tokens_in,
                tokens_out: r.tokens_out,
            }),
        })
    }
}

impl WorkerPolicy for ModelPolicy {
    fn model_id(&self) -> &str {
        &self.binding.model_id
    }

    fn act(&mut self, query: &PolicyQuery, state: &KitchenState) -> Result<PolicyReply, PolicyError> {
        self.call(&prompts::worker_messages(query, state.level()))
    }
}

impl OrchestratorPolicy for ModelPolicy {
    fn model_id(&self) -> &str {
        &self.binding.model_id
    }

    fn act(&mut self, query: &PolicyQuery, state: &KitchenState) -> Result<PolicyReply, PolicyError> {
        self.call(&prompts::orchestrator_messages(query, state.level()))
    }
}

impl PlannerPolicy for ModelPolicy {
    fn model_id(&self) -> &str {
        &self.binding.model_id
    }

    fn replan(&mut self, request: &ReplanRequest, _state: &KitchenState) -> Result<PolicyReply, PolicyError> {
        self.call(&prompts::planner_messages(&request.prompt))
    }
}

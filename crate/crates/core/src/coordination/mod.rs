//! Control topologies over the kitchen: every agent deciding for itself
//! (Individual), one controller emitting the joint action (Orchestrator), or
//! a planner that splits the work whenever an order event fires and workers
//! that act on their slice (Planner).
//!
//! Policies answer in text. Replies are parsed into actions here; a reply
//! that cannot be parsed, or a call that fails, turns into a logged `noop`.

mod episode;
pub mod oracle;
mod parse;
mod plan;
mod policy;
pub mod prompts;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::kitchen::{AgentId, KitchenAction, KitchenEvent};

pub use episode::{
    run_episode, CoordinationError, DecisionRecord, EpisodeConfig, EpisodeReport, FallbackNote, PlanRecord,
    PolicyBindings, PolicyCallCounts,
};
pub use parse::{parse_action, parse_joint, RawDecision};
pub use plan::{parse_plan, Directive, Plan};
pub use policy::{
    CallUsage, FaultyWorker, ModelPolicy, OrchestratorPolicy, PlannerPolicy, PolicyError, PolicyReply,
    ScriptedOrchestrator, ScriptedPlanner, ScriptedWorker, WorkerPolicy, FUMBLE_TEXT,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControllerMode {
    Individual,
    Orchestrator,
    Planner,
}

impl ControllerMode {
    pub const ALL: [ControllerMode; 3] =
        [ControllerMode::Individual, ControllerMode::Orchestrator, ControllerMode::Planner];
}

impl fmt::Display for ControllerMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ControllerMode::Individual => "individual",
            ControllerMode::Orchestrator => "orchestrator",
            ControllerMode::Planner => "planner",
        })
    }
}

impl FromStr for ControllerMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ControllerMode::ALL
            .into_iter()
            .find(|m| m.to_string().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown mode {s:?} (expected individual, orchestrator or planner)"))
    }
}

/// Whether the planner is told how reliable each worker has been.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CapabilityMode {
    #[default]
    OnTheFly,
    Informed,
}

impl fmt::Display for CapabilityMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CapabilityMode::OnTheFly => "on_the_fly",
            CapabilityMode::Informed => "informed",
        })
    }
}

/// What a policy is shown for one decision.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicyQuery {
    pub step: u32,
    /// The agent being asked; `None` for the orchestrator.
    pub agent: Option<AgentId>,
    pub roster: Vec<AgentId>,
    /// Exactly the rendered observation.
    pub observation: String,
    pub plan_excerpt: Option<String>,
    /// This agent's plan slice, for workers that can use it directly.
    pub directives: Option<Vec<Directive>>,
    pub legal_action_hint: Option<Vec<KitchenAction>>,
}

/// A roster line as the planner sees it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RosterEntry {
    pub agent: AgentId,
    pub model_id: String,
    /// Only filled in Informed mode.
    pub success_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplanRequest {
    pub step: u32,
    pub observation: String,
    pub events: Vec<KitchenEvent>,
    pub prior: Option<Plan>,
    pub roster: Vec<RosterEntry>,
    pub capability_block: Option<String>,
    /// The complete user prompt, built from the fields above.
    pub prompt: String,
}

//! A deterministic cooperative-cooking environment.
//!
//! Agents move between storage shelves, cooking tools and serving tables,
//! carry one item at a time, load tools with ingredients, activate them, and
//! serve finished dishes against timed orders. All randomness (which dish the
//! next order asks for) comes from the episode seed.

mod action;
mod level;
pub mod levels;
mod multiset;
mod render;
mod state;
pub mod trace;

pub use action::{ActionKind, AgentId, KitchenAction, ParseActionError};
pub use level::{LevelConfig, LocationKind, LocationSpec, OrderSchedule, Recipe, RecipeStep};
pub use multiset::Multiset;
pub use render::{observation_hash, render_observation};
pub use state::{
    load_level, ActionResult, AgentState, DishOrder, FailReason, ItemFlow, JointAction, KitchenEvent,
    KitchenState, LocationState, OrderCounters, Processing, StepOutcome, MAX_AGENTS,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum KitchenError {
    #[error("malformed level config: {0}")]
    MalformedConfig(String),
    #[error("agent count {0} outside 1..={max}", max = MAX_AGENTS)]
    BadAgentCount(usize),
    #[error("unknown agent {0}")]
    UnknownAgent(String),
    #[error("unknown location {0}")]
    UnknownLocation(String),
    #[error("no action given for {0}")]
    MissingAction(AgentId),
    #[error("action keyed under {key} is addressed to {actual}")]
    MisaddressedAction { key: AgentId, actual: AgentId },
    #[error("episode is over after {0} steps")]
    EpisodeOver(u32),
}

//! Prompt text for model-backed roles.

use crate::gateway::ChatMessage;
use crate::kitchen::{AgentId, KitchenEvent, LevelConfig};

use super::plan::Plan;
use super::PolicyQuery;

pub const ACTION_RULES: &str = "\
Actions (exactly one per agent per step):
- goto(agentN, location): move to a location
- get(agentN, location, item): pick up one item; hands must be empty
- put(agentN, location): put down what you hold; a finished dish put on a serving table fulfils a matching order
- activate(agentN, location): start a cooking tool whose contents exactly match a recipe step
- noop(agentN): do nothing this step
";

pub fn recipe_book(level: &LevelConfig) -> String {
    let mut out = String::from("Recipes:\n");
    for r in &level.recipes {
        let steps: Vec<String> = r
            .steps
            .iter()
            .map(|s| {
                let inputs: Vec<&str> = s.inputs.items().collect();
                format!("{}[{}] -> {} ({} steps)", s.tool, inputs.join(", "), s.output, s.cook_steps)
            })
            .collect();
        out.push_str(&format!("- {}: {}\n", r.dish, steps.join("; ")));
    }
    out
}

pub fn worker_messages(query: &PolicyQuery, level: &LevelConfig) -> Vec<ChatMessage> {
    let agent = query.agent.expect("worker queries name an agent");
    let system = format!(
        "You control {agent} in a cooperative kitchen game. Complete dish orders before they expire.\n{ACTION_RULES}{}",
        recipe_book(level)
    );
    let mut user = format!("{}\n", query.observation);
    if let Some(excerpt) = &query.plan_excerpt {
        user.push_str(&format!("Plan from the planner:\n{excerpt}\n"));
    }
    if let Some(legal) = &query.legal_action_hint {
        let list: Vec<String> = legal.iter().map(ToString::to_string).collect();
        user.push_str(&format!("Actions that would succeed now: {}\n", list.join(", ")));
    }
    user.push_str(&format!("Reply with exactly one action for {agent}."));
    vec![ChatMessage::system(system), ChatMessage::user(user)]
}

pub fn orchestrator_messages(query: &PolicyQuery, level: &LevelConfig) -> Vec<ChatMessage> {
    let names: Vec<String> = query.roster.iter().map(ToString::to_string).collect();
    let system = format!(
        "You coordinate every agent in a cooperative kitchen game. Complete dish orders before they expire.\n{ACTION_RULES}{}",
        recipe_book(level)
    );
    let user = format!(
        "{}\nReply with one action for each of {}, one per line.",
        query.observation,
        names.join(", ")
    );
    vec![ChatMessage::system(system), ChatMessage::user(user)]
}

pub const PLANNER_SYSTEM: &str = "You are the planner for a team of kitchen agents. You do not act yourself; you split the \
outstanding recipe steps between the workers. Each worker only sees its own tasks.";

/// Full planner prompt. The capability block is included only when given.
pub fn planner_prompt(
    observation: &str,
    level: &LevelConfig,
    events: &[KitchenEvent],
    prior: Option<&Plan>,
    roster: &[(AgentId, String)],
    capability_block: Option<&str>,
) -> String {
    let mut out = format!("{observation}\n{}\nEvents since the last plan:\n", recipe_book(level));
    if events.is_empty() {
        out.push_str("- none\n");
    }
    for e in events {
        out.push_str(&format!("- {}\n", e.describe()));
    }
    out.push_str("\nPrevious plan:\n");
    match prior {
        Some(p) => out.push_str(&p.to_text()),
        None => out.push_str("None\n"),
    }
    out.push_str("\nWorkers:\n");
    for (agent, model) in roster {
        out.push_str(&format!("- {agent} ({model})\n"));
    }
    if let Some(block) = capability_block {
        out.push('\n');
        out.push_str(block);
    }
    out.push_str(
        "\nAssign tasks, one per line, as `agentK: order N <dish> step S` (the last step includes serving) \
or `agentK: idle`.\n",
    );
    out
}

pub fn planner_messages(prompt: &str) -> Vec<ChatMessage> {
    vec![ChatMessage::system(PLANNER_SYSTEM), ChatMessage::user(prompt)]
}

use std::collections::BTreeMap;
use std::fmt;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::kitchen::{AgentId, KitchenEvent, LevelConfig};

/// One unit of work handed to a worker. The structured fields are hints;
/// `text` is what a model-backed worker reads.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Directive {
    pub text: String,
    pub order: Option<u32>,
    pub dish: Option<String>,
    /// Recipe step index. The last step also covers serving the dish.
    pub step: Option<usize>,
}

impl Directive {
    pub fn idle() -> Self {
        Directive { text: "idle".to_string(), order: None, dish: None, step: None }
    }

    pub fn recipe_step(order: u32, dish: &str, step: usize) -> Self {
        Directive {
            text: format!("order {order} {dish} step {step}"),
            order: Some(order),
            dish: Some(dish.to_string()),
            step: Some(step),
        }
    }

    pub fn is_idle(&self) -> bool {
        self.order.is_none() && self.dish.is_none() && self.step.is_none()
    }
}

impl fmt::Display for Directive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plan {
    pub created_at: u32,
    pub trigger_events: Vec<KitchenEvent>,
    /// Every agent has an entry; an idle agent has a single idle directive.
    pub directives: BTreeMap<AgentId, Vec<Directive>>,
}

impl Plan {
    pub fn idle(roster: &[AgentId], created_at: u32, trigger_events: Vec<KitchenEvent>) -> Self {
        Plan {
            created_at,
            trigger_events,
            directives: roster.iter().map(|a| (*a, vec![Directive::idle()])).collect(),
        }
    }

    pub fn for_agent(&self, agent: AgentId) -> &[Directive] {
        self.directives.get(&agent).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Canonical text form, one `agentK: directive` line each.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (agent, list) in &self.directives {
            for d in list {
                out.push_str(&format!("{agent}: {d}\n"));
            }
        }
        out
    }

    /// What a single worker is shown: its own directives plus a one-line
    /// summary of everyone's load.
    pub fn excerpt(&self, agent: AgentId) -> String {
        let mut out = format!("Your tasks ({agent}):\n");
        for d in self.for_agent(agent) {
            out.push_str(&format!("- {d}\n"));
        }
        let summary: Vec<String> = self
            .directives
            .iter()
            .map(|(a, list)| {
                let n = list.iter().filter(|d| !d.is_idle()).count();
                if n == 0 {
                    format!("{a} idle")
                } else {
                    format!("{a} {n} task(s)")
                }
            })
            .collect();
        out.push_str(&format!("Team plan: {}\n", summary.join(", ")));
        out
    }

    /// Ensures every roster agent has an entry.
    fn fill_idle(&mut self, roster: &[AgentId]) {
        for a in roster {
            let list = self.directives.entry(*a).or_default();
            if list.is_empty() {
                list.push(Directive::idle());
            }
        }
    }
}

fn line_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?im)^\W*agent\s*(\d+)\s*[:\-]\s*(.+?)\s*$").expect("valid regex"))
}

fn number_after(text: &str, word: &str) -> Option<u64> {
    let re = Regex::new(&format!(r"(?i)\b{word}\s*#?\s*(\d+)")).expect("valid regex");
    re.captures(text).and_then(|c| c[1].parse().ok())
}

/// Reads `agentK: ...` lines into a plan. Dish names are recognized from the
/// level's recipes, `order N` and `step N` from the text. Returns `None`
/// when no line names a roster agent.
pub fn parse_plan(
    text: &str,
    roster: &[AgentId],
    level: &LevelConfig,
    created_at: u32,
    trigger_events: Vec<KitchenEvent>,
) -> Option<Plan> {
    let mut directives: BTreeMap<AgentId, Vec<Directive>> = BTreeMap::new();
    for c in line_pattern().captures_iter(text) {
        let Ok(k) = c[1].parse::<usize>() else { continue };
        let agent = AgentId(k);
        if !roster.contains(&agent) {
            continue;
        }
        let body = c[2].trim();
        let lower = body.to_ascii_lowercase();
        let dish = level
            .recipes
            .iter()
            .map(|r| r.dish.as_str())
            .find(|d| lower.contains(&d.to_ascii_lowercase()))
            .map(str::to_string);
        let order = number_after(body, "order").and_then(|n| u32::try_from(n).ok());
        let step = number_after(body, "step").and_then(|n| usize::try_from(n).ok());
        let d = if dish.is_none() && order.is_none() && step.is_none() {
            Directive::idle()
        } else {
            Directive { text: body.to_string(), order, dish, step }
        };
        directives.entry(agent).or_default().push(d);
    }
    if directives.is_empty() {
        return None;
    }
    for list in directives.values_mut() {
        if list.len() > 1 {
            list.retain(|d| !d.is_idle());
            if list.is_empty() {
                list.push(Directive::idle());
            }
        }
    }
    let mut plan = Plan { created_at, trigger_events, directives };
    plan.fill_idle(roster);
    Some(plan)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kitchen::levels;

    #[test]
    fn text_round_trip() {
        let level = levels::builtin("level_2").unwrap();
        let roster = [AgentId(0), AgentId(1), AgentId(2)];
        let mut plan = Plan::idle(&roster, 4, vec![]);
        plan.directives.insert(AgentId(0), vec![Directive::recipe_step(3, "tunaSoup", 0), Directive::recipe_step(4, "salmonMeatcake", 0)]);
        plan.directives.insert(AgentId(1), vec![Directive::recipe_step(3, "tunaSoup", 1)]);
        let parsed = parse_plan(&plan.to_text(), &roster, &level, 4, vec![]).unwrap();
        assert_eq!(parsed, plan);
    }

    #[test]
    fn free_text_plans() {
        let level = levels::builtin("level_1").unwrap();
        let roster = [AgentId(0), AgentId(1)];
        let text = "Here is the plan:\n- Agent0: blend the salmon for SalmonMeatcake (order #2, step 0)\n";
        let plan = parse_plan(text, &roster, &level, 0, vec![]).unwrap();
        let d = &plan.for_agent(AgentId(0))[0];
        assert_eq!((d.order, d.dish.as_deref(), d.step), (Some(2), Some("salmonMeatcake"), Some(0)));
        assert!(plan.for_agent(AgentId(1))[0].is_idle());
        assert!(parse_plan("no idea", &roster, &level, 0, vec![]).is_none());
        assert!(parse_plan("agent7: order 1", &roster, &level, 0, vec![]).is_none());
    }

    #[test]
    fn excerpt_shows_own_slice() {
        let roster = [AgentId(0), AgentId(1)];
        let mut plan = Plan::idle(&roster, 0, vec![]);
        plan.directives.insert(AgentId(1), vec![Directive::recipe_step(0, "salmonMeatcake", 0)]);
        let e = plan.excerpt(AgentId(1));
        assert!(e.contains("- order 0 salmonMeatcake step 0"));
        assert!(e.contains("Team plan: agent0 idle, agent1 1 task(s)"));
    }
}

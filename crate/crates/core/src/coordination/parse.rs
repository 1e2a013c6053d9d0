use std::collections::BTreeMap;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::kitchen::{AgentId, KitchenAction};

/// A policy's raw reply and what could be read out of it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawDecision {
    pub raw_text: String,
    pub parsed: Option<KitchenAction>,
    pub parse_ok: bool,
}

impl RawDecision {
    pub fn failed(raw_text: &str) -> Self {
        RawDecision { raw_text: raw_text.to_string(), parsed: None, parse_ok: false }
    }

    fn ok(raw_text: &str, action: KitchenAction) -> Self {
        RawDecision { raw_text: raw_text.to_string(), parsed: Some(action), parse_ok: true }
    }
}

fn action_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)\b(goto|get|put|activate|noop)\s*\(([^()]*)\)").expect("valid regex"))
}

fn checked(
    verb: &str,
    args: &str,
    roster: &[AgentId],
    locations: &[String],
) -> Option<KitchenAction> {
    let args: Vec<&str> = args.split(',').map(str::trim).collect();
    let action = KitchenAction::from_parts(verb, &args).ok()?;
    if !roster.contains(&action.agent()) {
        return None;
    }
    if let Some(loc) = action.location() {
        if !locations.iter().any(|l| l == loc) {
            return None;
        }
    }
    Some(action)
}

/// Reads one action from free text. The last `verb(args)` expression wins;
/// it must name a roster agent and, where it takes one, a known location.
pub fn parse_action(raw: &str, roster: &[AgentId], locations: &[String]) -> RawDecision {
    match action_pattern().captures_iter(raw).last() {
        Some(c) => match checked(&c[1], &c[2], roster, locations) {
            Some(action) => RawDecision::ok(raw, action),
            None => RawDecision::failed(raw),
        },
        None => RawDecision::failed(raw),
    }
}

/// Reads one action per roster agent from a central controller's reply. For
/// each agent the last well-formed expression addressed to it is used;
/// agents with none get a failed decision.
pub fn parse_joint(raw: &str, roster: &[AgentId], locations: &[String]) -> BTreeMap<AgentId, RawDecision> {
    let mut found: BTreeMap<AgentId, KitchenAction> = BTreeMap::new();
    for c in action_pattern().captures_iter(raw) {
        if let Some(action) = checked(&c[1], &c[2], roster, locations) {
            found.insert(action.agent(), action);
        }
    }
    roster
        .iter()
        .map(|a| {
            let d = match found.remove(a) {
                Some(action) => RawDecision::ok(raw, action),
                None => RawDecision::failed(raw),
            };
            (*a, d)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn roster() -> Vec<AgentId> {
        vec![AgentId(0), AgentId(1)]
    }

    fn locations() -> Vec<String> {
        ["storage0", "servingtable0", "blender0"].map(String::from).to_vec()
    }

    #[test]
    fn canonical_and_prose() {
        let d = parse_action("goto(agent0, blender0)", &roster(), &locations());
        assert_eq!(d.parsed, Some(KitchenAction::goto(AgentId(0), "blender0")));
        let d = parse_action("I think agent1 should get(agent1, storage0, salmon)", &roster(), &locations());
        assert_eq!(d.parsed, Some(KitchenAction::get(AgentId(1), "storage0", "salmon")));
        let d = parse_action("first goto(agent0, storage0) then PUT(agent0, blender0).", &roster(), &locations());
        assert_eq!(d.parsed, Some(KitchenAction::put(AgentId(0), "blender0")));
    }

    #[test]
    fn rejects_unknown_things() {
        for text in ["fly(agent0, moon)", "goto(agent0, moon)", "goto(agent5, storage0)", "", "noop"] {
            let d = parse_action(text, &roster(), &locations());
            assert!(!d.parse_ok && d.parsed.is_none(), "{text}");
        }
    }

    #[test]
    fn joint_parsing() {
        let text = "agent0: goto(agent0, storage0)\nagent1: fly(agent1)\n";
        let j = parse_joint(text, &roster(), &locations());
        assert!(j[&AgentId(0)].parse_ok);
        assert!(!j[&AgentId(1)].parse_ok);
    }
}

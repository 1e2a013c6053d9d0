use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Agents are numbered from zero and named `agent0`, `agent1`, ...
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AgentId(pub usize);

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "agent{}", self.0)
    }
}

impl FromStr for AgentId {
    type Err = ParseActionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let digits = s
            .get(..5)
            .filter(|p| p.eq_ignore_ascii_case("agent"))
            .map(|_| &s[5..])
            .ok_or_else(|| ParseActionError(format!("not an agent id: {s:?}")))?;
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(ParseActionError(format!("not an agent id: {s:?}")));
        }
        digits.parse().map(AgentId).map_err(|_| ParseActionError(format!("not an agent id: {s:?}")))
    }
}

impl Serialize for AgentId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for AgentId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum KitchenAction {
    Goto { agent: AgentId, location: String },
    Get { agent: AgentId, location: String, item: String },
    Put { agent: AgentId, location: String },
    Activate { agent: AgentId, location: String },
    Noop { agent: AgentId },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActionKind {
    Goto,
    Get,
    Put,
    Activate,
    Noop,
}

impl ActionKind {
    pub const ALL: [ActionKind; 5] =
        [ActionKind::Goto, ActionKind::Get, ActionKind::Put, ActionKind::Activate, ActionKind::Noop];

    pub fn name(self) -> &'static str {
        match self {
            ActionKind::Goto => "goto",
            ActionKind::Get => "get",
            ActionKind::Put => "put",
            ActionKind::Activate => "activate",
            ActionKind::Noop => "noop",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        ActionKind::ALL.into_iter().find(|k| k.name().eq_ignore_ascii_case(name))
    }
}

impl KitchenAction {
    pub fn agent(&self) -> AgentId {
        match self {
            KitchenAction::Goto { agent, .. }
            | KitchenAction::Get { agent, .. }
            | KitchenAction::Put { agent, .. }
            | KitchenAction::Activate { agent, .. }
            | KitchenAction::Noop { agent } => *agent,
        }
    }

    pub fn kind(&self) -> ActionKind {
        match self {
            KitchenAction::Goto { .. } => ActionKind::Goto,
            KitchenAction::Get { .. } => ActionKind::Get,
            KitchenAction::Put { .. } => ActionKind::Put,
            KitchenAction::Activate { .. } => ActionKind::Activate,
            KitchenAction::Noop { .. } => ActionKind::Noop,
        }
    }

    pub fn location(&self) -> Option<&str> {
        match self {
            KitchenAction::Goto { location, .. }
            | KitchenAction::Get { location, .. }
            | KitchenAction::Put { location, .. }
            | KitchenAction::Activate { location, .. } => Some(location),
            KitchenAction::Noop { .. } => None,
        }
    }

    pub fn noop(agent: AgentId) -> Self {
        KitchenAction::Noop { agent }
    }

    pub fn goto(agent: AgentId, location: &str) -> Self {
        KitchenAction::Goto { agent, location: location.to_string() }
    }

    pub fn get(agent: AgentId, location: &str, item: &str) -> Self {
        KitchenAction::Get { agent, location: location.to_string(), item: item.to_string() }
    }

    pub fn put(agent: AgentId, location: &str) -> Self {
        KitchenAction::Put { agent, location: location.to_string() }
    }

    pub fn activate(agent: AgentId, location: &str) -> Self {
        KitchenAction::Activate { agent, location: location.to_string() }
    }

    /// Builds an action from a verb and its argument list as written in
    /// `verb(arg, ...)`. `noop` accepts a trailing location argument, which
    /// is ignored.
    pub fn from_parts(verb: &str, args: &[&str]) -> Result<Self, ParseActionError> {
        let kind = ActionKind::from_name(verb).ok_or_else(|| ParseActionError(format!("unknown verb {verb:?}")))?;
        let arity_error = || ParseActionError(format!("{} takes a different number of arguments", kind.name()));
        if args.iter().any(|a| a.is_empty()) {
            return Err(ParseActionError("empty argument".into()));
        }
        let agent: AgentId = args.first().ok_or_else(arity_error)?.parse()?;
        Ok(match (kind, args.len()) {
            (ActionKind::Goto, 2) => KitchenAction::goto(agent, args[1]),
            (ActionKind::Get, 3) => KitchenAction::get(agent, args[1], args[2]),
            (ActionKind::Put, 2) => KitchenAction::put(agent, args[1]),
            (ActionKind::Activate, 2) => KitchenAction::activate(agent, args[1]),
            (ActionKind::Noop, 1 | 2) => KitchenAction::noop(agent),
            _ => return Err(arity_error()),
        })
    }
}

impl fmt::Display for KitchenAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KitchenAction::Goto { agent, location } => write!(f, "goto({agent}, {location})"),
            KitchenAction::Get { agent, location, item } => write!(f, "get({agent}, {location}, {item})"),
            KitchenAction::Put { agent, location } => write!(f, "put({agent}, {location})"),
            KitchenAction::Activate { agent, location } => write!(f, "activate({agent}, {location})"),
            KitchenAction::Noop { agent } => write!(f, "noop({agent})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot parse action: {0}")]
pub struct ParseActionError(pub String);

/// Parses exactly one canonical `verb(args)` expression.
impl FromStr for KitchenAction {
    type Err = ParseActionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let open = s.find('(').ok_or_else(|| ParseActionError(s.to_string()))?;
        let body = s[open + 1..].strip_suffix(')').ok_or_else(|| ParseActionError(s.to_string()))?;
        let args: Vec<&str> = body.split(',').map(str::trim).collect();
        KitchenAction::from_parts(s[..open].trim(), &args)
    }
}

impl Serialize for KitchenAction {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for KitchenAction {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_text_round_trips() {
        let a = AgentId(1);
        for action in [
            KitchenAction::goto(a, "storage0"),
            KitchenAction::get(a, "storage0", "salmon"),
            KitchenAction::put(a, "blender0"),
            KitchenAction::activate(a, "blender0"),
            KitchenAction::noop(a),
        ] {
            assert_eq!(action.to_string().parse::<KitchenAction>().unwrap(), action);
        }
    }

    #[test]
    fn rejects_bad_text() {
        assert!("fly(agent0, moon)".parse::<KitchenAction>().is_err());
        assert!("goto(agent0)".parse::<KitchenAction>().is_err());
        assert!("goto(bob, storage0)".parse::<KitchenAction>().is_err());
        assert!("get(agent0, storage0, )".parse::<KitchenAction>().is_err());
        assert_eq!("NOOP(Agent2, blender0)".parse::<KitchenAction>().unwrap(), KitchenAction::noop(AgentId(2)));
    }
}

//! Cost ledger, model prices, efficiency, action-type breakdown and
//! per-worker capability tracking.
//!
//! Dollar amounts are exact rationals. Prices are quoted per million tokens
//! and token counts are integers, so every row and every total is exact;
//! only the final efficiency ratio is ever compared with a tolerance.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_traits::Zero;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::kitchen::{ActionKind, AgentId};
use crate::rational::{self, serde_decimal, serde_decimal_opt, Rational};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AccountingError {
    #[error("negative token count for {field}: {value}")]
    NegativeTokens { field: &'static str, value: i64 },
    #[error("price for {model} must be positive")]
    NonPositivePrice { model: String },
    #[error("alias {alias} points at unknown model {target}")]
    DanglingAlias { alias: String, target: String },
    #[error("price table: {0}")]
    Json(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelPrice {
    #[serde(with = "serde_decimal")]
    pub input_usd_per_mtok: Rational,
    #[serde(with = "serde_decimal")]
    pub output_usd_per_mtok: Rational,
}

impl ModelPrice {
    pub fn usd(&self, tokens_in: u64, tokens_out: u64) -> Rational {
        let million = Rational::from_integer(1_000_000);
        (Rational::from_integer(tokens_in as i128) * self.input_usd_per_mtok
            + Rational::from_integer(tokens_out as i128) * self.output_usd_per_mtok)
            / million
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PriceTable {
    pub models: BTreeMap<String, ModelPrice>,
    /// Alternative names for a priced model, e.g. provider-specific suffixes.
    #[serde(default)]
    pub aliases: BTreeMap<String, String>,
}

impl PriceTable {
    /// Provider list prices in USD per million tokens.
    pub fn standard() -> Self {
        let p = |i: &str, o: &str| ModelPrice {
            input_usd_per_mtok: rational::parse_decimal(i).expect("literal"),
            output_usd_per_mtok: rational::parse_decimal(o).expect("literal"),
        };
        let models = BTreeMap::from([
            ("claude-3.7".to_string(), p("3.00", "15.00")),
            ("gpt-4o".to_string(), p("2.50", "10.00")),
            ("gpt-4o-mini".to_string(), p("0.15", "0.60")),
            ("Llama-3.1-70B".to_string(), p("0.80", "2.80")),
            ("Qwen2.5-32B".to_string(), p("0.40", "1.40")),
        ]);
        let aliases = BTreeMap::from([
            ("gpt-4o-v2".to_string(), "gpt-4o".to_string()),
            ("Llama-3.1-70B-Instruct".to_string(), "Llama-3.1-70B".to_string()),
            ("Qwen2.5-32B-Instruct".to_string(), "Qwen2.5-32B".to_string()),
        ]);
        PriceTable { models, aliases }
    }

    pub fn from_json(text: &str) -> Result<Self, AccountingError> {
        let table: PriceTable = serde_json::from_str(text).map_err(|e| AccountingError::Json(e.to_string()))?;
        table.validate()?;
        Ok(table)
    }

    pub fn validate(&self) -> Result<(), AccountingError> {
        for (model, price) in &self.models {
            if price.input_usd_per_mtok <= Rational::zero() || price.output_usd_per_mtok <= Rational::zero() {
                return Err(AccountingError::NonPositivePrice { model: model.clone() });
            }
        }
        for (alias, target) in &self.aliases {
            if !self.models.contains_key(target) {
                return Err(AccountingError::DanglingAlias { alias: alias.clone(), target: target.clone() });
            }
        }
        Ok(())
    }

    pub fn lookup(&self, model_id: &str) -> Option<&ModelPrice> {
        self.models.get(model_id).or_else(|| self.aliases.get(model_id).and_then(|t| self.models.get(t)))
    }
}

/// Who made a model call.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CallRole {
    Planner,
    Orchestrator,
    Worker(AgentId),
}

impl fmt::Display for CallRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CallRole::Planner => f.write_str("planner"),
            CallRole::Orchestrator => f.write_str("orchestrator"),
            CallRole::Worker(a) => write!(f, "worker:{a}"),
        }
    }
}

impl FromStr for CallRole {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "planner" => Ok(CallRole::Planner),
            "orchestrator" => Ok(CallRole::Orchestrator),
            _ => s
                .strip_prefix("worker:")
                .and_then(|a| a.parse().ok())
                .map(CallRole::Worker)
                .ok_or_else(|| format!("unknown role {s:?}")),
        }
    }
}

impl Serialize for CallRole {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for CallRole {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerRow {
    pub step: u32,
    pub role: CallRole,
    pub model_id: String,
    pub tokens_in: u64,
    pub tokens_out: u64,
    #[serde(with = "serde_decimal")]
    pub usd: Rational,
    /// False when the model had no price and the row was booked at $0.
    pub priced: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CostLedger {
    pub rows: Vec<LedgerRow>,
}

impl CostLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends one call. Token counts are taken as signed so that bad upstream
    /// data is rejected instead of wrapping.
    pub fn record_call(
        &mut self,
        prices: &PriceTable,
        step: u32,
        role: CallRole,
        model_id: &str,
        tokens_in: i64,
        tokens_out: i64,
    ) -> Result<&LedgerRow, AccountingError> {
        if tokens_in < 0 {
            return Err(AccountingError::NegativeTokens { field: "tokens_in", value: tokens_in });
        }
        if tokens_out < 0 {
            return Err(AccountingError::NegativeTokens { field: "tokens_out", value: tokens_out });
        }
        let (tokens_in, tokens_out) = (tokens_in as u64, tokens_out as u64);
        let (usd, priced) = match prices.lookup(model_id) {
            Some(p) => (p.usd(tokens_in, tokens_out), true),
            None => {
                log::warn!("model {model_id} has no price; booking $0");
                (Rational::zero(), false)
            }
        };
        self.rows.push(LedgerRow { step, role, model_id: model_id.to_string(), tokens_in, tokens_out, usd, priced });
        Ok(self.rows.last().expect("just pushed"))
    }

    pub fn total_usd(&self) -> Rational {
        self.rows.iter().map(|r| r.usd).sum()
    }

    pub fn total_tokens(&self) -> (u64, u64) {
        self.rows.iter().fold((0, 0), |(i, o), r| (i + r.tokens_in, o + r.tokens_out))
    }

    /// Rows sorted by step, then role (planner, orchestrator, workers by id).
    pub fn ordered_rows(&self) -> Vec<LedgerRow> {
        let mut rows = self.rows.clone();
        rows.sort_by_key(|r| (r.step, r.role));
        rows
    }
}

/// Counts of executed actions by type.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ActionHistogram {
    pub counts: BTreeMap<ActionKind, u64>,
}

impl ActionHistogram {
    pub fn add(&mut self, kind: ActionKind) {
        *self.counts.entry(kind).or_insert(0) += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn count(&self, kind: ActionKind) -> u64 {
        self.counts.get(&kind).copied().unwrap_or(0)
    }

    /// Share of each action type, all five listed. Empty histograms give zeros.
    pub fn fractions(&self) -> BTreeMap<ActionKind, f64> {
        let total = self.total();
        ActionKind::ALL
            .into_iter()
            .map(|k| (k, if total == 0 { 0.0 } else { self.count(k) as f64 / total as f64 }))
            .collect()
    }
}

impl FromIterator<ActionKind> for ActionHistogram {
    fn from_iter<T: IntoIterator<Item = ActionKind>>(iter: T) -> Self {
        let mut h = ActionHistogram::default();
        iter.into_iter().for_each(|k| h.add(k));
        h
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyReport {
    pub completed_orders: u32,
    #[serde(with = "serde_decimal")]
    pub total_usd: Rational,
    /// Orders per dollar; absent when nothing was spent.
    #[serde(with = "serde_decimal_opt")]
    pub efficiency: Option<Rational>,
    pub action_counts: ActionHistogram,
    pub action_histogram: BTreeMap<ActionKind, f64>,
}

impl EfficiencyReport {
    pub fn efficiency_f64(&self) -> Option<f64> {
        self.efficiency.as_ref().map(rational::to_f64)
    }
}

pub fn efficiency(completed: u32, ledger: &CostLedger, actions: &ActionHistogram) -> EfficiencyReport {
    let total_usd = ledger.total_usd();
    let efficiency = if total_usd.is_zero() {
        None
    } else {
        Some(Rational::from_integer(completed as i128) / total_usd)
    };
    EfficiencyReport {
        completed_orders: completed,
        total_usd,
        efficiency,
        action_counts: actions.clone(),
        action_histogram: actions.fractions(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CapabilityEntry {
    pub agent: AgentId,
    pub model_id: String,
    pub actions_attempted: u64,
    pub actions_succeeded: u64,
}

impl CapabilityEntry {
    pub fn success_rate(&self) -> Option<Rational> {
        (self.actions_attempted > 0)
            .then(|| Rational::new(self.actions_succeeded as i128, self.actions_attempted as i128))
    }
}

/// Action success counters per (agent, model).
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CapabilityProfile {
    entries: Vec<CapabilityEntry>,
}

impl CapabilityProfile {
    pub fn new() -> Self {
        Self::default()
    }

    /// Counts one attempt. Parse and transport failures are passed in as
    /// unsuccessful attempts.
    pub fn update(&mut self, agent: AgentId, model_id: &str, succeeded: bool) {
        let pos = match self.entries.binary_search_by(|e| (e.agent, e.model_id.as_str()).cmp(&(agent, model_id))) {
            Ok(pos) => pos,
            Err(pos) => {
                self.entries.insert(
                    pos,
                    CapabilityEntry { agent, model_id: model_id.to_string(), actions_attempted: 0, actions_succeeded: 0 },
                );
                pos
            }
        };
        let e = &mut self.entries[pos];
        e.actions_attempted += 1;
        e.actions_succeeded += succeeded as u64;
    }

    pub fn entries(&self) -> &[CapabilityEntry] {
        &self.entries
    }

    pub fn get(&self, agent: AgentId, model_id: &str) -> Option<&CapabilityEntry> {
        self.entries.iter().find(|e| e.agent == agent && e.model_id == model_id)
    }

    pub fn success_rate(&self, agent: AgentId, model_id: &str) -> Option<Rational> {
        self.get(agent, model_id).and_then(CapabilityEntry::success_rate)
    }

    /// Counter-wise sum of two profiles.
    pub fn merged(&self, other: &CapabilityProfile) -> CapabilityProfile {
        let mut out = self.clone();
        for e in &other.entries {
            match out.entries.iter_mut().find(|x| x.agent == e.agent && x.model_id == e.model_id) {
                Some(x) => {
                    x.actions_attempted += e.actions_attempted;
                    x.actions_succeeded += e.actions_succeeded;
                }
                None => out.entries.push(e.clone()),
            }
        }
        out.entries.sort_by(|a, b| (a.agent, &a.model_id).cmp(&(b.agent, &b.model_id)));
        out
    }

    pub fn totals(&self) -> (u64, u64) {
        self.entries.iter().fold((0, 0), |(a, s), e| (a + e.actions_attempted, s + e.actions_succeeded))
    }
}

/// Free-function form of [`CapabilityProfile::update`].
pub fn update_capability(profile: &mut CapabilityProfile, agent: AgentId, model_id: &str, succeeded: bool) {
    profile.update(agent, model_id, succeeded);
}

pub const HINT_HEADER: &str = "Worker capabilities (measured action success rates):";

/// One line per roster member, in roster order.
pub fn capability_hint(profile: &CapabilityProfile, roster: &[(AgentId, String)]) -> String {
    let mut out = String::from(HINT_HEADER);
    out.push('\n');
    for (agent, model) in roster {
        let rate = profile
            .success_rate(*agent, model)
            .map(|r| rational::format_fixed(&r, 2))
            .unwrap_or_else(|| "unknown".to_string());
        out.push_str(&format!("- {agent} ({model}): success rate {rate}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i128, d: i128) -> Rational {
        Rational::new(n, d)
    }

    #[test]
    fn ledger_arithmetic() {
        let prices = PriceTable::standard();
        let mut l = CostLedger::new();
        assert_eq!(l.record_call(&prices, 0, CallRole::Planner, "gpt-4o-mini", 1_000_000, 1_000_000).unwrap().usd, r(3, 4));
        assert_eq!(l.record_call(&prices, 0, CallRole::Planner, "claude-3.7", 200_000, 40_000).unwrap().usd, r(6, 5));
        assert_eq!(l.record_call(&prices, 1, CallRole::Orchestrator, "gpt-4o", 0, 0).unwrap().usd, r(0, 1));
        assert_eq!(l.total_usd(), r(39, 20));
        assert!(l.record_call(&prices, 1, CallRole::Orchestrator, "gpt-4o", -1, 0).is_err());
        assert_eq!(l.rows.len(), 3);
    }

    #[test]
    fn unpriced_models_cost_nothing() {
        let mut l = CostLedger::new();
        let row = l.record_call(&PriceTable::standard(), 0, CallRole::Worker(AgentId(0)), "mystery", 10, 10).unwrap();
        assert!(!row.priced);
        assert_eq!(row.usd, r(0, 1));
    }

    #[test]
    fn aliases_resolve() {
        let t = PriceTable::standard();
        assert_eq!(t.lookup("gpt-4o-v2"), t.lookup("gpt-4o"));
        assert!(t.lookup("Llama-3.1-70B-Instruct").is_some());
        let json = serde_json::to_string(&t).unwrap();
        assert_eq!(PriceTable::from_json(&json).unwrap(), t);
    }

    #[test]
    fn price_table_validation() {
        assert!(PriceTable::from_json(r#"{"models":{"m":{"input_usd_per_mtok":"0","output_usd_per_mtok":"1"}}}"#).is_err());
        assert!(PriceTable::from_json(r#"{"models":{},"aliases":{"a":"b"}}"#).is_err());
        let t = PriceTable::from_json(r#"{"models":{"m":{"input_usd_per_mtok":0.5,"output_usd_per_mtok":"2"}}}"#).unwrap();
        assert_eq!(t.lookup("m").unwrap().input_usd_per_mtok, r(1, 2));
    }

    #[test]
    fn efficiency_undefined_without_cost() {
        let rep = efficiency(3, &CostLedger::new(), &ActionHistogram::default());
        assert_eq!(rep.efficiency, None);
        assert!(serde_json::to_string(&rep).unwrap().contains(r#""efficiency":null"#));
    }

    #[test]
    fn capability_rates() {
        let mut p = CapabilityProfile::new();
        for k in 0..10 {
            p.update(AgentId(1), "gpt-4o-mini", k < 7);
        }
        assert_eq!(p.success_rate(AgentId(1), "gpt-4o-mini"), Some(r(7, 10)));
        let roster = vec![(AgentId(1), "gpt-4o-mini".to_string()), (AgentId(0), "gpt-4o".to_string())];
        let hint = capability_hint(&p, &roster);
        let lines: Vec<&str> = hint.lines().skip(1).collect();
        assert_eq!(lines, ["- agent1 (gpt-4o-mini): success rate 0.70", "- agent0 (gpt-4o): success rate unknown"]);
    }

    #[test]
    fn role_text_round_trips() {
        for role in [CallRole::Planner, CallRole::Orchestrator, CallRole::Worker(AgentId(3))] {
            assert_eq!(role.to_string().parse::<CallRole>().unwrap(), role);
        }
    }
}

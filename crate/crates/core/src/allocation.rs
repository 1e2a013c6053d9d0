//! General multi-agent resource allocation.
//!
//! `P` tasks are each split into `M_p` subtasks and `N` agents may be placed on
//! them. Placing agent `i` on subtask `m` of task `p` earns `q - c` when the
//! agent can execute it and poisons the whole allocation otherwise. A valid
//! allocation uses at most one agent per subtask and stays within the time
//! budget.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::rational::{serde_decimal, Rational};

/// Largest `total subtasks x agents` product the exhaustive optimizer accepts.
pub const ENUMERATION_BOUND: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSpec {
    pub id: String,
    #[serde(with = "serde_decimal")]
    pub operational_cost: Rational,
    #[serde(with = "serde_decimal")]
    pub capability: Rational,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub id: String,
    #[serde(with = "serde_decimal", default = "Rational::zero")]
    pub difficulty: Rational,
    pub subtask_count: usize,
    #[serde(with = "serde_decimal")]
    pub workload: Rational,
    #[serde(default, with = "opt_decimal", skip_serializing_if = "Option::is_none")]
    pub reward: Option<Rational>,
}

mod opt_decimal {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(r) => serde_decimal::serialize(r, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rational>, D::Error> {
        let raw = Option::<serde_json::Value>::deserialize(d)?;
        match raw {
            None | Some(serde_json::Value::Null) => Ok(None),
            Some(v) => serde_decimal::from_json(&v)
                .map(Some)
                .map_err(serde::de::Error::custom),
        }
    }
}

/// Index of one decision variable: subtask `subtask` of task `task` done by `agent`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    pub task: usize,
    pub agent: usize,
    pub subtask: usize,
}

impl Triple {
    pub fn new(task: usize, agent: usize, subtask: usize) -> Self {
        Self { task, agent, subtask }
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}", self.task, self.agent, self.subtask)
    }
}

impl FromStr for Triple {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ModelError::BadTripleKey(s.to_string());
        let mut parts = s.split('/');
        let mut next = || -> Result<usize, ModelError> {
            parts.next().ok_or_else(bad)?.trim().parse().map_err(|_| bad())
        };
        let triple = Triple::new(next()?, next()?, next()?);
        if parts.next().is_some() {
            return Err(bad());
        }
        Ok(triple)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("triple {0} is outside the table dimensions")]
    IndexOutOfRange(Triple),
    #[error("malformed triple key {0:?}, expected \"p/i/m\"")]
    BadTripleKey(String),
    #[error("invalid utility table: {0}")]
    InvalidTable(String),
    #[error("instance too large for enumeration: {subtasks} subtasks x {agents} agents exceeds {bound}")]
    InstanceTooLarge { subtasks: usize, agents: usize, bound: usize },
    #[error("agent/task lists do not match the utility table: {0}")]
    DimensionMismatch(String),
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
}

/// Per-triple quality, cost and duration plus the time budget.
///
/// A triple is executable exactly when it has all three entries.
#[derive(Debug, Clone, PartialEq)]
pub struct UtilityTable {
    pub agents: Vec<AgentSpec>,
    pub tasks: Vec<TaskSpec>,
    pub quality: BTreeMap<Triple, Rational>,
    pub cost: BTreeMap<Triple, Rational>,
    pub duration: BTreeMap<Triple, Rational>,
    pub time_budget: Rational,
}

#[derive(Serialize, Deserialize)]
struct UtilityTableDoc {
    agents: Vec<AgentSpec>,
    tasks: Vec<TaskSpec>,
    quality: BTreeMap<String, serde_json::Value>,
    cost: BTreeMap<String, serde_json::Value>,
    duration: BTreeMap<String, serde_json::Value>,
    t_max: serde_json::Value,
}

impl UtilityTable {
    /// Builds a table with the synthetic derivation `q = φ_i·r_j/M_p`,
    /// `c = c_i·w_j/M_p` and a constant per-subtask duration. Every triple is
    /// executable. This derivation is a test convenience, not part of the model.
    pub fn synthetic(
        agents: Vec<AgentSpec>,
        tasks: Vec<TaskSpec>,
        duration: Rational,
        time_budget: Rational,
    ) -> Result<Self, ModelError> {
        let mut quality = BTreeMap::new();
        let mut cost = BTreeMap::new();
        let mut durations = BTreeMap::new();
        for (p, task) in tasks.iter().enumerate() {
            let parts = Rational::from_integer(task.subtask_count as i128);
            for (i, agent) in agents.iter().enumerate() {
                for m in 0..task.subtask_count {
                    let t = Triple::new(p, i, m);
                    let reward = task.reward.unwrap_or_else(Rational::zero);
                    quality.insert(t, agent.capability * reward / parts);
                    cost.insert(t, agent.operational_cost * task.workload / parts);
                    durations.insert(t, duration);
                }
            }
        }
        let table = Self { agents, tasks, quality, cost, duration: durations, time_budget };
        table.check()?;
        Ok(table)
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let doc: UtilityTableDoc = serde_json::from_str(text)?;
        let convert = |map: BTreeMap<String, serde_json::Value>| {
            map.into_iter()
                .map(|(k, v)| {
                    let triple: Triple = k.parse()?;
                    let value = serde_decimal::from_json(&v)
                        .map_err(|e| ModelError::InvalidTable(format!("{k}: {e}")))?;
                    Ok((triple, value))
                })
                .collect::<Result<BTreeMap<_, _>, ModelError>>()
        };
        let time_budget = serde_decimal::from_json(&doc.t_max)
            .map_err(|e| ModelError::InvalidTable(format!("t_max: {e}")))?;
        let table = Self {
            quality: convert(doc.quality)?,
            cost: convert(doc.cost)?,
            duration: convert(doc.duration)?,
            agents: doc.agents,
            tasks: doc.tasks,
            time_budget,
        };
        table.check()?;
        Ok(table)
    }

    pub fn to_json(&self) -> String {
        let convert = |map: &BTreeMap<Triple, Rational>| {
            map.iter()
                .map(|(k, v)| {
                    (k.to_string(), serde_json::Value::String(crate::rational::to_decimal_string(v)))
                })
                .collect::<BTreeMap<_, _>>()
        };
        let doc = UtilityTableDoc {
            agents: self.agents.clone(),
            tasks: self.tasks.clone(),
            quality: convert(&self.quality),
            cost: convert(&self.cost),
            duration: convert(&self.duration),
            t_max: serde_json::Value::String(crate::rational::to_decimal_string(&self.time_budget)),
        };
        serde_json::to_string_pretty(&doc).expect("table serializes")
    }

    fn check(&self) -> Result<(), ModelError> {
        let invalid = |msg: String| Err(ModelError::InvalidTable(msg));
        if !self.time_budget.is_positive() {
            return invalid("t_max must be positive".into());
        }
        for a in &self.agents {
            if a.operational_cost.is_negative() {
                return invalid(format!("agent {} has negative operational cost", a.id));
            }
            if a.capability.is_negative() || a.capability > Rational::from_integer(1) {
                return invalid(format!("agent {} capability outside [0,1]", a.id));
            }
        }
        for t in &self.tasks {
            if t.subtask_count == 0 {
                return invalid(format!("task {} has no subtasks", t.id));
            }
            if t.workload.is_negative() {
                return invalid(format!("task {} has negative workload", t.id));
            }
        }
        for map in [&self.quality, &self.cost, &self.duration] {
            for t in map.keys() {
                self.check_index(t)?;
            }
        }
        for (t, d) in &self.duration {
            if !d.is_positive() {
                return invalid(format!("duration of {t} must be positive"));
            }
        }
        Ok(())
    }

    pub fn check_index(&self, t: &Triple) -> Result<(), ModelError> {
        let in_range = t.task < self.tasks.len()
            && t.agent < self.agents.len()
            && t.subtask < self.tasks[t.task].subtask_count;
        if in_range {
            Ok(())
        } else {
            Err(ModelError::IndexOutOfRange(*t))
        }
    }

    pub fn is_executable(&self, t: &Triple) -> bool {
        self.quality.contains_key(t) && self.cost.contains_key(t) && self.duration.contains_key(t)
    }

    /// `u = q - c` for an executable triple.
    pub fn unit_utility(&self, t: &Triple) -> Option<Rational> {
        if !self.is_executable(t) {
            return None;
        }
        Some(self.quality[t] - self.cost[t])
    }

    pub fn total_subtasks(&self) -> usize {
        self.tasks.iter().map(|t| t.subtask_count).sum()
    }

    /// Scales every quality and cost entry by `factor`.
    pub fn scaled(&self, factor: Rational) -> Self {
        let mut out = self.clone();
        out.quality.values_mut().for_each(|v| *v *= factor);
        out.cost.values_mut().for_each(|v| *v *= factor);
        out
    }
}

/// The set of triples with `v = 1`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct AllocationMatrix {
    entries: BTreeSet<Triple>,
}

impl AllocationMatrix {
    pub fn new(entries: impl IntoIterator<Item = Triple>) -> Self {
        Self { entries: entries.into_iter().collect() }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn entries(&self) -> impl Iterator<Item = &Triple> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, t: &Triple) -> bool {
        self.entries.contains(t)
    }

    pub fn union(&self, other: &Self) -> Self {
        Self { entries: self.entries.union(&other.entries).copied().collect() }
    }

    /// Lexicographic comparison of the sorted entry sequences.
    pub fn lex_cmp(&self, other: &Self) -> Ordering {
        self.entries.iter().cmp(other.entries.iter())
    }

    fn check_indices(&self, table: &UtilityTable) -> Result<(), ModelError> {
        self.entries.iter().try_for_each(|t| table.check_index(t))
    }
}

/// Objective value of an allocation. An allocation that uses any inexecutable
/// triple is worth negative infinity; this is a legal value, not an error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Valuation {
    NegInfinity,
    Finite(Rational),
}

impl Valuation {
    pub fn finite(&self) -> Option<Rational> {
        match self {
            Valuation::Finite(v) => Some(*v),
            Valuation::NegInfinity => None,
        }
    }
}

impl PartialOrd for Valuation {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Valuation {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Valuation::NegInfinity, Valuation::NegInfinity) => Ordering::Equal,
            (Valuation::NegInfinity, _) => Ordering::Less,
            (_, Valuation::NegInfinity) => Ordering::Greater,
            (Valuation::Finite(a), Valuation::Finite(b)) => a.cmp(b),
        }
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Valuation::NegInfinity => f.write_str("-inf"),
            Valuation::Finite(v) => write!(f, "{}", crate::rational::DecimalDisplay(v)),
        }
    }
}

pub fn utility_of(alloc: &AllocationMatrix, table: &UtilityTable) -> Result<Valuation, ModelError> {
    alloc.check_indices(table)?;
    let mut total = Rational::zero();
    for t in alloc.entries() {
        match table.unit_utility(t) {
            Some(u) => total += u,
            None => return Ok(Valuation::NegInfinity),
        }
    }
    Ok(Valuation::Finite(total))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "constraint", rename_all = "snake_case")]
pub enum ConstraintViolation {
    /// Total duration exceeds the time budget.
    TimeBudget {
        #[serde(with = "serde_decimal")]
        used: Rational,
        #[serde(with = "serde_decimal")]
        budget: Rational,
    },
    /// More than one agent placed on the same subtask.
    DuplicateAssignment { task: usize, subtask: usize, agents: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FeasibilityVerdict {
    pub violations: Vec<ConstraintViolation>,
    #[serde(with = "serde_decimal")]
    pub time_used: Rational,
    /// Always true: an entry set can only express `v ∈ {0, 1}`.
    pub binary_domain_holds: bool,
}

impl FeasibilityVerdict {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn feasible(alloc: &AllocationMatrix, table: &UtilityTable) -> Result<FeasibilityVerdict, ModelError> {
    alloc.check_indices(table)?;
    let mut violations = Vec::new();
    let time_used: Rational = alloc
        .entries()
        .filter_map(|t| table.duration.get(t))
        .fold(Rational::zero(), |acc, d| acc + d);
    if time_used > table.time_budget {
        violations.push(ConstraintViolation::TimeBudget { used: time_used, budget: table.time_budget });
    }
    let mut per_subtask: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for t in alloc.entries() {
        per_subtask.entry((t.task, t.subtask)).or_default().push(t.agent);
    }
    for ((task, subtask), agents) in per_subtask {
        if agents.len() > 1 {
            violations.push(ConstraintViolation::DuplicateAssignment { task, subtask, agents });
        }
    }
    Ok(FeasibilityVerdict { violations, time_used, binary_domain_holds: true })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BruteForceOutcome {
    pub allocation: AllocationMatrix,
    pub utility: Valuation,
    /// Set when no nonempty allocation is feasible, so the empty one was returned by default.
    pub no_feasible_nonempty: bool,
}

/// Exact optimizer for small instances.
///
/// Searches every way of giving each subtask zero or one agent, pruning on
/// the time budget and on an optimistic utility bound. Equal-utility optima
/// resolve to the lexicographically smallest entry set.
pub fn brute_force_allocate(
    agents: &[AgentSpec],
    tasks: &[TaskSpec],
    table: &UtilityTable,
) -> Result<BruteForceOutcome, ModelError> {
    if agents != table.agents.as_slice() {
        return Err(ModelError::DimensionMismatch("agents differ from the table's".into()));
    }
    if tasks != table.tasks.as_slice() {
        return Err(ModelError::DimensionMismatch("tasks differ from the table's".into()));
    }
    let subtasks = table.total_subtasks();
    if subtasks * agents.len() > ENUMERATION_BOUND {
        return Err(ModelError::InstanceTooLarge {
            subtasks,
            agents: agents.len(),
            bound: ENUMERATION_BOUND,
        });
    }

    let slots: Vec<(usize, usize)> = tasks
        .iter()
        .enumerate()
        .flat_map(|(p, t)| (0..t.subtask_count).map(move |m| (p, m)))
        .collect();
    // Options per slot: executable agents only. Inexecutable triples can never
    // beat the empty allocation, and any superset of an infeasible time budget
    // stays infeasible because durations are positive.
    let options: Vec<Vec<(Triple, Rational, Rational)>> = slots
        .iter()
        .map(|&(p, m)| {
            (0..agents.len())
                .map(|i| Triple::new(p, i, m))
                .filter_map(|t| table.unit_utility(&t).map(|u| (t, u, table.duration[&t])))
                .collect()
        })
        .collect();
    // Best possible gain from slots k.. onwards.
    let mut optimistic = vec![Rational::zero(); slots.len() + 1];
    for k in (0..slots.len()).rev() {
        let best = options[k].iter().map(|o| o.1).filter(|u| u.is_positive()).max();
        optimistic[k] = optimistic[k + 1] + best.unwrap_or_else(Rational::zero);
    }

    struct Search<'a> {
        options: &'a [Vec<(Triple, Rational, Rational)>],
        optimistic: &'a [Rational],
        budget: Rational,
        chosen: Vec<Triple>,
        best: Option<(Rational, AllocationMatrix)>,
    }

    impl Search<'_> {
        fn run(&mut self, k: usize, utility: Rational, time: Rational) {
            if let Some((best, _)) = &self.best {
                if utility + self.optimistic[k] < *best {
                    return;
                }
            }
            if k == self.options.len() {
                let candidate = AllocationMatrix::new(self.chosen.iter().copied());
                let better = match &self.best {
                    None => true,
                    Some((best, alloc)) => {
                        utility > *best || (utility == *best && candidate.lex_cmp(alloc) == Ordering::Less)
                    }
                };
                if better {
                    self.best = Some((utility, candidate));
                }
                return;
            }
            self.run(k + 1, utility, time);
            for &(t, u, d) in &self.options[k] {
                let spent = time + d;
                if spent > self.budget {
                    continue;
                }
                self.chosen.push(t);
                self.run(k + 1, utility + u, spent);
                self.chosen.pop();
            }
        }
    }

    let mut search = Search {
        options: &options,
        optimistic: &optimistic,
        budget: table.time_budget,
        chosen: Vec::new(),
        best: None,
    };
    search.run(0, Rational::zero(), Rational::zero());
    let (utility, allocation) = search.best.expect("the empty allocation is always reachable");
    let no_feasible_nonempty = allocation.is_empty() && !has_feasible_nonempty(table);
    Ok(BruteForceOutcome { allocation, utility: Valuation::Finite(utility), no_feasible_nonempty })
}

/// Whether any single triple fits the budget (any feasible nonempty set
/// contains a feasible singleton, since durations are positive). Inexecutable
/// triples count: they are feasible, merely worth negative infinity.
fn has_feasible_nonempty(table: &UtilityTable) -> bool {
    table.tasks.iter().enumerate().any(|(p, task)| {
        (0..task.subtask_count).any(|m| {
            (0..table.agents.len()).any(|i| {
                let t = Triple::new(p, i, m);
                table.duration.get(&t).is_none_or(|d| *d <= table.time_budget)
            })
        })
    })
}

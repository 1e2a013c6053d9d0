//! Scripted oracle: a deterministic, always-legal recipe follower.
//!
//! Each call re-derives the outstanding work from the full kitchen state.
//! Live orders are taken earliest-deadline first. For each order the oracle
//! reserves concrete item copies (in hands, on shelves, inside tools) and one
//! tool per recipe step, so two agents never reach for the same thing. The
//! result is a list of work items whose chores are handed to idle agents.

use std::collections::{BTreeMap, BTreeSet};

use crate::kitchen::{
    AgentId, DishOrder, JointAction, KitchenAction, KitchenState, LocationKind, Multiset, Recipe,
};

use super::plan::{Directive, Plan};
use crate::kitchen::KitchenEvent;

/// Where a reserved item copy currently is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Source {
    Hand(AgentId),
    At(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WorkKind {
    /// Bring a finished dish to a serving table.
    Deliver { source: Source },
    /// Load `tool` with the step's inputs and start it.
    Cook { tool: usize, fetches: Vec<(String, Source)>, garbage: Vec<String>, inputs_complete: bool },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorkItem {
    pub order: u32,
    pub dish: String,
    /// Recipe step; deliveries carry the last step's index.
    pub step: usize,
    pub kind: WorkKind,
}

/// Something an empty-handed agent can do next.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Chore {
    Fetch { from: usize, item: String },
    Clear { from: usize, item: String },
    Activate { tool: usize },
}

impl Chore {
    pub fn location(&self) -> usize {
        match self {
            Chore::Fetch { from, .. } | Chore::Clear { from, .. } => *from,
            Chore::Activate { tool } => *tool,
        }
    }
}

impl WorkItem {
    pub fn chores(&self) -> Vec<Chore> {
        match &self.kind {
            WorkKind::Deliver { source: Source::At(l) } => vec![Chore::Fetch { from: *l, item: self.dish.clone() }],
            WorkKind::Deliver { source: Source::Hand(_) } => vec![],
            WorkKind::Cook { tool, fetches, garbage, inputs_complete } => {
                let mut out: Vec<Chore> =
                    garbage.iter().map(|g| Chore::Clear { from: *tool, item: g.clone() }).collect();
                for (item, src) in fetches {
                    if let Source::At(l) = src {
                        out.push(Chore::Fetch { from: *l, item: item.clone() });
                    }
                }
                if garbage.is_empty() && fetches.is_empty() && *inputs_complete {
                    out.push(Chore::Activate { tool: *tool });
                }
                out
            }
        }
    }

    fn matches(&self, d: &Directive, last_step: usize) -> bool {
        if d.is_idle() {
            return false;
        }
        let step_ok = match d.step {
            None => true,
            Some(k) => match self.kind {
                WorkKind::Deliver { .. } => k == last_step,
                WorkKind::Cook { .. } => k == self.step,
            },
        };
        d.order.is_none_or(|o| o == self.order) && d.dish.as_ref().is_none_or(|x| *x == self.dish) && step_ok
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KitchenAnalysis {
    pub items: Vec<WorkItem>,
    /// Where each agent should take the item it holds; absent means the item
    /// is not needed.
    pub hand_dest: BTreeMap<AgentId, usize>,
    /// Stray items in tools nobody is using.
    pub cleanup: Vec<Chore>,
}

/// Live orders, earliest deadline first.
pub fn edf_orders(state: &KitchenState) -> Vec<&DishOrder> {
    let mut orders: Vec<&DishOrder> = state.orders().iter().collect();
    orders.sort_by_key(|o| (o.lifetime, o.issued_at, o.id));
    orders
}

fn intersection(a: &Multiset, b: &Multiset) -> Multiset {
    a.difference(&a.difference(b))
}

struct Analyzer<'a> {
    state: &'a KitchenState,
    free: BTreeMap<Source, Multiset>,
    claimed: BTreeSet<usize>,
    coming: Vec<(usize, String, bool)>,
    items: Vec<WorkItem>,
}

impl<'a> Analyzer<'a> {
    fn new(state: &'a KitchenState) -> Self {
        let mut free = BTreeMap::new();
        for a in state.agents() {
            if let Some(h) = &a.holding {
                free.insert(Source::Hand(a.id), [h.as_str()].into_iter().collect());
            }
        }
        let mut coming = Vec::new();
        for (l, loc) in state.locations().iter().enumerate() {
            match &loc.processing {
                Some(p) => coming.push((l, p.output_item.clone(), false)),
                None => {
                    free.insert(Source::At(l), loc.contents.clone());
                }
            }
        }
        Analyzer { state, free, claimed: BTreeSet::new(), coming, items: Vec::new() }
    }

    fn take_free(&mut self, item: &str, exclude: Option<usize>) -> Option<Source> {
        let src = self.free.iter().find_map(|(src, m)| {
            let blocked = match src {
                Source::At(l) => self.claimed.contains(l) || Some(*l) == exclude,
                Source::Hand(_) => false,
            };
            (!blocked && m.contains(item)).then_some(*src)
        })?;
        self.free.get_mut(&src).expect("found above").remove(item);
        Some(src)
    }

    fn give_back(&mut self, item: &str, src: Source) {
        self.free.entry(src).or_default().add(item);
    }

    fn claim_coming(&mut self, item: &str) -> bool {
        match self.coming.iter_mut().find(|(_, out, taken)| !taken && out == item) {
            Some(entry) => {
                entry.2 = true;
                true
            }
            None => false,
        }
    }

    fn eligible_tool(&self, l: usize, kind: &str) -> bool {
        let loc = &self.state.locations()[l];
        loc.kind.tool_kind() == Some(kind)
            && loc.processing.is_none()
            && !self.claimed.contains(&l)
            && self.free.get(&Source::At(l)).cloned().unwrap_or_default() == loc.contents
    }

    fn best_tool(&self, kind: &str, inputs: &Multiset) -> Option<usize> {
        (0..self.state.locations().len())
            .filter(|&l| self.eligible_tool(l, kind))
            .max_by_key(|&l| (intersection(inputs, &self.state.locations()[l].contents).len(), std::cmp::Reverse(l)))
    }

    /// Makes sure an item that is not lying around is on its way.
    fn pursue(&mut self, order: &DishOrder, recipe: &Recipe, item: &str) {
        if self.claim_coming(item) {
            return;
        }
        if let Some(k) = recipe.producer_of(item) {
            self.try_step(order, recipe, k);
        }
    }

    fn try_step(&mut self, order: &DishOrder, recipe: &Recipe, k: usize) {
        let step = &recipe.steps[k];
        let tool = self.best_tool(&step.tool, &step.inputs);
        let reserved = tool.and_then(|t| self.free.remove(&Source::At(t))).unwrap_or_default();
        let in_place = intersection(&step.inputs, &reserved);
        let missing = step.inputs.difference(&in_place);
        let mut fetches = Vec::new();
        let mut unresolved = Vec::new();
        for x in missing.items() {
            match self.take_free(x, tool) {
                Some(src) => fetches.push((x.to_string(), src)),
                None => unresolved.push(x.to_string()),
            }
        }
        for x in &unresolved {
            self.pursue(order, recipe, x);
        }
        match tool {
            Some(t) if !self.claimed.contains(&t) => {
                self.claimed.insert(t);
                self.items.push(WorkItem {
                    order: order.id,
                    dish: order.dish.clone(),
                    step: k,
                    kind: WorkKind::Cook {
                        tool: t,
                        fetches,
                        garbage: reserved.difference(&step.inputs).items().map(str::to_string).collect(),
                        inputs_complete: unresolved.is_empty(),
                    },
                });
            }
            _ => {
                for (x, src) in fetches {
                    self.give_back(&x, src);
                }
                if let Some(t) = tool {
                    for x in reserved.items() {
                        self.give_back(x, Source::At(t));
                    }
                }
            }
        }
    }

    fn run(mut self) -> KitchenAnalysis {
        let level = self.state.level();
        for order in edf_orders(self.state) {
            let recipe = level.recipe(&order.dish).expect("orders come from the dish pool");
            match self.take_free(&order.dish, None) {
                Some(source) => self.items.push(WorkItem {
                    order: order.id,
                    dish: order.dish.clone(),
                    step: recipe.last_step(),
                    kind: WorkKind::Deliver { source },
                }),
                None => self.pursue(order, recipe, &order.dish),
            }
        }

        let mut hand_dest = BTreeMap::new();
        for item in &self.items {
            match &item.kind {
                WorkKind::Deliver { source: Source::Hand(a) } => {
                    hand_dest.insert(*a, serving_spot(self.state, *a));
                }
                WorkKind::Cook { tool, fetches, .. } => {
                    for (_, src) in fetches {
                        if let Source::Hand(a) = src {
                            hand_dest.insert(*a, *tool);
                        }
                    }
                }
                WorkKind::Deliver { .. } => {}
            }
        }

        let mut cleanup = Vec::new();
        for (l, loc) in self.state.locations().iter().enumerate() {
            if loc.kind.tool_kind().is_none() || loc.processing.is_some() || self.claimed.contains(&l) {
                continue;
            }
            if let Some(m) = self.free.get(&Source::At(l)) {
                cleanup.extend(m.items().map(|x| Chore::Clear { from: l, item: x.to_string() }));
            }
        }
        KitchenAnalysis { items: self.items, hand_dest, cleanup }
    }
}

/// The serving table an agent should deliver to: the one it stands at, or
/// the first one.
fn serving_spot(state: &KitchenState, agent: AgentId) -> usize {
    let at = state.agent(agent).expect("live agent").at;
    if state.locations()[at].kind == LocationKind::ServingTable {
        at
    } else {
        state.level().start_location()
    }
}

pub fn analyze(state: &KitchenState) -> KitchenAnalysis {
    Analyzer::new(state).run()
}

fn move_then(state: &KitchenState, agent: AgentId, target: usize, there: KitchenAction) -> KitchenAction {
    if state.agent(agent).expect("live agent").at == target {
        there
    } else {
        KitchenAction::goto(agent, &state.locations()[target].id)
    }
}

/// Action for an agent that holds something: carry it where it is needed, or
/// drop it in storage.
fn carry(state: &KitchenState, analysis: &KitchenAnalysis, agent: AgentId) -> KitchenAction {
    let dest = analysis.hand_dest.get(&agent).copied().unwrap_or_else(|| state.level().restock_location());
    move_then(state, agent, dest, KitchenAction::put(agent, &state.locations()[dest].id))
}

fn perform(state: &KitchenState, agent: AgentId, chore: &Chore) -> KitchenAction {
    let loc = &state.locations()[chore.location()].id;
    let action = match chore {
        Chore::Fetch { item, .. } | Chore::Clear { item, .. } => KitchenAction::get(agent, loc, item),
        Chore::Activate { .. } => KitchenAction::activate(agent, loc),
    };
    move_then(state, agent, chore.location(), action)
}

/// Joint action of a team of oracle agents. Chores are taken in work-item
/// order; each goes to the lowest-numbered idle agent already standing at
/// the chore's location, or else to the lowest-numbered idle agent.
pub fn oracle_joint(state: &KitchenState) -> JointAction {
    let analysis = analyze(state);
    let mut joint = JointAction::new();
    let mut idle: Vec<AgentId> = Vec::new();
    for a in state.agents() {
        if a.holding.is_some() {
            joint.insert(a.id, carry(state, &analysis, a.id));
        } else {
            idle.push(a.id);
        }
    }
    let chores = analysis.items.iter().flat_map(WorkItem::chores).chain(analysis.cleanup.iter().cloned());
    for chore in chores {
        if idle.is_empty() {
            break;
        }
        let pick = idle
            .iter()
            .position(|a| state.agent(*a).expect("live agent").at == chore.location())
            .unwrap_or(0);
        let agent = idle.remove(pick);
        joint.insert(agent, perform(state, agent, &chore));
    }
    for agent in idle {
        joint.insert(agent, KitchenAction::noop(agent));
    }
    joint
}

/// One agent's move when following its plan slice. Directives that no
/// longer match outstanding work are skipped.
pub fn follow_plan(state: &KitchenState, agent: AgentId, directives: &[Directive]) -> KitchenAction {
    let analysis = analyze(state);
    if state.agent(agent).expect("live agent").holding.is_some() {
        return carry(state, &analysis, agent);
    }
    for d in directives {
        for item in &analysis.items {
            let last = state.level().recipe(&item.dish).map(Recipe::last_step).unwrap_or(0);
            if item.matches(d, last) {
                if let Some(chore) = item.chores().first() {
                    return perform(state, agent, chore);
                }
            }
        }
    }
    KitchenAction::noop(agent)
}

/// Earliest-deadline-first partition of every live order's recipe steps,
/// dealt round-robin to `workers` by id. Agents not in `workers` idle.
pub fn scripted_plan(
    state: &KitchenState,
    roster: &[AgentId],
    workers: &[AgentId],
    created_at: u32,
    trigger_events: Vec<KitchenEvent>,
) -> Plan {
    let mut plan = Plan::idle(roster, created_at, trigger_events);
    if workers.is_empty() {
        return plan;
    }
    let mut assigned: BTreeMap<AgentId, Vec<Directive>> = BTreeMap::new();
    let mut turn = 0;
    for order in edf_orders(state) {
        let recipe = state.level().recipe(&order.dish).expect("orders come from the dish pool");
        for k in 0..recipe.steps.len() {
            let agent = workers[turn % workers.len()];
            turn += 1;
            assigned.entry(agent).or_default().push(Directive::recipe_step(order.id, &order.dish, k));
        }
    }
    plan.directives.extend(assigned);
    plan
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kitchen::{levels, load_level};

    fn run_oracle(level: &str, agents: usize, seed: u64) -> KitchenState {
        let mut s = load_level(&levels::builtin(level).unwrap(), agents, seed).unwrap();
        while !s.is_terminal() {
            let out = s.step(&oracle_joint(&s)).unwrap();
            assert!(out.per_agent_result.values().all(|r| r.succeeded()), "step {}: {:?}", s.step_index(), out.per_agent_result);
            s = out.next_state;
        }
        s
    }

    #[test]
    fn oracle_never_fails_and_completes_orders() {
        for level in levels::builtin_ids() {
            for agents in 1..=4 {
                let s = run_oracle(level, agents, 11);
                assert!(s.counters().completed >= 1, "{level} with {agents} agents");
            }
        }
    }

    #[test]
    fn first_moves_on_level_one() {
        let s = load_level(&levels::builtin("level_1").unwrap(), 1, 0).unwrap();
        let a = analyze(&s);
        assert_eq!(a.items.len(), 1);
        assert_eq!(oracle_joint(&s)[&AgentId(0)], KitchenAction::goto(AgentId(0), "storage0"));
    }

    #[test]
    fn plan_deals_steps_round_robin() {
        let s = load_level(&levels::builtin("level_2").unwrap(), 2, 0).unwrap();
        let roster = [AgentId(0), AgentId(1)];
        let plan = scripted_plan(&s, &roster, &roster, 0, vec![]);
        let dish = &s.orders()[0].dish;
        let steps = s.level().recipe(dish).unwrap().steps.len();
        if steps == 2 {
            assert_eq!(plan.for_agent(AgentId(0))[0].step, Some(0));
            assert_eq!(plan.for_agent(AgentId(1))[0].step, Some(1));
        }
        let only_one = scripted_plan(&s, &roster, &[AgentId(1)], 0, vec![]);
        assert!(only_one.for_agent(AgentId(0))[0].is_idle());
    }
}

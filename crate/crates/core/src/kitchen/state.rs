use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{AgentId, KitchenAction, KitchenError, LevelConfig, LocationKind, Multiset};
use crate::seed;

/// Largest team the environment accepts.
pub const MAX_AGENTS: usize = 6;

pub type JointAction = BTreeMap<AgentId, KitchenAction>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Processing {
    pub remaining_steps: u32,
    pub output_item: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocationState {
    pub id: String,
    pub kind: LocationKind,
    pub contents: Multiset,
    /// The agent that started the tool, while it is running.
    pub occupied_by: Option<AgentId>,
    /// Only ever set on tools. Contents stay the inputs until the run ends.
    pub processing: Option<Processing>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentState {
    pub id: AgentId,
    /// Index into the level's location list.
    pub at: usize,
    pub holding: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DishOrder {
    pub id: u32,
    pub dish: String,
    /// Steps left before the order expires.
    pub lifetime: u32,
    pub issued_at: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KitchenEvent {
    OrderIntroduced { step: u32, order: u32, dish: String },
    OrderCompleted { step: u32, order: u32, dish: String },
    OrderExpired { step: u32, order: u32, dish: String },
}

impl KitchenEvent {
    pub fn step(&self) -> u32 {
        match self {
            KitchenEvent::OrderIntroduced { step, .. }
            | KitchenEvent::OrderCompleted { step, .. }
            | KitchenEvent::OrderExpired { step, .. } => *step,
        }
    }

    pub fn dish(&self) -> &str {
        match self {
            KitchenEvent::OrderIntroduced { dish, .. }
            | KitchenEvent::OrderCompleted { dish, .. }
            | KitchenEvent::OrderExpired { dish, .. } => dish,
        }
    }

    pub fn order(&self) -> u32 {
        match self {
            KitchenEvent::OrderIntroduced { order, .. }
            | KitchenEvent::OrderCompleted { order, .. }
            | KitchenEvent::OrderExpired { order, .. } => *order,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            KitchenEvent::OrderIntroduced { step, order, dish } => {
                format!("step {step}: order {order} for {dish} introduced")
            }
            KitchenEvent::OrderCompleted { step, order, dish } => {
                format!("step {step}: order {order} for {dish} completed")
            }
            KitchenEvent::OrderExpired { step, order, dish } => format!("step {step}: order {order} for {dish} expired"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailReason {
    NotAtLocation,
    AlreadyThere,
    ItemAbsent,
    HandsFull,
    HandsEmpty,
    NotATool,
    ToolBusy,
    NoMatchingRecipe,
    /// Would have succeeded had a lower-numbered agent not acted first this step.
    Contention,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionResult {
    Succeeded,
    Failed(FailReason),
}

impl ActionResult {
    pub fn succeeded(&self) -> bool {
        matches!(self, ActionResult::Succeeded)
    }
}

/// Items that entered or left the world during one step.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ItemFlow {
    pub restocked: Vec<String>,
    pub consumed: Vec<String>,
    pub produced: Vec<String>,
    pub served: Vec<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderCounters {
    pub introduced: u32,
    pub completed: u32,
    pub expired: u32,
}

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub next_state: KitchenState,
    pub events: Vec<KitchenEvent>,
    pub per_agent_result: BTreeMap<AgentId, ActionResult>,
    pub item_flow: ItemFlow,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KitchenState {
    pub(super) level: Arc<LevelConfig>,
    pub(super) seed: u64,
    pub(super) step: u32,
    pub(super) locations: Vec<LocationState>,
    pub(super) agents: Vec<AgentState>,
    pub(super) orders: Vec<DishOrder>,
    pub(super) next_order_id: u32,
    pub(super) accomplished: Vec<String>,
    pub(super) counters: OrderCounters,
    pub(super) events: Vec<KitchenEvent>,
    pub(super) rng: ChaCha8Rng,
}

/// Starts an episode: every agent at the first serving table with empty
/// hands, step 0, and the first order already issued.
pub fn load_level(config: &LevelConfig, agent_count: usize, seed: u64) -> Result<KitchenState, KitchenError> {
    config.validate()?;
    if agent_count == 0 || agent_count > MAX_AGENTS {
        return Err(KitchenError::BadAgentCount(agent_count));
    }
    let start = config.start_location();
    let mut state = KitchenState {
        locations: config
            .locations
            .iter()
            .map(|spec| LocationState {
                id: spec.id.clone(),
                kind: spec.kind.clone(),
                contents: spec.contents.clone(),
                occupied_by: None,
                processing: None,
            })
            .collect(),
        agents: (0..agent_count).map(|k| AgentState { id: AgentId(k), at: start, holding: None }).collect(),
        level: Arc::new(config.clone()),
        seed,
        step: 0,
        orders: Vec::new(),
        next_order_id: 0,
        accomplished: Vec::new(),
        counters: OrderCounters::default(),
        events: Vec::new(),
        rng: seed::rng(seed::derive(seed, "kitchen/orders")),
    };
    let mut events = Vec::new();
    state.introduce_order(0, &mut events, &mut ItemFlow::default());
    state.events = events;
    Ok(state)
}

impl KitchenState {
    pub fn level(&self) -> &LevelConfig {
        &self.level
    }

    /// Seed the episode was loaded with.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn step_index(&self) -> u32 {
        self.step
    }

    pub fn max_steps(&self) -> u32 {
        self.level.max_steps
    }

    pub fn is_terminal(&self) -> bool {
        self.step >= self.level.max_steps
    }

    pub fn agent_count(&self) -> usize {
        self.agents.len()
    }

    pub fn agent_ids(&self) -> impl Iterator<Item = AgentId> + '_ {
        self.agents.iter().map(|a| a.id)
    }

    pub fn agents(&self) -> &[AgentState] {
        &self.agents
    }

    pub fn agent(&self, id: AgentId) -> Option<&AgentState> {
        self.agents.get(id.0)
    }

    pub fn locations(&self) -> &[LocationState] {
        &self.locations
    }

    pub fn location(&self, id: &str) -> Option<&LocationState> {
        self.locations.iter().find(|l| l.id == id)
    }

    pub fn location_index(&self, id: &str) -> Option<usize> {
        self.locations.iter().position(|l| l.id == id)
    }

    /// Where an agent currently stands.
    pub fn position_of(&self, id: AgentId) -> Option<&LocationState> {
        self.agent(id).map(|a| &self.locations[a.at])
    }

    pub fn orders(&self) -> &[DishOrder] {
        &self.orders
    }

    pub fn accomplished(&self) -> &[String] {
        &self.accomplished
    }

    pub fn counters(&self) -> OrderCounters {
        self.counters
    }

    /// Every event since the episode started, including the first order.
    pub fn event_log(&self) -> &[KitchenEvent] {
        &self.events
    }

    /// All items currently in the world: on locations (including tool
    /// inputs being cooked) and in agents' hands.
    pub fn item_census(&self) -> Multiset {
        let mut all = Multiset::new();
        for l in &self.locations {
            all.extend(&l.contents);
        }
        for a in &self.agents {
            if let Some(h) = &a.holding {
                all.add(h);
            }
        }
        all
    }

    fn introduce_order(&mut self, at_step: u32, events: &mut Vec<KitchenEvent>, flow: &mut ItemFlow) {
        let pool = &self.level.order_schedule.dish_pool;
        let dish = pool[self.rng.gen_range(0..pool.len())].clone();
        let id = self.next_order_id;
        self.next_order_id += 1;
        self.orders.push(DishOrder {
            id,
            dish: dish.clone(),
            lifetime: self.level.order_schedule.lifetime,
            issued_at: at_step,
        });
        let restock = self.level.restock_location();
        let raw = self.level.recipe(&dish).expect("dish pool is validated").raw_ingredients();
        for item in raw.items() {
            self.locations[restock].contents.add(item);
            flow.restocked.push(item.to_string());
        }
        self.counters.introduced += 1;
        events.push(KitchenEvent::OrderIntroduced { step: at_step, order: id, dish });
    }

    fn check_action(&self, key: AgentId, action: &KitchenAction) -> Result<(), KitchenError> {
        if key.0 >= self.agents.len() {
            return Err(KitchenError::UnknownAgent(key.to_string()));
        }
        if action.agent() != key {
            return Err(KitchenError::MisaddressedAction { key, actual: action.agent() });
        }
        if let Some(loc) = action.location() {
            if self.location_index(loc).is_none() {
                return Err(KitchenError::UnknownLocation(loc.to_string()));
            }
        }
        Ok(())
    }

    /// Advances one step. Actions resolve in ascending agent order against
    /// the evolving state; an action that fails only because a lower-numbered
    /// agent changed the world first reports `Contention`.
    pub fn step(&self, joint: &JointAction) -> Result<StepOutcome, KitchenError> {
        if self.is_terminal() {
            return Err(KitchenError::EpisodeOver(self.step));
        }
        for (key, action) in joint {
            self.check_action(*key, action)?;
        }
        if let Some(missing) = self.agent_ids().find(|id| !joint.contains_key(id)) {
            return Err(KitchenError::MissingAction(missing));
        }

        let t = self.step;
        let mut next = self.clone();
        let mut events = Vec::new();
        let mut flow = ItemFlow::default();
        let mut per_agent_result = BTreeMap::new();
        for (agent, action) in joint {
            let mut result = next.apply(action, t, &mut events, &mut flow);
            if !result.succeeded() && self.alone(action).succeeded() {
                result = ActionResult::Failed(FailReason::Contention);
            }
            per_agent_result.insert(*agent, result);
        }

        for loc in &mut next.locations {
            let Some(p) = &mut loc.processing else { continue };
            p.remaining_steps = p.remaining_steps.saturating_sub(1);
            if p.remaining_steps == 0 {
                let output = p.output_item.clone();
                flow.consumed.extend(loc.contents.items().map(str::to_string));
                loc.contents.clear();
                loc.contents.add(&output);
                flow.produced.push(output);
                loc.processing = None;
                loc.occupied_by = None;
            }
        }

        let mut live = Vec::with_capacity(next.orders.len());
        for mut order in std::mem::take(&mut next.orders) {
            order.lifetime -= 1;
            if order.lifetime == 0 {
                next.counters.expired += 1;
                events.push(KitchenEvent::OrderExpired { step: t, order: order.id, dish: order.dish });
            } else {
                live.push(order);
            }
        }
        next.orders = live;

        next.step = t + 1;
        if next.step % self.level.order_schedule.spawn_interval == 0 && next.step < self.level.max_steps {
            next.introduce_order(t, &mut events, &mut flow);
        }
        next.events.extend(events.iter().cloned());
        Ok(StepOutcome { next_state: next, events, per_agent_result, item_flow: flow })
    }

    /// Result of `action` if it were the only non-idle action this step.
    fn alone(&self, action: &KitchenAction) -> ActionResult {
        let mut scratch = self.clone();
        scratch.apply(action, self.step, &mut Vec::new(), &mut ItemFlow::default())
    }

    fn apply(&mut self, action: &KitchenAction, t: u32, events: &mut Vec<KitchenEvent>, flow: &mut ItemFlow) -> ActionResult {
        use ActionResult::{Failed, Succeeded};
        let who = action.agent().0;
        let target = action.location().and_then(|id| self.location_index(id));
        match action {
            KitchenAction::Noop { .. } => Succeeded,
            KitchenAction::Goto { .. } => {
                let target = target.expect("checked");
                if self.agents[who].at == target {
                    return Failed(FailReason::AlreadyThere);
                }
                self.agents[who].at = target;
                Succeeded
            }
            KitchenAction::Get { item, .. } => {
                let target = target.expect("checked");
                if self.agents[who].at != target {
                    return Failed(FailReason::NotAtLocation);
                }
                if self.agents[who].holding.is_some() {
                    return Failed(FailReason::HandsFull);
                }
                let loc = &mut self.locations[target];
                if loc.processing.is_some() {
                    return Failed(FailReason::ToolBusy);
                }
                if !loc.contents.remove(item) {
                    return Failed(FailReason::ItemAbsent);
                }
                self.agents[who].holding = Some(item.clone());
                Succeeded
            }
            KitchenAction::Put { .. } => {
                let target = target.expect("checked");
                if self.agents[who].at != target {
                    return Failed(FailReason::NotAtLocation);
                }
                if self.agents[who].holding.is_none() {
                    return Failed(FailReason::HandsEmpty);
                }
                if self.locations[target].processing.is_some() {
                    return Failed(FailReason::ToolBusy);
                }
                let item = self.agents[who].holding.take().expect("checked");
                if self.locations[target].kind == LocationKind::ServingTable {
                    let matching = self
                        .orders
                        .iter()
                        .enumerate()
                        .filter(|(_, o)| o.dish == item)
                        .min_by_key(|(_, o)| (o.lifetime, o.id))
                        .map(|(k, _)| k);
                    if let Some(k) = matching {
                        let order = self.orders.remove(k);
                        self.counters.completed += 1;
                        self.accomplished.push(item.clone());
                        flow.served.push(item);
                        events.push(KitchenEvent::OrderCompleted { step: t, order: order.id, dish: order.dish });
                        return Succeeded;
                    }
                }
                self.locations[target].contents.add(&item);
                Succeeded
            }
            KitchenAction::Activate { agent, .. } => {
                let target = target.expect("checked");
                if self.agents[who].at != target {
                    return Failed(FailReason::NotAtLocation);
                }
                let loc = &self.locations[target];
                let Some(tool) = loc.kind.tool_kind() else {
                    return Failed(FailReason::NotATool);
                };
                if loc.processing.is_some() {
                    return Failed(FailReason::ToolBusy);
                }
                let step = self
                    .level
                    .recipes
                    .iter()
                    .flat_map(|r| r.steps.iter())
                    .find(|s| s.tool == tool && s.inputs == loc.contents);
                let Some(step) = step else {
                    return Failed(FailReason::NoMatchingRecipe);
                };
                let processing = Processing { remaining_steps: step.cook_steps, output_item: step.output.clone() };
                let loc = &mut self.locations[target];
                loc.processing = Some(processing);
                loc.occupied_by = Some(*agent);
                Succeeded
            }
        }
    }

    /// Every action `agent` could take right now that would succeed on its
    /// own, followed by `noop`.
    pub fn legal_actions(&self, agent: AgentId) -> Result<Vec<KitchenAction>, KitchenError> {
        let me = self.agent(agent).ok_or_else(|| KitchenError::UnknownAgent(agent.to_string()))?;
        let here = &self.locations[me.at];
        let mut candidates: Vec<KitchenAction> =
            self.locations.iter().map(|l| KitchenAction::goto(agent, &l.id)).collect();
        candidates.extend(here.contents.distinct().map(|item| KitchenAction::get(agent, &here.id, item)));
        candidates.push(KitchenAction::put(agent, &here.id));
        candidates.push(KitchenAction::activate(agent, &here.id));
        let mut legal: Vec<KitchenAction> =
            candidates.into_iter().filter(|a| self.alone(a).succeeded()).collect();
        legal.push(KitchenAction::noop(agent));
        Ok(legal)
    }

    /// Joint action where every agent idles.
    pub fn idle_joint(&self) -> JointAction {
        self.agent_ids().map(|a| (a, KitchenAction::noop(a))).collect()
    }
}

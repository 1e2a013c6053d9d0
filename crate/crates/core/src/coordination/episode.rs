use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::accounting::{
    capability_hint, efficiency, AccountingError, ActionHistogram, CallRole, CapabilityProfile, CostLedger,
    EfficiencyReport, PriceTable,
};
use crate::kitchen::trace::{TraceMeta, TraceRecord, TraceWriter};
use crate::kitchen::{observation_hash, render_observation, AgentId, KitchenAction, KitchenError, KitchenEvent, KitchenState, OrderCounters};
use crate::rational;

use super::{
    parse_action, parse_joint, parse_plan, prompts, CapabilityMode, ControllerMode, OrchestratorPolicy, Plan,
    PlannerPolicy, PolicyError, PolicyQuery, PolicyReply, RawDecision, ReplanRequest, RosterEntry, WorkerPolicy,
};

pub enum PolicyBindings {
    /// One policy per agent, in agent order.
    Individual(Vec<Box<dyn WorkerPolicy>>),
    Orchestrator(Box<dyn OrchestratorPolicy>),
    Planner { planner: Box<dyn PlannerPolicy>, workers: Vec<Box<dyn WorkerPolicy>> },
}

impl PolicyBindings {
    pub fn mode(&self) -> ControllerMode {
        match self {
            PolicyBindings::Individual(_) => ControllerMode::Individual,
            PolicyBindings::Orchestrator(_) => ControllerMode::Orchestrator,
            PolicyBindings::Planner { .. } => ControllerMode::Planner,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EpisodeConfig {
    /// Upper bound on steps run; the level's own limit still applies.
    pub budget: u32,
    pub capability_mode: CapabilityMode,
    /// Counts from earlier runs, added to this episode's live counts when
    /// building Informed-mode hints.
    pub prior_profile: Option<CapabilityProfile>,
    pub prices: PriceTable,
    /// Attach the list of currently successful actions to worker queries.
    pub legal_action_hint: bool,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        EpisodeConfig {
            budget: u32::MAX,
            capability_mode: CapabilityMode::OnTheFly,
            prior_profile: None,
            prices: PriceTable::standard(),
            legal_action_hint: false,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CoordinationError {
    #[error("policy bindings do not fit the episode: {0}")]
    BindingMismatch(String),
    #[error(transparent)]
    Kitchen(#[from] KitchenError),
    #[error(transparent)]
    Accounting(#[from] AccountingError),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyCallCounts {
    pub planner: u32,
    pub orchestrator: u32,
    pub worker: u32,
}

/// A step on which some agent got `noop` in place of its policy's answer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FallbackNote {
    pub step: u32,
    /// `None` when the whole plan was affected (a failed replan).
    pub agent: Option<AgentId>,
    pub role: CallRole,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub step: u32,
    pub decisions: BTreeMap<AgentId, RawDecision>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanRecord {
    pub step: u32,
    pub prompt: String,
    pub reply: Option<String>,
    /// False when the reply was unusable and the previous plan stayed in force.
    pub accepted: bool,
    pub plan: Plan,
    /// Counts behind the capability block, when one was sent.
    pub hint_profile: Option<CapabilityProfile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeReport {
    pub mode: ControllerMode,
    pub capability_mode: CapabilityMode,
    pub level_id: String,
    pub agents: usize,
    pub seed: u64,
    pub steps_run: u32,
    pub completed_orders: u32,
    pub counters: OrderCounters,
    /// Every event, including the first order issued before step 0.
    pub event_log: Vec<KitchenEvent>,
    pub decisions: Vec<DecisionRecord>,
    pub fallbacks: Vec<FallbackNote>,
    pub planner_invocations: u32,
    pub plans: Vec<PlanRecord>,
    pub policy_calls: PolicyCallCounts,
    pub ledger: CostLedger,
    pub profile: CapabilityProfile,
    pub efficiency: EfficiencyReport,
    pub trace_meta: TraceMeta,
    pub trace: Vec<TraceRecord>,
    pub final_hash: String,
}

impl EpisodeReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn histogram(&self) -> &ActionHistogram {
        &self.efficiency.action_counts
    }
}

struct Runner<'a> {
    config: &'a EpisodeConfig,
    roster: Vec<AgentId>,
    locations: Vec<String>,
    ledger: CostLedger,
    profile: CapabilityProfile,
    fallbacks: Vec<FallbackNote>,
    calls: PolicyCallCounts,
}

impl Runner<'_> {
    fn book(&mut self, step: u32, role: CallRole, reply: &PolicyReply) -> Result<(), CoordinationError> {
        if let Some(u) = &reply.usage {
            self.ledger.record_call(
                &self.config.prices,
                step,
                role,
                &u.model_id,
                i64::try_from(u.tokens_in).unwrap_or(i64::MAX),
                i64::try_from(u.tokens_out).unwrap_or(i64::MAX),
            )?;
        }
        Ok(())
    }

    fn fallback(&mut self, step: u32, agent: Option<AgentId>, role: CallRole, reason: String) {
        log::warn!("step {step}: {role} fell back ({reason})");
        self.fallbacks.push(FallbackNote { step, agent, role, reason });
    }

    fn worker_decision(
        &mut self,
        policy: &mut dyn WorkerPolicy,
        query: &PolicyQuery,
        state: &KitchenState,
    ) -> Result<RawDecision, CoordinationError> {
        let agent = query.agent.expect("worker query");
        let role = CallRole::Worker(agent);
        self.calls.worker += 1;
        match policy.act(query, state) {
            Ok(reply) => {
                self.book(query.step, role, &reply)?;
                let d = parse_action(&reply.text, &[agent], &self.locations);
                if !d.parse_ok {
                    self.fallback(query.step, Some(agent), role, format!("unparseable reply: {:?}", reply.text));
                }
                Ok(d)
            }
            Err(e) => {
                self.fallback(query.step, Some(agent), role, e.to_string());
                Ok(RawDecision::failed(""))
            }
        }
    }

    fn roster_models(&self, bindings: &PolicyBindings) -> Vec<(AgentId, String)> {
        match bindings {
            PolicyBindings::Individual(w) | PolicyBindings::Planner { workers: w, .. } => {
                self.roster.iter().zip(w).map(|(a, p)| (*a, p.model_id().to_string())).collect()
            }
            PolicyBindings::Orchestrator(o) => self.roster.iter().map(|a| (*a, o.model_id().to_string())).collect(),
        }
    }
}

fn query(state: &KitchenState, agent: Option<AgentId>, roster: &[AgentId], observation: &str) -> PolicyQuery {
    PolicyQuery {
        step: state.step_index(),
        agent,
        roster: roster.to_vec(),
        observation: observation.to_string(),
        plan_excerpt: None,
        directives: None,
        legal_action_hint: None,
    }
}

/// Runs one episode from `env` until the level ends or `budget` steps have
/// been taken.
pub fn run_episode(
    env: KitchenState,
    mut bindings: PolicyBindings,
    config: &EpisodeConfig,
) -> Result<EpisodeReport, CoordinationError> {
    let roster: Vec<AgentId> = env.agent_ids().collect();
    let needed = roster.len();
    match &bindings {
        PolicyBindings::Individual(w) | PolicyBindings::Planner { workers: w, .. } if w.len() != needed => {
            return Err(CoordinationError::BindingMismatch(format!(
                "{} worker policies for {needed} agents",
                w.len()
            )));
        }
        _ => {}
    }
    let mode = bindings.mode();
    let mut run = Runner {
        config,
        locations: env.locations().iter().map(|l| l.id.clone()).collect(),
        roster,
        ledger: CostLedger::new(),
        profile: CapabilityProfile::new(),
        fallbacks: Vec::new(),
        calls: PolicyCallCounts::default(),
    };
    let models = run.roster_models(&bindings);
    let start_step = env.step_index();
    let mut trace = TraceWriter::new(&env);
    let mut state = env;
    let mut decisions_log = Vec::new();
    let mut histogram = ActionHistogram::default();
    let mut plan: Option<Plan> = None;
    let mut plans = Vec::new();
    let mut last_events: Vec<KitchenEvent> =
        state.event_log().iter().filter(|e| e.step() == start_step).cloned().collect();
    let mut steps_run = 0;

    while steps_run < config.budget && !state.is_terminal() {
        let t = state.step_index();
        let observation = render_observation(&state);
        let decisions: BTreeMap<AgentId, RawDecision> = match &mut bindings {
            PolicyBindings::Individual(workers) => {
                let mut out = BTreeMap::new();
                for (agent, worker) in run.roster.clone().into_iter().zip(workers.iter_mut()) {
                    let mut q = query(&state, Some(agent), &run.roster, &observation);
                    if config.legal_action_hint {
                        q.legal_action_hint = Some(state.legal_actions(agent)?);
                    }
                    out.insert(agent, run.worker_decision(worker.as_mut(), &q, &state)?);
                }
                out
            }
            PolicyBindings::Orchestrator(central) => {
                run.calls.orchestrator += 1;
                let q = query(&state, None, &run.roster, &observation);
                match central.act(&q, &state) {
                    Ok(reply) => {
                        run.book(t, CallRole::Orchestrator, &reply)?;
                        let joint = parse_joint(&reply.text, &run.roster, &run.locations);
                        for (agent, d) in &joint {
                            if !d.parse_ok {
                                run.fallback(t, Some(*agent), CallRole::Orchestrator, "no action for this agent".into());
                            }
                        }
                        joint
                    }
                    Err(e) => {
                        for agent in run.roster.clone() {
                            run.fallback(t, Some(agent), CallRole::Orchestrator, e.to_string());
                        }
                        run.roster.iter().map(|a| (*a, RawDecision::failed(""))).collect()
                    }
                }
            }
            PolicyBindings::Planner { planner, workers } => {
                if steps_run == 0 || !last_events.is_empty() {
                    let record = replan(&mut run, planner.as_mut(), &state, &observation, &last_events, plan.as_ref(), &models)?;
                    plan = Some(record.plan.clone());
                    plans.push(record);
                }
                let current = plan.as_ref().expect("planned at the first step");
                let mut out = BTreeMap::new();
                for (agent, worker) in run.roster.clone().into_iter().zip(workers.iter_mut()) {
                    let mut q = query(&state, Some(agent), &run.roster, &observation);
                    q.plan_excerpt = Some(current.excerpt(agent));
                    q.directives = Some(current.for_agent(agent).to_vec());
                    if config.legal_action_hint {
                        q.legal_action_hint = Some(state.legal_actions(agent)?);
                    }
                    out.insert(agent, run.worker_decision(worker.as_mut(), &q, &state)?);
                }
                out
            }
        };

        let joint: BTreeMap<AgentId, KitchenAction> = run
            .roster
            .iter()
            .map(|a| (*a, decisions[a].parsed.clone().unwrap_or_else(|| KitchenAction::noop(*a))))
            .collect();
        let outcome = state.step(&joint)?;
        for (agent, model) in &models {
            let ok = decisions[agent].parse_ok && outcome.per_agent_result[agent].succeeded();
            run.profile.update(*agent, model, ok);
        }
        for action in joint.values() {
            histogram.add(action.kind());
        }
        trace.record(&state, &joint, &outcome.per_agent_result, &outcome.events, &outcome.next_state);
        decisions_log.push(DecisionRecord { step: t, decisions });
        last_events = outcome.events;
        state = outcome.next_state;
        steps_run += 1;
    }

    let completed = state.counters().completed;
    Ok(EpisodeReport {
        mode,
        capability_mode: config.capability_mode,
        level_id: state.level().level_id.clone(),
        agents: run.roster.len(),
        seed: state.seed(),
        steps_run,
        completed_orders: completed,
        counters: state.counters(),
        event_log: state.event_log().to_vec(),
        decisions: decisions_log,
        fallbacks: run.fallbacks,
        planner_invocations: run.calls.planner,
        plans,
        policy_calls: run.calls,
        efficiency: efficiency(completed, &run.ledger, &histogram),
        ledger: run.ledger,
        profile: run.profile,
        trace_meta: trace.meta,
        trace: trace.records,
        final_hash: observation_hash(&state),
    })
}

fn replan(
    run: &mut Runner<'_>,
    planner: &mut dyn PlannerPolicy,
    state: &KitchenState,
    observation: &str,
    events: &[KitchenEvent],
    prior: Option<&Plan>,
    models: &[(AgentId, String)],
) -> Result<PlanRecord, CoordinationError> {
    let t = state.step_index();
    let hint_profile = match run.config.capability_mode {
        CapabilityMode::Informed => Some(match &run.config.prior_profile {
            Some(p) => p.merged(&run.profile),
            None => run.profile.clone(),
        }),
        CapabilityMode::OnTheFly => None,
    };
    let capability_block = hint_profile.as_ref().map(|p| capability_hint(p, models));
    let roster: Vec<RosterEntry> = models
        .iter()
        .map(|(agent, model)| RosterEntry {
            agent: *agent,
            model_id: model.clone(),
            success_rate: hint_profile
                .as_ref()
                .and_then(|p| p.success_rate(*agent, model))
                .map(|r| rational::to_f64(&r)),
        })
        .collect();
    let prompt = prompts::planner_prompt(observation, state.level(), events, prior, models, capability_block.as_deref());
    let request = ReplanRequest {
        step: t,
        observation: observation.to_string(),
        events: events.to_vec(),
        prior: prior.cloned(),
        roster,
        capability_block,
        prompt: prompt.clone(),
    };
    run.calls.planner += 1;
    let reply: Result<PolicyReply, PolicyError> = planner.replan(&request, state);
    let (reply_text, parsed) = match reply {
        Ok(reply) => {
            run.book(t, CallRole::Planner, &reply)?;
            let parsed = parse_plan(&reply.text, &run.roster, state.level(), t, events.to_vec());
            (Some(reply.text), parsed)
        }
        Err(e) => {
            run.fallback(t, None, CallRole::Planner, format!("replan failed: {e}"));
            (None, None)
        }
    };
    let accepted = parsed.is_some();
    if reply_text.is_some() && !accepted {
        run.fallback(t, None, CallRole::Planner, "replan failed: unparseable plan".into());
    }
    let plan = parsed
        .or_else(|| prior.cloned())
        .unwrap_or_else(|| Plan::idle(&run.roster, t, events.to_vec()));
    Ok(PlanRecord { step: t, prompt, reply: reply_text, accepted, plan, hint_profile })
}

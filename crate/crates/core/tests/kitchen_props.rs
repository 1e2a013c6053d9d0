//! Simulator invariants under random joint actions.

use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;
use taskalloc::kitchen::{
    levels, load_level, observation_hash, render_observation, AgentId, JointAction, KitchenAction, KitchenEvent,
    KitchenState, Multiset,
};
use taskalloc::seed;

/// Every action string the level admits, valid or not.
fn action_universe(state: &KitchenState, agent: AgentId) -> Vec<KitchenAction> {
    let level = state.level();
    let mut items: Vec<String> = level
        .recipes
        .iter()
        .flat_map(|r| r.steps.iter())
        .flat_map(|s| s.inputs.items().map(str::to_string).chain(std::iter::once(s.output.clone())))
        .collect();
    items.sort();
    items.dedup();
    let mut out = vec![KitchenAction::noop(agent)];
    for l in &level.locations {
        out.push(KitchenAction::goto(agent, &l.id));
        out.push(KitchenAction::put(agent, &l.id));
        out.push(KitchenAction::activate(agent, &l.id));
        for item in &items {
            out.push(KitchenAction::get(agent, &l.id, item));
        }
    }
    out
}

/// Mostly legal moves, sometimes arbitrary ones.
fn random_joint(state: &KitchenState, rng: &mut impl Rng) -> JointAction {
    state
        .agent_ids()
        .map(|a| {
            let pool = if rng.gen_bool(0.75) { state.legal_actions(a).unwrap() } else { action_universe(state, a) };
            (a, pool.choose(rng).unwrap().clone())
        })
        .collect()
}

fn level_ids() -> impl Strategy<Value = &'static str> {
    prop::sample::select(levels::builtin_ids().to_vec())
}

fn live_ids(state: &KitchenState) -> BTreeMap<u32, u32> {
    state.orders().iter().map(|o| (o.id, o.lifetime)).collect()
}

fn census_plus(mut base: Multiset, added: &[String]) -> Multiset {
    for i in added {
        base.add(i);
    }
    base
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn step_invariants_hold(level in level_ids(), agents in 1usize..=6, seed in any::<u64>()) {
        let config = levels::builtin(level).unwrap();
        let mut state = load_level(&config, agents, seed).unwrap();
        let mut rng = seed::rng(seed ^ 0x5eed);
        let mut steps = 0;
        while !state.is_terminal() {
            let joint = random_joint(&state, &mut rng);
            let out = state.step(&joint).unwrap();
            let next = &out.next_state;
            steps += 1;

            // Order accounting.
            let c = next.counters();
            prop_assert_eq!(c.introduced, c.completed + c.expired + next.orders().len() as u32);

            // Item conservation: before + restocked + produced = after + consumed + served.
            let lhs = census_plus(census_plus(state.item_census(), &out.item_flow.restocked), &out.item_flow.produced);
            let rhs = census_plus(census_plus(next.item_census(), &out.item_flow.consumed), &out.item_flow.served);
            prop_assert_eq!(lhs, rhs);

            // Lifetimes fall by one; orders that vanish were completed or expired.
            let before = live_ids(&state);
            let after = live_ids(next);
            for (id, life) in &before {
                match after.get(id) {
                    Some(l) => prop_assert_eq!(*l, life - 1),
                    None => {
                        let closed = out.events.iter().any(|e| {
                            e.order() == *id
                                && matches!(e, KitchenEvent::OrderCompleted { .. } | KitchenEvent::OrderExpired { .. })
                        });
                        prop_assert!(closed, "order {} vanished without an event", id);
                    }
                }
            }

            // One result per agent.
            prop_assert_eq!(out.per_agent_result.len(), agents);
            state = out.next_state;
        }
        prop_assert_eq!(steps, config.max_steps);
        prop_assert!(state.step(&state.idle_joint()).is_err());
    }

    #[test]
    fn same_inputs_same_outputs(level in level_ids(), agents in 1usize..=4, seed in any::<u64>()) {
        let config = levels::builtin(level).unwrap();
        let run = || {
            let mut state = load_level(&config, agents, seed).unwrap();
            let mut rng = seed::rng(seed.rotate_left(7));
            let mut hashes = vec![observation_hash(&state)];
            while !state.is_terminal() {
                let joint = random_joint(&state, &mut rng);
                state = state.step(&joint).unwrap().next_state;
                hashes.push(observation_hash(&state));
            }
            (serde_json::to_string(state.event_log()).unwrap(), hashes, render_observation(&state))
        };
        prop_assert_eq!(run(), run());
    }

    #[test]
    fn legal_actions_are_exactly_the_solo_successes(level in level_ids(), agents in 1usize..=3, seed in any::<u64>(), steps in 0usize..40) {
        let config = levels::builtin(level).unwrap();
        let mut state = load_level(&config, agents, seed).unwrap();
        let mut rng = seed::rng(seed);
        for _ in 0..steps {
            let joint = random_joint(&state, &mut rng);
            state = state.step(&joint).unwrap().next_state;
        }
        for a in state.agent_ids().collect::<Vec<_>>() {
            let legal = state.legal_actions(a).unwrap();
            for action in action_universe(&state, a) {
                let mut joint = state.idle_joint();
                joint.insert(a, action.clone());
                let ok = state.step(&joint).unwrap().per_agent_result[&a].succeeded();
                prop_assert_eq!(ok, legal.contains(&action), "{}", action);
            }
        }
    }
}

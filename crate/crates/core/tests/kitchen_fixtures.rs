//! Hand-written episodes on the shipped levels.

use taskalloc::kitchen::trace::{self, TraceWriter};
use taskalloc::kitchen::{
    levels, load_level, render_observation, ActionResult, AgentId, FailReason, JointAction, KitchenAction,
    KitchenEvent,
};

fn joint(a0: &str, a1: &str) -> JointAction {
    [(AgentId(0), a0.parse::<KitchenAction>().unwrap()), (AgentId(1), a1.parse::<KitchenAction>().unwrap())]
        .into_iter()
        .collect()
}

/// Agent 0 fetches and loads the salmon, agent 1 runs the blender and serves.
const SALMON_MEATCAKE: &[(&str, &str)] = &[
    ("goto(agent0, storage0)", "goto(agent1, blender0)"),
    ("get(agent0, storage0, salmon)", "noop(agent1)"),
    ("goto(agent0, blender0)", "noop(agent1)"),
    ("put(agent0, blender0)", "noop(agent1)"),
    ("noop(agent0)", "activate(agent1, blender0)"),
    ("goto(agent0, servingtable0)", "noop(agent1)"),
    ("noop(agent0)", "noop(agent1)"),
    ("noop(agent0)", "get(agent1, blender0, salmonMeatcake)"),
    ("noop(agent0)", "goto(agent1, servingtable0)"),
    ("noop(agent0)", "put(agent1, servingtable0)"),
];

#[test]
fn two_agents_serve_salmon_meatcake_in_time() {
    let level = levels::builtin("level_1").unwrap();
    let mut state = load_level(&level, 2, 0).unwrap();
    let mut writer = TraceWriter::new(&state);
    let mut events = Vec::new();
    for (k, (a0, a1)) in SALMON_MEATCAKE.iter().enumerate() {
        let j = joint(a0, a1);
        let out = state.step(&j).unwrap();
        assert!(out.per_agent_result.values().all(ActionResult::succeeded), "step {k}: {:?}", out.per_agent_result);
        match k {
            3 => assert!(render_observation(&out.next_state).contains("inside(blender0, salmon)")),
            4 => assert!(render_observation(&out.next_state).contains("cooking(blender0, salmonMeatcake, 2)")),
            6 => assert!(render_observation(&out.next_state).contains("inside(blender0, salmonMeatcake)")),
            _ => {}
        }
        writer.record(&state, &j, &out.per_agent_result, &out.events, &out.next_state);
        events.extend(out.events.clone());
        state = out.next_state;
    }
    assert_eq!(
        events,
        vec![KitchenEvent::OrderCompleted { step: 9, order: 0, dish: "salmonMeatcake".into() }]
    );
    assert_eq!(state.counters().completed, 1);
    assert_eq!(state.accomplished(), ["salmonMeatcake".to_string()]);
    assert!(render_observation(&state).ends_with("Accomplished Tasks\nsalmonMeatcake\n"));

    // The recorded trace replays to the same state.
    let records = trace::from_jsonl(&writer.to_jsonl()).unwrap();
    let meta = trace::meta_from_json(&writer.meta_json()).unwrap();
    let replayed = trace::replay(&meta, &records).unwrap();
    assert_eq!(render_observation(&replayed), render_observation(&state));
}

#[test]
fn serving_after_expiry_leaves_dish_on_table() {
    let level = levels::builtin("level_1").unwrap();
    let mut state = load_level(&level, 2, 0).unwrap();
    // Same route, but agent 1 waits two extra steps before serving.
    let mut script: Vec<(&str, &str)> = SALMON_MEATCAKE[..9].to_vec();
    script.push(("noop(agent0)", "noop(agent1)"));
    script.push(("noop(agent0)", "put(agent1, servingtable0)"));
    let mut expired_at = None;
    for (k, (a0, a1)) in script.iter().enumerate() {
        let out = state.step(&joint(a0, a1)).unwrap();
        if out.events.iter().any(|e| matches!(e, KitchenEvent::OrderExpired { .. })) {
            expired_at = Some(k);
        }
        state = out.next_state;
    }
    assert_eq!(expired_at, Some(9), "order issued at 0 with lifetime 10 expires at the end of step 9");
    assert_eq!(state.counters().completed, 0);
    assert!(render_observation(&state).contains("inside(servingtable0, salmonMeatcake)"));
}

#[test]
fn two_agents_grabbing_one_salmon_contend() {
    let level = levels::builtin("level_1").unwrap();
    let mut state = load_level(&level, 2, 0).unwrap();
    state = state.step(&joint("goto(agent0, storage0)", "goto(agent1, storage0)")).unwrap().next_state;
    let out = state.step(&joint("get(agent0, storage0, salmon)", "get(agent1, storage0, salmon)")).unwrap();
    assert_eq!(out.per_agent_result[&AgentId(0)], ActionResult::Succeeded);
    assert_eq!(out.per_agent_result[&AgentId(1)], ActionResult::Failed(FailReason::Contention));
}

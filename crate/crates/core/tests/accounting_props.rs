//! Ledger and efficiency arithmetic.

use num_rational::Ratio;
use proptest::prelude::*;
use taskalloc::accounting::{efficiency, ActionHistogram, CallRole, CapabilityProfile, CostLedger, PriceTable};
use taskalloc::kitchen::{ActionKind, AgentId};
use taskalloc::rational::Rational;

const MODELS: [&str; 5] = ["claude-3.7", "gpt-4o", "gpt-4o-mini", "Llama-3.1-70B", "Qwen2.5-32B"];

/// Reference prices in dollars per million tokens, written as hundredths.
fn price_cents(model: &str) -> (i128, i128) {
    match model {
        "claude-3.7" => (300, 1500),
        "gpt-4o" => (250, 1000),
        "gpt-4o-mini" => (15, 60),
        "Llama-3.1-70B" => (80, 280),
        "Qwen2.5-32B" => (40, 140),
        _ => unreachable!(),
    }
}

fn calls() -> impl Strategy<Value = Vec<(usize, i64, i64)>> {
    prop::collection::vec((0..MODELS.len(), 0i64..3_000_000, 0i64..500_000), 1..40)
}

fn ledger(calls: &[(usize, i64, i64)], scale: i64) -> CostLedger {
    let prices = PriceTable::standard();
    let mut l = CostLedger::new();
    for (step, (m, tin, tout)) in calls.iter().enumerate() {
        l.record_call(&prices, step as u32, CallRole::Planner, MODELS[*m], tin * scale, tout * scale).unwrap();
    }
    l
}

proptest! {
    #[test]
    fn total_is_the_exact_row_sum(calls in calls()) {
        let l = ledger(&calls, 1);
        let by_rows: Rational = l.rows.iter().map(|r| r.usd).sum();
        prop_assert_eq!(l.total_usd(), by_rows);
        // Independent price arithmetic.
        let reference: Rational = calls
            .iter()
            .map(|(m, tin, tout)| {
                let (pi, po) = price_cents(MODELS[*m]);
                Ratio::new(pi * i128::from(*tin) + po * i128::from(*tout), 100 * 1_000_000)
            })
            .sum();
        prop_assert_eq!(l.total_usd(), reference);
    }

    #[test]
    fn doubling_tokens_halves_efficiency(calls in calls(), completed in 0u32..50) {
        let hist = ActionHistogram::default();
        let once = efficiency(completed, &ledger(&calls, 1), &hist);
        let twice = efficiency(completed, &ledger(&calls, 2), &hist);
        match (once.efficiency, twice.efficiency) {
            (Some(a), Some(b)) => prop_assert_eq!(a, b * Rational::from_integer(2)),
            (None, None) => prop_assert!(once.total_usd == Rational::from_integer(0)),
            other => prop_assert!(false, "{:?}", other),
        }
    }

    #[test]
    fn histogram_fractions_sum_to_one(kinds in prop::collection::vec(0usize..5, 1..500)) {
        let h: ActionHistogram = kinds.iter().map(|&k| ActionKind::ALL[k]).collect();
        prop_assert_eq!(h.total(), kinds.len() as u64);
        let sum: f64 = h.fractions().values().sum();
        prop_assert!((sum - 1.0).abs() < 1e-9);
    }

    #[test]
    fn profile_counters_only_grow(updates in prop::collection::vec((0usize..3, any::<bool>()), 0..200)) {
        let mut p = CapabilityProfile::new();
        let mut prev = p.clone();
        for (a, ok) in updates {
            p.update(AgentId(a), "m", ok);
            for e in prev.entries() {
                let now = p.get(e.agent, &e.model_id).unwrap();
                prop_assert!(now.actions_attempted >= e.actions_attempted);
                prop_assert!(now.actions_succeeded >= e.actions_succeeded);
                prop_assert!(now.actions_succeeded <= now.actions_attempted);
            }
            prev = p.clone();
        }
    }
}

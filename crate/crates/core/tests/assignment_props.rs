//! Solver and scorer properties, checked against permutation enumeration.

use proptest::prelude::*;
use taskalloc::assignment::{
    brute_force_solve, hungarian_solve, score_batch, validate, Candidate, CostMatrix, OptimalityCriterion,
};

fn matrix(max_n: usize, max_cost: i64) -> impl Strategy<Value = CostMatrix> {
    (2..=max_n).prop_flat_map(move |n| {
        prop::collection::vec(prop::collection::vec(0..=max_cost, n), n)
            .prop_map(|rows| CostMatrix::new(rows).unwrap())
    })
}

/// Every permutation of `0..n`, in lexicographic order.
fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn go(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for j in 0..used.len() {
            if !used[j] {
                used[j] = true;
                prefix.push(j);
                go(prefix, used, out);
                prefix.pop();
                used[j] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

fn optimal_set(m: &CostMatrix) -> (i64, Vec<Vec<usize>>) {
    let perms = permutations(m.n());
    let best = perms.iter().map(|p| m.cost_of(p)).min().unwrap();
    (best, perms.into_iter().filter(|p| m.cost_of(p) == best).collect())
}

/// Reference validity: a permutation of `0..n` whose claimed total, if any, is right.
fn reference_valid(m: &CostMatrix, c: &Candidate) -> bool {
    let n = m.n();
    if c.mapping.len() != n {
        return false;
    }
    let mut seen = vec![false; n];
    for a in &c.mapping {
        match a {
            Some(j) if *j >= 0 && (*j as usize) < n && !seen[*j as usize] => seen[*j as usize] = true,
            _ => return false,
        }
    }
    let mapping: Vec<usize> = c.mapping.iter().map(|a| a.unwrap() as usize).collect();
    c.claimed_cost.is_none_or(|claimed| claimed == m.cost_of(&mapping) as f64)
}

fn candidate_for(n: usize) -> impl Strategy<Value = Candidate> {
    (
        prop::collection::vec(prop::option::weighted(0.9, -1i64..=(n as i64)), n.saturating_sub(1)..=n + 1),
        prop::option::of(0i64..200),
    )
        .prop_map(|(mapping, claimed)| Candidate {
            mapping,
            claimed_cost: claimed.map(|c| c as f64),
            claimed_task_costs: None,
            raw_text: String::new(),
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn hungarian_matches_enumeration(m in matrix(7, 12)) {
        let h = hungarian_solve(&m);
        let b = brute_force_solve(&m).unwrap();
        let (best, optima) = optimal_set(&m);
        prop_assert_eq!(h.total_cost, best);
        prop_assert_eq!(b.total_cost, best);
        // Shared tie-break: the lexicographically smallest optimum.
        prop_assert_eq!(&h.mapping, &optima[0]);
        prop_assert_eq!(&b.mapping, &optima[0]);
    }

    #[test]
    fn hungarian_output_is_always_valid(m in matrix(8, 1000)) {
        let report = validate(&m, &Candidate::from_assignment(&hungarian_solve(&m)));
        prop_assert!(report.is_valid);
        prop_assert!(report.violations.is_empty());
    }

    #[test]
    fn row_offset_shifts_cost_and_keeps_optima(m in matrix(6, 20), row_seed in any::<usize>(), k in 0i64..50) {
        let row = row_seed % m.n();
        let shifted = m.with_row_offset(row, k).unwrap();
        let (best, optima) = optimal_set(&m);
        let (best2, optima2) = optimal_set(&shifted);
        prop_assert_eq!(best2, best + k);
        prop_assert_eq!(optima, optima2);
        prop_assert_eq!(hungarian_solve(&shifted).total_cost, hungarian_solve(&m).total_cost + k);
        prop_assert_eq!(brute_force_solve(&shifted).unwrap().total_cost, brute_force_solve(&m).unwrap().total_cost + k);
    }

    #[test]
    fn validate_agrees_with_reference(
        (m, c) in matrix(6, 30).prop_flat_map(|m| { let n = m.n(); (Just(m), candidate_for(n)) })
    ) {
        let report = validate(&m, &c);
        prop_assert_eq!(report.is_valid, reference_valid(&m, &c));
        prop_assert_eq!(report.is_valid, report.violations.is_empty());
    }

    #[test]
    fn accuracy_never_exceeds_validity(
        batch in prop::collection::vec(
            matrix(5, 9).prop_flat_map(|m| {
                let n = m.n();
                let exact = Candidate::from_assignment(&hungarian_solve(&m));
                (Just(m), prop_oneof![Just(exact), candidate_for(n)])
            }),
            1..20,
        ),
        strict in any::<bool>(),
    ) {
        let (instances, candidates): (Vec<_>, Vec<_>) = batch.into_iter().unzip();
        let criterion = if strict { OptimalityCriterion::StrictMapping } else { OptimalityCriterion::CostEquality };
        let score = score_batch(&instances, &candidates, criterion).unwrap();
        prop_assert!(score.accuracy <= score.validity_rate);
        prop_assert!(score.optimal_count <= score.valid_count);
        prop_assert_eq!(score.total, instances.len());
    }
}

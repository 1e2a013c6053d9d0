//! Square assignment problems: instance generation, exact solvers, and
//! scoring of candidate allocations produced by other allocators.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::seed;

/// Largest size `brute_force_solve` will enumerate (9! permutations).
pub const BRUTE_FORCE_MAX_N: usize = 9;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AssignmentError {
    #[error("invalid instance bounds: n={n}, lo={lo}, hi={hi}")]
    InvalidBounds { n: usize, lo: i64, hi: i64 },
    #[error("malformed cost matrix: {0}")]
    Malformed(String),
    #[error("instance of size {n} is too large for brute force (max {max})")]
    InstanceTooLarge { n: usize, max: usize },
    #[error("{instances} instances but {candidates} candidates")]
    LengthMismatch { instances: usize, candidates: usize },
}

/// `values[i][j]` is the cost of agent `j` performing task `i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawMatrix")]
pub struct CostMatrix {
    n: usize,
    values: Vec<Vec<i64>>,
}

#[derive(Deserialize)]
struct RawMatrix {
    n: usize,
    values: Vec<Vec<i64>>,
}

impl TryFrom<RawMatrix> for CostMatrix {
    type Error = AssignmentError;

    fn try_from(raw: RawMatrix) -> Result<Self, Self::Error> {
        let m = CostMatrix::new(raw.values)?;
        if m.n != raw.n {
            return Err(AssignmentError::Malformed(format!("declared n={} but matrix is {}x{}", raw.n, m.n, m.n)));
        }
        Ok(m)
    }
}

impl CostMatrix {
    pub fn new(values: Vec<Vec<i64>>) -> Result<Self, AssignmentError> {
        let n = values.len();
        if n == 0 {
            return Err(AssignmentError::Malformed("empty matrix".into()));
        }
        for (i, row) in values.iter().enumerate() {
            if row.len() != n {
                return Err(AssignmentError::Malformed(format!("row {i} has {} entries, expected {n}", row.len())));
            }
            if let Some(v) = row.iter().find(|v| **v < 0) {
                return Err(AssignmentError::Malformed(format!("negative cost {v} in row {i}")));
            }
        }
        Ok(Self { n, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[Vec<i64>] {
        &self.values
    }

    pub fn get(&self, task: usize, agent: usize) -> i64 {
        self.values[task][agent]
    }

    pub fn cost_of(&self, mapping: &[usize]) -> i64 {
        mapping.iter().enumerate().map(|(i, &j)| self.values[i][j]).sum()
    }

    /// Copy with `k` added to every entry of `row`.
    pub fn with_row_offset(&self, row: usize, k: i64) -> Result<Self, AssignmentError> {
        let mut values = self.values.clone();
        values[row].iter_mut().for_each(|v| *v += k);
        Self::new(values)
    }
}

impl fmt::Display for CostMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:>8}", "")?;
        for j in 0..self.n {
            write!(f, " {:>8}", format!("agent{j}"))?;
        }
        writeln!(f)?;
        for (i, row) in self.values.iter().enumerate() {
            write!(f, "{:>8}", format!("task{i}"))?;
            for v in row {
                write!(f, " {v:>8}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    /// `mapping[i]` is the agent given task `i`.
    pub mapping: Vec<usize>,
    pub total_cost: i64,
}

/// Draws an `n x n` matrix of integers uniform on `[lo, hi]`.
pub fn generate_instance(n: usize, seed: u64, lo: i64, hi: i64) -> Result<CostMatrix, AssignmentError> {
    if n == 0 || lo > hi || lo < 0 {
        return Err(AssignmentError::InvalidBounds { n, lo, hi });
    }
    let mut rng = seed::rng(seed);
    let values = (0..n).map(|_| (0..n).map(|_| rng.gen_range(lo..=hi)).collect()).collect();
    CostMatrix::new(values)
}

/// Minimum-cost assignment in `O(n^3)` via shortest augmenting paths with
/// row/column potentials.
///
/// Among equal-cost optima the lexicographically smallest mapping is
/// returned: every optimal assignment uses only edges with zero reduced cost
/// under the final potentials, so the smallest one is found by fixing rows
/// in order and re-matching the rest along zero-reduced-cost alternating paths.
pub fn hungarian_solve(m: &CostMatrix) -> Assignment {
    let n = m.n;
    let a = &m.values;
    // 1-based potentials; column 0 is the virtual start.
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut row_of_col = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        row_of_col[0] = i;
        let mut j0 = 0usize;
        let mut min_slack = vec![i64::MAX; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of_col[j0];
            let mut delta = i64::MAX;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let reduced = a[i0 - 1][j - 1] - u[i0] - v[j];
                if reduced < min_slack[j] {
                    min_slack[j] = reduced;
                    way[j] = j0;
                }
                if min_slack[j] < delta {
                    delta = min_slack[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of_col[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_slack[j] -= delta;
                }
            }
            j0 = j1;
            if row_of_col[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of_col[j0] = row_of_col[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut col_of_row = vec![0usize; n];
    for j in 1..=n {
        col_of_row[row_of_col[j] - 1] = j - 1;
    }
    let tight: Vec<Vec<bool>> = (0..n)
        .map(|i| (0..n).map(|j| a[i][j] - u[i + 1] - v[j + 1] == 0).collect())
        .collect();
    debug_assert!((0..n).all(|i| (0..n).all(|j| a[i][j] - u[i + 1] - v[j + 1] >= 0)));
    debug_assert!((0..n).all(|i| tight[i][col_of_row[i]]));

    let mapping = lexicographic_tight_matching(&tight, col_of_row);
    let total_cost = m.cost_of(&mapping);
    Assignment { mapping, total_cost }
}

/// Turns a perfect matching on the `tight` graph into the lexicographically
/// smallest perfect matching of that graph.
fn lexicographic_tight_matching(tight: &[Vec<bool>], mut col_of_row: Vec<usize>) -> Vec<usize> {
    let n = col_of_row.len();
    let mut owner: Vec<Option<usize>> = vec![None; n];
    for (i, &j) in col_of_row.iter().enumerate() {
        owner[j] = Some(i);
    }
    let mut fixed = vec![false; n];

    fn augment(
        row: usize,
        tight: &[Vec<bool>],
        fixed: &[bool],
        visited: &mut [bool],
        owner: &mut [Option<usize>],
        col_of_row: &mut [usize],
    ) -> bool {
        for c in 0..tight.len() {
            if !tight[row][c] || fixed[c] || visited[c] {
                continue;
            }
            visited[c] = true;
            let free = match owner[c] {
                None => true,
                Some(r) => augment(r, tight, fixed, visited, owner, col_of_row),
            };
            if free {
                owner[c] = Some(row);
                col_of_row[row] = c;
                return true;
            }
        }
        false
    }

    for i in 0..n {
        let current = col_of_row[i];
        for j in 0..current {
            if !tight[i][j] || fixed[j] {
                continue;
            }
            let displaced = owner[j].expect("a perfect matching covers every column");
            // Row i takes j; its old column is freed for the displaced row's path.
            let snapshot = (owner.clone(), col_of_row.clone());
            owner[current] = None;
            owner[j] = Some(i);
            col_of_row[i] = j;
            fixed[j] = true;
            let mut visited = vec![false; n];
            let ok = augment(displaced, tight, &fixed, &mut visited, &mut owner, &mut col_of_row);
            fixed[j] = false;
            if ok {
                break;
            }
            owner = snapshot.0;
            col_of_row = snapshot.1;
        }
        fixed[col_of_row[i]] = true;
    }
    col_of_row
}

/// Exhaustive search over all permutations in lexicographic order; the first
/// strictly cheaper permutation wins, so ties keep the smallest mapping.
pub fn brute_force_solve(m: &CostMatrix) -> Result<Assignment, AssignmentError> {
    if m.n > BRUTE_FORCE_MAX_N {
        return Err(AssignmentError::InstanceTooLarge { n: m.n, max: BRUTE_FORCE_MAX_N });
    }
    let mut perm: Vec<usize> = (0..m.n).collect();
    let mut best = Assignment { total_cost: m.cost_of(&perm), mapping: perm.clone() };
    while next_permutation(&mut perm) {
        let cost = m.cost_of(&perm);
        if cost < best.total_cost {
            best = Assignment { mapping: perm.clone(), total_cost: cost };
        }
    }
    Ok(best)
}

fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else {
        return false;
    };
    let j = (i..p.len()).rev().find(|&j| p[j] > p[i - 1]).expect("pivot has a successor");
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Picks, task by task, the cheapest agent not yet taken.
pub fn greedy_first_row(m: &CostMatrix) -> Assignment {
    let mut taken = vec![false; m.n];
    let mut mapping = Vec::with_capacity(m.n);
    for row in &m.values {
        let j = (0..m.n)
            .filter(|&j| !taken[j])
            .min_by_key(|&j| (row[j], j))
            .expect("an agent remains for every task");
        taken[j] = true;
        mapping.push(j);
    }
    let total_cost = m.cost_of(&mapping);
    Assignment { mapping, total_cost }
}

/// An allocator's answer as submitted, before any checking.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    /// Agent per task; `null` marks a task the allocator left open.
    pub mapping: Vec<Option<i64>>,
    #[serde(default)]
    pub claimed_cost: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub claimed_task_costs: Option<Vec<Option<f64>>>,
    #[serde(default)]
    pub raw_text: String,
}

impl Candidate {
    pub fn from_assignment(a: &Assignment) -> Self {
        Self {
            mapping: a.mapping.iter().map(|&j| Some(j as i64)).collect(),
            claimed_cost: Some(a.total_cost as f64),
            claimed_task_costs: None,
            raw_text: String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Violation {
    /// One agent given several tasks, listed in task order.
    DuplicateAgent { agent: usize, tasks: Vec<usize> },
    /// A task with no agent named.
    UnassignedTask { task: usize },
    /// A mapping entry naming an agent that does not exist.
    AgentOutOfRange { task: usize, agent: i64 },
    /// A mapping entry beyond the last task.
    ExtraTask { task: usize },
    /// A claimed cost that differs from the matrix. `task` is `None` for the total.
    FabricatedCost { task: Option<usize>, claimed: f64, actual: i64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub is_valid: bool,
    pub violations: Vec<Violation>,
    /// Cost recomputed from the matrix over every in-range entry.
    pub actual_cost: i64,
}

pub fn validate(m: &CostMatrix, candidate: &Candidate) -> ValidityReport {
    let n = m.n;
    let mut violations = Vec::new();
    let mut tasks_of_agent: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut actual_cost = 0i64;
    let mut resolved: Vec<Option<usize>> = vec![None; n];

    for (task, entry) in candidate.mapping.iter().enumerate() {
        if task >= n {
            violations.push(Violation::ExtraTask { task });
            continue;
        }
        match *entry {
            None => {}
            Some(agent) if agent < 0 || agent as usize >= n => {
                violations.push(Violation::AgentOutOfRange { task, agent });
            }
            Some(agent) => {
                let agent = agent as usize;
                actual_cost += m.values[task][agent];
                resolved[task] = Some(agent);
                tasks_of_agent.entry(agent).or_default().push(task);
            }
        }
    }
    for (&agent, tasks) in &tasks_of_agent {
        if tasks.len() > 1 {
            violations.push(Violation::DuplicateAgent { agent, tasks: tasks.clone() });
        }
    }
    for task in 0..n {
        let out_of_range = matches!(candidate.mapping.get(task), Some(Some(a)) if *a < 0 || *a as usize >= n);
        if resolved[task].is_none() && !out_of_range {
            violations.push(Violation::UnassignedTask { task });
        }
    }
    if let Some(per_task) = &candidate.claimed_task_costs {
        for (task, claimed) in per_task.iter().enumerate().take(n) {
            if let (Some(claimed), Some(agent)) = (claimed, resolved[task]) {
                let actual = m.values[task][agent];
                if *claimed != actual as f64 {
                    violations.push(Violation::FabricatedCost { task: Some(task), claimed: *claimed, actual });
                }
            }
        }
    }
    if let Some(claimed) = candidate.claimed_cost {
        if claimed != actual_cost as f64 {
            violations.push(Violation::FabricatedCost { task: None, claimed, actual: actual_cost });
        }
    }
    ValidityReport { is_valid: violations.is_empty(), violations, actual_cost }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimalityCriterion {
    /// Optimal when valid and as cheap as the exact solver's answer.
    #[default]
    CostEquality,
    /// Optimal only when the mapping equals the exact solver's mapping.
    StrictMapping,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceScore {
    pub valid: bool,
    pub optimal: bool,
    pub candidate_cost: i64,
    pub optimal_cost: i64,
    pub violations: Vec<Violation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchScore {
    pub accuracy: f64,
    pub validity_rate: f64,
    pub valid_count: usize,
    pub optimal_count: usize,
    pub total: usize,
    pub criterion: OptimalityCriterion,
    pub per_instance: Vec<InstanceScore>,
}

pub fn score_batch(
    instances: &[CostMatrix],
    candidates: &[Candidate],
    criterion: OptimalityCriterion,
) -> Result<BatchScore, AssignmentError> {
    if instances.len() != candidates.len() {
        return Err(AssignmentError::LengthMismatch {
            instances: instances.len(),
            candidates: candidates.len(),
        });
    }
    let per_instance: Vec<InstanceScore> = instances
        .iter()
        .zip(candidates)
        .map(|(m, c)| {
            let report = validate(m, c);
            let truth = hungarian_solve(m);
            let optimal = report.is_valid
                && match criterion {
                    OptimalityCriterion::CostEquality => report.actual_cost == truth.total_cost,
                    OptimalityCriterion::StrictMapping => {
                        c.mapping.iter().map(|a| a.map(|a| a as usize)).eq(truth.mapping.iter().map(|&j| Some(j)))
                    }
                };
            InstanceScore {
                valid: report.is_valid,
                optimal,
                candidate_cost: report.actual_cost,
                optimal_cost: truth.total_cost,
                violations: report.violations,
            }
        })
        .collect();
    let total = per_instance.len();
    let valid_count = per_instance.iter().filter(|s| s.valid).count();
    let optimal_count = per_instance.iter().filter(|s| s.optimal).count();
    let ratio = |k: usize| if total == 0 { 0.0 } else { k as f64 / total as f64 };
    Ok(BatchScore {
        accuracy: ratio(optimal_count),
        validity_rate: ratio(valid_count),
        valid_count,
        optimal_count,
        total,
        criterion,
        per_instance,
    })
}

/// Prompt text asking a model to solve one instance.
pub fn render_prompt(m: &CostMatrix) -> String {
    format!(
        "You are an orchestrator assigning {n} tasks to {n} agents. Each agent must receive exactly one task \
         and each task exactly one agent. The cost of agent j performing task i is given below.\n\n{m}\n\
         Find the assignment with the minimum total cost. Answer with one line per task in the form \
         `task i -> agent j (cost c)` followed by a final line `total cost: C`.",
        n = m.n
    )
}

/// Parses a model's free-text answer. Accepts a JSON object with a `mapping`
/// (or `assignment`) array and optional `total_cost`, or lines such as
/// `task 0 -> agent 2 (cost 5)` plus `total cost: 17`.
pub fn parse_candidate(raw: &str, n: usize) -> Candidate {
    if let Some(c) = parse_json_candidate(raw) {
        return Candidate { raw_text: raw.to_string(), ..c };
    }
    let line_re = Regex::new(
        r"(?i)task\s*#?\s*(\d+)\s*(?:->|→|=>|:|=|to|assigned to)\s*agent\s*#?\s*(\d+)(?:[^\n\d]*?cost\s*[:=]?\s*(-?\d+(?:\.\d+)?))?",
    )
    .expect("static regex");
    let total_re = Regex::new(r"(?i)total\s+cost\s*(?:is|=|:)?\s*\$?\s*(-?\d+(?:\.\d+)?)").expect("static regex");

    let mut pairs: Vec<(usize, i64, Option<f64>)> = Vec::new();
    for cap in line_re.captures_iter(raw) {
        let (Ok(task), Ok(agent)) = (cap[1].parse::<usize>(), cap[2].parse::<i64>()) else {
            continue;
        };
        pairs.push((task, agent, cap.get(3).and_then(|c| c.as_str().parse().ok())));
    }
    let len = pairs.iter().map(|p| p.0 + 1).max().unwrap_or(0).max(n);
    let mut mapping = vec![None; len];
    let mut task_costs = vec![None; len];
    for (task, agent, cost) in pairs {
        mapping[task] = Some(agent);
        task_costs[task] = cost;
    }
    let claimed_cost = total_re.captures_iter(raw).last().and_then(|c| c[1].parse().ok());
    let any_task_cost = task_costs.iter().any(Option::is_some);
    Candidate {
        mapping,
        claimed_cost,
        claimed_task_costs: any_task_cost.then_some(task_costs),
        raw_text: raw.to_string(),
    }
}

fn parse_json_candidate(raw: &str) -> Option<Candidate> {
    let start = raw.find('{')?;
    let end = raw.rfind('}')?;
    let value: serde_json::Value = serde_json::from_str(raw.get(start..=end)?).ok()?;
    let arr = value.get("mapping").or_else(|| value.get("assignment"))?.as_array()?;
    let mapping = arr.iter().map(|v| v.as_i64()).collect();
    let claimed_cost = value.get("total_cost").or_else(|| value.get("claimed_cost")).and_then(|v| v.as_f64());
    Some(Candidate { mapping, claimed_cost, claimed_task_costs: None, raw_text: String::new() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: &[&[i64]]) -> CostMatrix {
        CostMatrix::new(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    fn cand(mapping: &[Option<i64>], claimed: Option<f64>) -> Candidate {
        Candidate { mapping: mapping.to_vec(), claimed_cost: claimed, ..Default::default() }
    }

    #[test]
    fn generation_is_deterministic_and_in_range() {
        assert_eq!(generate_instance(1, 3, 7, 7).unwrap(), mat(&[&[7]]));
        assert_eq!(generate_instance(5, 11, 0, 99).unwrap(), generate_instance(5, 11, 0, 99).unwrap());
        let m = generate_instance(4, 42, 0, 99).unwrap();
        assert!(m.values().iter().flatten().all(|v| (0..=99).contains(v)));
        assert_eq!(m.values().iter().flatten().count(), 16);
    }

    #[test]
    fn generation_rejects_bad_bounds() {
        assert!(generate_instance(0, 1, 0, 9).is_err());
        assert!(generate_instance(3, 1, 9, 0).is_err());
        assert!(generate_instance(3, 1, -1, 9).is_err());
    }

    #[test]
    fn hungarian_small_cases() {
        assert_eq!(hungarian_solve(&mat(&[&[5]])), Assignment { mapping: vec![0], total_cost: 5 });
        assert_eq!(hungarian_solve(&mat(&[&[0, 9], &[9, 0]])), Assignment { mapping: vec![0, 1], total_cost: 0 });
        // Costs of all six permutations of this matrix, enumerated by hand:
        // [0,1,2]=4+0+2=6 [0,2,1]=4+5+2=11 [1,0,2]=1+2+2=5
        // [1,2,0]=1+5+3=9 [2,0,1]=3+2+2=7 [2,1,0]=3+0+3=6
        let m = mat(&[&[4, 1, 3], &[2, 0, 5], &[3, 2, 2]]);
        assert_eq!(hungarian_solve(&m), Assignment { mapping: vec![1, 0, 2], total_cost: 5 });
        assert_eq!(brute_force_solve(&m).unwrap(), hungarian_solve(&m));
    }

    #[test]
    fn ties_resolve_to_smallest_mapping() {
        let m = mat(&[&[1, 1], &[1, 1]]);
        assert_eq!(brute_force_solve(&m).unwrap().mapping, vec![0, 1]);
        assert_eq!(hungarian_solve(&m).mapping, vec![0, 1]);
        let m = mat(&[&[3, 3, 3], &[3, 3, 3], &[3, 3, 3]]);
        assert_eq!(hungarian_solve(&m).mapping, vec![0, 1, 2]);
        // [0,1,2] and [1,0,2] both cost 2.
        let m = mat(&[&[2, 1, 9], &[1, 0, 9], &[9, 9, 0]]);
        assert_eq!(brute_force_solve(&m).unwrap(), hungarian_solve(&m));
    }

    #[test]
    fn brute_force_bound() {
        let m = generate_instance(10, 1, 0, 9).unwrap();
        assert_eq!(brute_force_solve(&m), Err(AssignmentError::InstanceTooLarge { n: 10, max: 9 }));
    }

    #[test]
    fn brute_force_matches_hungarian_seed_seven() {
        let m = generate_instance(5, 7, 0, 99).unwrap();
        assert_eq!(brute_force_solve(&m).unwrap().total_cost, hungarian_solve(&m).total_cost);
    }

    #[test]
    fn duplicate_agent_is_one_violation() {
        let m = mat(&[&[1, 2], &[3, 4]]);
        let r = validate(&m, &cand(&[Some(0), Some(0)], None));
        assert!(!r.is_valid);
        assert_eq!(r.violations, vec![Violation::DuplicateAgent { agent: 0, tasks: vec![0, 1] }]);
    }

    #[test]
    fn fabricated_cost_is_recomputed() {
        let m = mat(&[&[0, 9], &[9, 0]]);
        let r = validate(&m, &cand(&[Some(1), Some(0)], Some(0.0)));
        assert_eq!(r.violations, vec![Violation::FabricatedCost { task: None, claimed: 0.0, actual: 18 }]);
        assert!(validate(&m, &cand(&[Some(0), Some(1)], Some(0.0))).is_valid);
    }

    #[test]
    fn garbage_candidates_yield_violations() {
        let m = mat(&[&[0, 9], &[9, 0]]);
        let r = validate(&m, &cand(&[Some(5), None, Some(0)], None));
        assert_eq!(
            r.violations,
            vec![
                Violation::AgentOutOfRange { task: 0, agent: 5 },
                Violation::ExtraTask { task: 2 },
                Violation::UnassignedTask { task: 1 },
            ]
        );
        let r = validate(&m, &cand(&[], None));
        assert_eq!(r.violations.len(), 2);
    }

    #[test]
    fn per_task_claims_are_checked() {
        let m = mat(&[&[0, 9], &[9, 0]]);
        let mut c = cand(&[Some(0), Some(1)], Some(0.0));
        c.claimed_task_costs = Some(vec![Some(0.0), Some(-1.0)]);
        assert_eq!(
            validate(&m, &c).violations,
            vec![Violation::FabricatedCost { task: Some(1), claimed: -1.0, actual: 0 }]
        );
    }

    #[test]
    fn batch_scores() {
        let ms: Vec<_> = (0..4).map(|s| generate_instance(4, s, 0, 20).unwrap()).collect();
        let perfect: Vec<_> = ms.iter().map(|m| Candidate::from_assignment(&hungarian_solve(m))).collect();
        let s = score_batch(&ms, &perfect, OptimalityCriterion::CostEquality).unwrap();
        assert_eq!((s.accuracy, s.validity_rate), (1.0, 1.0));
        let bad: Vec<_> = ms.iter().map(|_| cand(&[Some(0), Some(0), Some(0), Some(0)], None)).collect();
        let s = score_batch(&ms, &bad, OptimalityCriterion::CostEquality).unwrap();
        assert_eq!((s.accuracy, s.validity_rate), (0.0, 0.0));
        assert!(score_batch(&ms, &bad[..2], OptimalityCriterion::CostEquality).is_err());
    }

    #[test]
    fn strict_mode_rejects_alternative_optima() {
        let m = mat(&[&[1, 1], &[1, 1]]);
        let other = cand(&[Some(1), Some(0)], Some(2.0));
        let loose = score_batch(&[m.clone()], &[other.clone()], OptimalityCriterion::CostEquality).unwrap();
        let strict = score_batch(&[m], &[other], OptimalityCriterion::StrictMapping).unwrap();
        assert_eq!(loose.optimal_count, 1);
        assert_eq!(strict.optimal_count, 0);
    }

    #[test]
    fn parses_line_answers() {
        let text = "Sure!\nTask 0 -> Agent 1 (cost 1)\nTask 1 -> Agent 0 (cost 2)\nTask 2 -> Agent 2 (cost 2)\nTotal cost: 5";
        let c = parse_candidate(text, 3);
        assert_eq!(c.mapping, vec![Some(1), Some(0), Some(2)]);
        assert_eq!(c.claimed_cost, Some(5.0));
        assert_eq!(c.claimed_task_costs, Some(vec![Some(1.0), Some(2.0), Some(2.0)]));
        assert_eq!(c.raw_text, text);
    }

    #[test]
    fn parses_json_answers_and_missing_tasks() {
        let c = parse_candidate("answer: {\"mapping\": [2, 0, 1], \"total_cost\": 12}", 3);
        assert_eq!(c.mapping, vec![Some(2), Some(0), Some(1)]);
        assert_eq!(c.claimed_cost, Some(12.0));
        let c = parse_candidate("task 1 -> agent 0", 3);
        assert_eq!(c.mapping, vec![None, Some(0), None]);
        assert_eq!(c.claimed_cost, None);
    }

    #[test]
    fn matrix_json_shape() {
        let m = mat(&[&[1, 2], &[3, 4]]);
        let text = serde_json::to_string(&m).unwrap();
        assert_eq!(text, r#"{"n":2,"values":[[1,2],[3,4]]}"#);
        assert_eq!(serde_json::from_str::<CostMatrix>(&text).unwrap(), m);
        assert!(serde_json::from_str::<CostMatrix>(r#"{"n":3,"values":[[1,2],[3,4]]}"#).is_err());
        assert!(serde_json::from_str::<CostMatrix>(r#"{"n":2,"values":[[1,-2],[3,4]]}"#).is_err());
    }
}

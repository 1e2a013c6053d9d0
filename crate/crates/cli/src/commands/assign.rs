//! Batch scoring of an allocator on random assignment instances.

use std::path::Path;

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::Serialize;
use taskalloc::accounting::{CallRole, CostLedger, PriceTable};
use taskalloc::assignment::{
    generate_instance, greedy_first_row, hungarian_solve, parse_candidate, render_prompt, score_batch, BatchScore,
    Candidate, CostMatrix, Violation,
};
use taskalloc::gateway::{complete, ChatMessage, Decoding};
use taskalloc::seed;

use crate::bindings::{mock_endpoint, remote_endpoint};
use crate::config::{AllocatorSpec, Resolved};
use crate::output::{write_csv, write_json, write_ledger};

/// Size and seed of instance `i`: both derived from the run seed only.
pub fn instance_params(root: u64, i: usize, n_min: usize, n_max: usize) -> (usize, u64) {
    let s = seed::episode(root, i as u64);
    let span = (n_max - n_min + 1) as u64;
    let n = n_min + (seed::derive(s, "assign/size") % span) as usize;
    (n, seed::derive(s, "assign/costs"))
}

pub fn build_instances(r: &Resolved) -> Result<Vec<CostMatrix>> {
    let a = &r.assign;
    (0..a.instances)
        .map(|i| {
            let (n, s) = instance_params(r.seed, i, a.n_min, a.n_max);
            generate_instance(n, s, a.cost_min, a.cost_max).with_context(|| format!("instance {i}"))
        })
        .collect()
}

#[derive(Debug, Serialize)]
struct ScoreRow {
    instance: usize,
    n: usize,
    valid: bool,
    optimal: bool,
    candidate_cost: i64,
    optimal_cost: i64,
    violations: String,
}

fn describe(v: &Violation) -> String {
    match v {
        Violation::DuplicateAgent { agent, tasks } => {
            let tasks: Vec<String> = tasks.iter().map(ToString::to_string).collect();
            format!("duplicate_agent(agent {agent}; tasks {})", tasks.join(" "))
        }
        Violation::UnassignedTask { task } => format!("unassigned_task({task})"),
        Violation::AgentOutOfRange { task, agent } => format!("agent_out_of_range(task {task}; agent {agent})"),
        Violation::ExtraTask { task } => format!("extra_task({task})"),
        Violation::FabricatedCost { task: Some(t), claimed, actual } => {
            format!("fabricated_cost(task {t}; claimed {claimed}; actual {actual})")
        }
        Violation::FabricatedCost { task: None, claimed, actual } => {
            format!("fabricated_cost(total; claimed {claimed}; actual {actual})")
        }
    }
}

pub struct AssignOutcome {
    pub score: BatchScore,
    pub ledger: CostLedger,
}

pub fn run(r: &Resolved, prices: &PriceTable, pool: &rayon::ThreadPool) -> Result<AssignOutcome> {
    let instances = build_instances(r)?;
    let mut ledger = CostLedger::new();
    let candidates: Vec<Candidate> = match &r.assign.allocator {
        AllocatorSpec::Hungarian => {
            pool.install(|| instances.par_iter().map(|m| Candidate::from_assignment(&hungarian_solve(m))).collect())
        }
        AllocatorSpec::Greedy => {
            pool.install(|| instances.par_iter().map(|m| Candidate::from_assignment(&greedy_first_row(m))).collect())
        }
        AllocatorSpec::Mock { model_id, script } => {
            let (transport, binding) = mock_endpoint(model_id, script, &r.base_dir)?;
            ask_model(transport.as_ref(), &binding, &instances, prices, &mut ledger)?
        }
        AllocatorSpec::Model(b) => {
            let (transport, binding) = remote_endpoint(b);
            ask_model(transport.as_ref(), &binding, &instances, prices, &mut ledger)?
        }
    };
    let score = score_batch(&instances, &candidates, r.assign.criterion)?;

    let out = &r.output_dir;
    write_json(&out.join("instances.json"), &instances)?;
    write_json(&out.join("candidates.json"), &candidates)?;
    write_json(&out.join("score.json"), &score)?;
    let rows: Vec<ScoreRow> = score
        .per_instance
        .iter()
        .enumerate()
        .map(|(i, s)| ScoreRow {
            instance: i,
            n: instances[i].n(),
            valid: s.valid,
            optimal: s.optimal,
            candidate_cost: s.candidate_cost,
            optimal_cost: s.optimal_cost,
            violations: s.violations.iter().map(describe).collect::<Vec<_>>().join("; "),
        })
        .collect();
    write_csv(&out.join("score.csv"), &rows)?;
    if !ledger.rows.is_empty() {
        write_ledger(&out.join("ledger.csv"), &ledger)?;
    }
    Ok(AssignOutcome { score, ledger })
}

/// Queries sequentially: a scripted transport answers in call order. A failed
/// call yields an empty candidate, which scores as invalid.
fn ask_model(
    transport: &dyn taskalloc::gateway::Transport,
    binding: &taskalloc::gateway::ModelBinding,
    instances: &[CostMatrix],
    prices: &PriceTable,
    ledger: &mut CostLedger,
) -> Result<Vec<Candidate>> {
    let mut out = Vec::with_capacity(instances.len());
    for (i, m) in instances.iter().enumerate() {
        let messages = [ChatMessage::user(render_prompt(m))];
        match complete(transport, binding, &messages, Decoding::greedy()) {
            Ok(reply) => {
                ledger.record_call(
                    prices,
                    i as u32,
                    CallRole::Orchestrator,
                    &binding.model_id,
                    reply.tokens_in as i64,
                    reply.tokens_out as i64,
                )?;
                out.push(parse_candidate(&reply.text, m.n()));
            }
            Err(e) => {
                log::warn!("instance {i}: {e}; scoring an empty answer");
                out.push(Candidate { mapping: Vec::new(), claimed_cost: None, claimed_task_costs: None, raw_text: String::new() });
            }
        }
    }
    Ok(out)
}

pub fn print_summary(score: &BatchScore, ledger: &CostLedger, out: &Path) {
    println!(
        "assign-eval: {} instances, accuracy {:.3}, validity {:.3}, cost ${}, written to {}",
        score.total,
        score.accuracy,
        score.validity_rate,
        taskalloc::rational::format_fixed(&ledger.total_usd(), 4),
        out.display()
    );
}

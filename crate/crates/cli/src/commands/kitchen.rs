//! Kitchen episodes: one run per (mode, episode), written to its own directory.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use taskalloc::accounting::{CapabilityProfile, PriceTable};
use taskalloc::coordination::{
    run_episode, CapabilityMode, ControllerMode, EpisodeConfig, EpisodeReport, PolicyBindings,
};
use taskalloc::kitchen::{load_level, trace, KitchenEvent};
use taskalloc::{rational, seed};

use crate::bindings;
use crate::config::{BindingSpec, Resolved};
use crate::output::{write_csv, write_histogram, write_json, write_ledger, write_text};

/// Everything that distinguishes one episode from another.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub mode: ControllerMode,
    pub capability_mode: CapabilityMode,
    pub episode: u32,
    pub seed: u64,
    pub workers: Vec<BindingSpec>,
    pub orchestrator: BindingSpec,
    pub planner: BindingSpec,
    pub prior: Option<CapabilityProfile>,
    pub dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub mode: ControllerMode,
    pub capability_mode: CapabilityMode,
    pub episode: u32,
    pub seed: u64,
    pub level_id: String,
    pub agents: usize,
    pub steps_run: u32,
    pub introduced: u32,
    pub completed: u32,
    pub expired: u32,
    pub planner_invocations: u32,
    pub fallbacks: usize,
    pub total_usd: String,
    pub efficiency: Option<String>,
    pub final_hash: String,
    pub dir: PathBuf,
}

impl RunSummary {
    pub fn new(report: &EpisodeReport, episode: u32, dir: &Path) -> Self {
        RunSummary {
            mode: report.mode,
            capability_mode: report.capability_mode,
            episode,
            seed: report.seed,
            level_id: report.level_id.clone(),
            agents: report.agents,
            steps_run: report.steps_run,
            introduced: report.counters.introduced,
            completed: report.counters.completed,
            expired: report.counters.expired,
            planner_invocations: report.planner_invocations,
            fallbacks: report.fallbacks.len(),
            total_usd: rational::to_decimal_string(&report.efficiency.total_usd),
            efficiency: report.efficiency.efficiency.as_ref().map(|e| rational::format_fixed(e, 6)),
            final_hash: report.final_hash.clone(),
            dir: dir.to_path_buf(),
        }
    }
}

pub fn load_prices(r: &Resolved) -> Result<PriceTable> {
    match &r.price_table {
        None => Ok(PriceTable::standard()),
        Some(p) => {
            let path = r.resolve_path(p);
            let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
            PriceTable::from_json(&text).with_context(|| format!("price table {}", path.display()))
        }
    }
}

/// Episode seeds depend only on the root seed and the episode index, so
/// every mode and capability setting sees the same order schedule.
pub fn episode_seed(root: u64, episode: u32) -> u64 {
    seed::episode(root, u64::from(episode))
}

pub fn execute(r: &Resolved, prices: &PriceTable, spec: &RunSpec) -> Result<EpisodeReport> {
    let env = load_level(&r.level, spec.workers.len(), spec.seed)?;
    let workers = || -> Result<Vec<_>> {
        spec.workers.iter().enumerate().map(|(k, b)| bindings::worker(b, k, spec.seed, &r.base_dir)).collect()
    };
    let policies = match spec.mode {
        ControllerMode::Individual => PolicyBindings::Individual(workers()?),
        ControllerMode::Orchestrator => PolicyBindings::Orchestrator(bindings::orchestrator(&spec.orchestrator, &r.base_dir)?),
        ControllerMode::Planner => PolicyBindings::Planner {
            planner: bindings::planner(&spec.planner, &r.base_dir)?,
            workers: workers()?,
        },
    };
    let config = EpisodeConfig {
        budget: r.step_budget,
        capability_mode: spec.capability_mode,
        prior_profile: spec.prior.clone(),
        prices: prices.clone(),
        legal_action_hint: r.legal_action_hint,
    };
    let report = run_episode(env, policies, &config)?;
    log::info!(
        "{} ep{}: {} completed, {} planner invocations, {} fallbacks",
        spec.mode,
        spec.episode,
        report.completed_orders,
        report.planner_invocations,
        report.fallbacks.len()
    );
    Ok(report)
}

/// Writes trace, meta, report, efficiency, histogram and ledger files.
pub fn write_run(dir: &Path, report: &EpisodeReport) -> Result<()> {
    write_text(&dir.join("trace.jsonl"), &trace::to_jsonl(&report.trace))?;
    write_json(&dir.join("trace_meta.json"), &report.trace_meta)?;
    let mut text = report.to_json();
    text.push('\n');
    write_text(&dir.join("report.json"), &text)?;
    write_json(&dir.join("efficiency.json"), &report.efficiency)?;
    write_json(&dir.join("events.json"), &report.event_log)?;
    write_histogram(&dir.join("histogram.csv"), report.histogram())?;
    write_ledger(&dir.join("ledger.csv"), &report.ledger)?;
    Ok(())
}

pub fn run(r: &Resolved, pool: &rayon::ThreadPool) -> Result<Vec<RunSummary>> {
    let prices = load_prices(r)?;
    let workers: Vec<BindingSpec> = (0..r.agent_count).map(|k| r.worker_binding(k)).collect();
    let specs: Vec<RunSpec> = r
        .modes
        .iter()
        .flat_map(|&mode| (0..r.episodes).map(move |e| (mode, e)))
        .map(|(mode, e)| RunSpec {
            mode,
            capability_mode: CapabilityMode::OnTheFly,
            episode: e,
            seed: episode_seed(r.seed, e),
            workers: workers.clone(),
            orchestrator: r.role_binding("orchestrator"),
            planner: r.role_binding("planner"),
            prior: None,
            dir: r.output_dir.join(mode.to_string()).join(format!("ep{e}")),
        })
        .collect();

    let results: Vec<Result<RunSummary>> = pool.install(|| {
        specs
            .par_iter()
            .map(|spec| {
                let report = execute(r, &prices, spec)
                    .with_context(|| format!("{} episode {}", spec.mode, spec.episode))?;
                write_run(&spec.dir, &report)?;
                Ok(RunSummary::new(&report, spec.episode, &spec.dir))
            })
            .collect()
    });
    let summaries = results.into_iter().collect::<Result<Vec<_>>>()?;
    write_json(&r.output_dir.join("summary.json"), &summaries)?;
    write_csv(&r.output_dir.join("summary.csv"), &summaries.iter().map(SummaryRow::from).collect::<Vec<_>>())?;
    Ok(summaries)
}

/// Flat form of a summary for CSV.
#[derive(Debug, Serialize)]
pub struct SummaryRow {
    mode: String,
    capability_mode: String,
    episode: u32,
    seed: u64,
    level_id: String,
    agents: usize,
    steps_run: u32,
    introduced: u32,
    completed: u32,
    expired: u32,
    planner_invocations: u32,
    fallbacks: usize,
    total_usd: String,
    efficiency: String,
}

impl From<&RunSummary> for SummaryRow {
    fn from(s: &RunSummary) -> Self {
        SummaryRow {
            mode: s.mode.to_string(),
            capability_mode: s.capability_mode.to_string(),
            episode: s.episode,
            seed: s.seed,
            level_id: s.level_id.clone(),
            agents: s.agents,
            steps_run: s.steps_run,
            introduced: s.introduced,
            completed: s.completed,
            expired: s.expired,
            planner_invocations: s.planner_invocations,
            fallbacks: s.fallbacks,
            total_usd: s.total_usd.clone(),
            efficiency: s.efficiency.clone().unwrap_or_default(),
        }
    }
}

pub fn print_summary(summaries: &[RunSummary]) {
    for s in summaries {
        println!(
            "{} ep{} ({} agents, {}): completed {}/{}, planner replans {}, fallbacks {}, cost ${}, hash {}",
            s.mode,
            s.episode,
            s.agents,
            s.level_id,
            s.completed,
            s.introduced,
            s.planner_invocations,
            s.fallbacks,
            s.total_usd,
            &s.final_hash[..12.min(s.final_hash.len())]
        );
    }
}

/// The (step, dish) of every order introduced, which fixes the schedule.
pub fn order_schedule(report: &EpisodeReport) -> Vec<(u32, String)> {
    report
        .event_log
        .iter()
        .filter(|e| matches!(e, KitchenEvent::OrderIntroduced { .. }))
        .map(|e| (e.step(), e.dish().to_string()))
        .collect()
}

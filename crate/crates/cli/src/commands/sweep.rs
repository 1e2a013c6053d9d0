//! Planner runs over worker rosters, with and without capability hints.

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use taskalloc::coordination::{CapabilityMode, ControllerMode};
use taskalloc::rational;

use super::kitchen::{episode_seed, execute, load_prices, order_schedule, write_run, RunSpec, RunSummary, SummaryRow};
use crate::config::{BindingSpec, Resolved, SweepCapability};
use crate::output::{write_csv, write_json};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSummary {
    pub roster: usize,
    pub workers: Vec<String>,
    pub episode: u32,
    pub seed: u64,
    pub on_the_fly: Option<RunSummary>,
    pub informed: Option<RunSummary>,
    /// Informed minus OnTheFly orders per dollar, when both runs spent money.
    pub efficiency_delta: Option<f64>,
    pub completed_delta: Option<i64>,
    /// Both runs saw the same orders at the same steps.
    pub same_order_schedule: Option<bool>,
}

pub fn rosters(r: &Resolved) -> Vec<Vec<BindingSpec>> {
    if r.rosters.is_empty() {
        vec![(0..r.agent_count).map(|k| r.worker_binding(k)).collect()]
    } else {
        r.rosters.clone()
    }
}

pub fn run(r: &Resolved, pool: &rayon::ThreadPool) -> Result<Vec<PairSummary>> {
    let prices = load_prices(r)?;
    let jobs: Vec<(usize, Vec<BindingSpec>, u32)> = rosters(r)
        .into_iter()
        .enumerate()
        .flat_map(|(i, roster)| (0..r.episodes).map(move |e| (i, roster.clone(), e)))
        .collect();

    let results: Vec<Result<PairSummary>> = pool.install(|| {
        jobs.par_iter()
            .map(|(i, roster, e)| {
                run_pair(r, &prices, *i, roster, *e).with_context(|| format!("roster {i} episode {e}"))
            })
            .collect()
    });
    let pairs = results.into_iter().collect::<Result<Vec<_>>>()?;

    write_json(&r.output_dir.join("comparison.json"), &pairs)?;
    let rows: Vec<PairRow> = pairs.iter().map(PairRow::from).collect();
    write_csv(&r.output_dir.join("comparison.csv"), &rows)?;
    let runs: Vec<SummaryRow> =
        pairs.iter().flat_map(|p| p.on_the_fly.iter().chain(p.informed.iter())).map(SummaryRow::from).collect();
    write_csv(&r.output_dir.join("summary.csv"), &runs)?;
    Ok(pairs)
}

fn run_pair(
    r: &Resolved,
    prices: &taskalloc::accounting::PriceTable,
    index: usize,
    roster: &[BindingSpec],
    episode: u32,
) -> Result<PairSummary> {
    let seed = episode_seed(r.seed, episode);
    let base = r.output_dir.join(format!("roster{index}")).join(format!("ep{episode}"));
    let spec = |capability_mode: CapabilityMode, prior| RunSpec {
        mode: ControllerMode::Planner,
        capability_mode,
        episode,
        seed,
        workers: roster.to_vec(),
        orchestrator: BindingSpec::Scripted,
        planner: r.role_binding("planner"),
        prior,
        dir: base.join(capability_mode.to_string()),
    };

    let mut on_the_fly = None;
    let mut informed = None;
    let mut prior = None;
    if r.capability != SweepCapability::Informed {
        let s = spec(CapabilityMode::OnTheFly, None);
        let report = execute(r, prices, &s)?;
        write_run(&s.dir, &report)?;
        prior = Some(report.profile.clone());
        on_the_fly = Some((RunSummary::new(&report, episode, &s.dir), report));
    }
    if r.capability != SweepCapability::OnTheFly {
        let s = spec(CapabilityMode::Informed, prior);
        let report = execute(r, prices, &s)?;
        write_run(&s.dir, &report)?;
        informed = Some((RunSummary::new(&report, episode, &s.dir), report));
    }

    let (mut efficiency_delta, mut completed_delta, mut same_order_schedule) = (None, None, None);
    if let (Some((_, a)), Some((_, b))) = (&on_the_fly, &informed) {
        if let (Some(ea), Some(eb)) = (&a.efficiency.efficiency, &b.efficiency.efficiency) {
            efficiency_delta = Some(rational::to_f64(&(eb - ea)));
        }
        completed_delta = Some(i64::from(b.completed_orders) - i64::from(a.completed_orders));
        same_order_schedule = Some(order_schedule(a) == order_schedule(b));
    }
    Ok(PairSummary {
        roster: index,
        workers: roster.iter().map(BindingSpec::label).collect(),
        episode,
        seed,
        on_the_fly: on_the_fly.map(|(s, _)| s),
        informed: informed.map(|(s, _)| s),
        efficiency_delta,
        completed_delta,
        same_order_schedule,
    })
}

#[derive(Debug, Serialize)]
struct PairRow {
    roster: usize,
    workers: String,
    episode: u32,
    seed: u64,
    on_the_fly_completed: String,
    informed_completed: String,
    on_the_fly_usd: String,
    informed_usd: String,
    on_the_fly_efficiency: String,
    informed_efficiency: String,
    efficiency_delta: String,
    completed_delta: String,
}

impl From<&PairSummary> for PairRow {
    fn from(p: &PairSummary) -> Self {
        let field = |s: &Option<RunSummary>, f: fn(&RunSummary) -> String| s.as_ref().map(f).unwrap_or_default();
        PairRow {
            roster: p.roster,
            workers: p.workers.join(" "),
            episode: p.episode,
            seed: p.seed,
            on_the_fly_completed: field(&p.on_the_fly, |s| s.completed.to_string()),
            informed_completed: field(&p.informed, |s| s.completed.to_string()),
            on_the_fly_usd: field(&p.on_the_fly, |s| s.total_usd.clone()),
            informed_usd: field(&p.informed, |s| s.total_usd.clone()),
            on_the_fly_efficiency: field(&p.on_the_fly, |s| s.efficiency.clone().unwrap_or_default()),
            informed_efficiency: field(&p.informed, |s| s.efficiency.clone().unwrap_or_default()),
            efficiency_delta: p.efficiency_delta.map(|d| format!("{d:.6}")).unwrap_or_default(),
            completed_delta: p.completed_delta.map(|d| d.to_string()).unwrap_or_default(),
        }
    }
}

pub fn print_summary(pairs: &[PairSummary]) {
    for p in pairs {
        let show = |s: &Option<RunSummary>| match s {
            Some(s) => format!("{}/{} (${})", s.completed, s.introduced, s.total_usd),
            None => "-".to_string(),
        };
        println!(
            "roster {} [{}] ep{}: on_the_fly {}, informed {}, efficiency delta {}",
            p.roster,
            p.workers.join(", "),
            p.episode,
            show(&p.on_the_fly),
            show(&p.informed),
            p.efficiency_delta.map(|d| format!("{d:+.4}")).unwrap_or_else(|| "n/a".to_string())
        );
    }
}

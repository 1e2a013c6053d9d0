//! Experiment configuration: one JSON file plus command-line overrides.
//!
//! Errors carry the line of the offending key so a long sweep file can be
//! fixed without bisecting it.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use taskalloc::assignment::OptimalityCriterion;
use taskalloc::coordination::ControllerMode;
use taskalloc::gateway::ModelBinding;
use taskalloc::kitchen::{levels, LevelConfig, MAX_AGENTS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    AssignEval,
    KitchenRun,
    CapabilitySweep,
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Experiment::AssignEval => "assign_eval",
            Experiment::KitchenRun => "kitchen_run",
            Experiment::CapabilitySweep => "capability_sweep",
        })
    }
}

/// Which capability modes a sweep runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepCapability {
    OnTheFly,
    Informed,
    /// Both, on the same seed, with the Informed run primed by the first.
    #[default]
    Paired,
}

/// What plays one role.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BindingSpec {
    Scripted,
    /// Scripted worker that emits unparseable replies at `failure_rate`.
    Faulty {
        failure_rate: f64,
        #[serde(default)]
        label: Option<String>,
    },
    /// Replies come from a JSON list of mock entries, served in call order.
    Mock { model_id: String, script: PathBuf },
    Model(ModelBinding),
}

impl BindingSpec {
    pub fn label(&self) -> String {
        match self {
            BindingSpec::Scripted => "scripted".to_string(),
            BindingSpec::Faulty { failure_rate, label } => {
                label.clone().unwrap_or_else(|| format!("faulty-{failure_rate}"))
            }
            BindingSpec::Mock { model_id, .. } => model_id.clone(),
            BindingSpec::Model(b) => b.model_id.clone(),
        }
    }
}

/// Allocator under test in assignment batches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AllocatorSpec {
    Hungarian,
    /// Row by row, each task takes the cheapest agent still free.
    Greedy,
    Mock { model_id: String, script: PathBuf },
    Model(ModelBinding),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssignSection {
    #[serde(default = "default_instances")]
    pub instances: usize,
    #[serde(default = "default_n_min")]
    pub n_min: usize,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    #[serde(default)]
    pub cost_min: i64,
    #[serde(default = "default_cost_max")]
    pub cost_max: i64,
    #[serde(default = "default_allocator")]
    pub allocator: AllocatorSpec,
    #[serde(default)]
    pub criterion: OptimalityCriterion,
}

fn default_instances() -> usize {
    100
}
fn default_n_min() -> usize {
    2
}
fn default_n_max() -> usize {
    8
}
fn default_cost_max() -> i64 {
    99
}
fn default_allocator() -> AllocatorSpec {
    AllocatorSpec::Hungarian
}

impl Default for AssignSection {
    fn default() -> Self {
        AssignSection {
            instances: default_instances(),
            n_min: default_n_min(),
            n_max: default_n_max(),
            cost_min: 0,
            cost_max: default_cost_max(),
            allocator: default_allocator(),
            criterion: OptimalityCriterion::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(x) => vec![x.clone()],
            OneOrMany::Many(xs) => xs.clone(),
        }
    }
}

/// The file format. Every field is optional so that a run can be described
/// by flags alone.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub experiment: Option<Experiment>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub mode: Option<OneOrMany<ControllerMode>>,
    #[serde(default)]
    pub level_id: Option<String>,
    /// A level description on disk; takes precedence over `level_id`.
    #[serde(default)]
    pub level_file: Option<PathBuf>,
    #[serde(default)]
    pub agent_count: Option<usize>,
    #[serde(default)]
    pub step_budget: Option<u32>,
    #[serde(default)]
    pub episodes: Option<u32>,
    /// Keys: `worker` (default for every worker), `agentK` (one worker),
    /// `orchestrator`, `planner`.
    #[serde(default)]
    pub bindings: BTreeMap<String, BindingSpec>,
    /// Worker line-ups for capability sweeps; one binding per agent.
    #[serde(default)]
    pub rosters: Vec<Vec<BindingSpec>>,
    #[serde(default)]
    pub capability_mode: Option<SweepCapability>,
    #[serde(default)]
    pub legal_action_hint: bool,
    #[serde(default)]
    pub price_table: Option<PathBuf>,
    #[serde(default)]
    pub assign: Option<AssignSection>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub jobs: Option<usize>,
}

/// A configuration problem, with the line it was found on when known.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ConfigError {
    pub path: Option<PathBuf>,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.path, self.line) {
            (Some(p), Some(l)) => write!(f, "{}:{l}: {}", p.display(), self.message),
            (Some(p), None) => write!(f, "{}: {}", p.display(), self.message),
            (None, Some(l)) => write!(f, "line {l}: {}", self.message),
            (None, None) => f.write_str(&self.message),
        }
    }
}

/// Flags that override the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub agents: Option<usize>,
    pub modes: Vec<ControllerMode>,
    pub level: Option<String>,
    pub jobs: Option<usize>,
    pub output: Option<PathBuf>,
}

/// Everything a command needs, after overrides and validation.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub seed: u64,
    pub modes: Vec<ControllerMode>,
    pub level: LevelConfig,
    pub agent_count: usize,
    pub step_budget: u32,
    pub episodes: u32,
    pub bindings: BTreeMap<String, BindingSpec>,
    pub rosters: Vec<Vec<BindingSpec>>,
    pub capability: SweepCapability,
    pub legal_action_hint: bool,
    pub price_table: Option<PathBuf>,
    pub assign: AssignSection,
    pub output_dir: PathBuf,
    pub jobs: usize,
    /// Directory relative paths in the file are resolved against.
    pub base_dir: PathBuf,
}

impl Resolved {
    pub fn resolve_path(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// The binding for agent `k`'s worker role.
    pub fn worker_binding(&self, k: usize) -> BindingSpec {
        self.bindings
            .get(&format!("agent{k}"))
            .or_else(|| self.bindings.get("worker"))
            .cloned()
            .unwrap_or(BindingSpec::Scripted)
    }

    pub fn role_binding(&self, role: &str) -> BindingSpec {
        self.bindings.get(role).cloned().unwrap_or(BindingSpec::Scripted)
    }
}

/// 1-based line of the first occurrence of `"key"` in `text`.
pub fn line_of_key(text: &str, key: &str) -> Option<usize> {
    let needle = format!("\"{key}\"");
    text.lines().position(|l| l.contains(&needle)).map(|i| i + 1)
}

pub fn parse(text: &str, path: Option<&Path>) -> Result<ExperimentConfig, ConfigError> {
    serde_json::from_str(text).map_err(|e| ConfigError {
        path: path.map(Path::to_path_buf),
        line: Some(e.line()).filter(|l| *l > 0),
        message: e.to_string().split(" at line ").next().unwrap_or_default().to_string(),
    })
}

pub fn load(path: Option<&Path>) -> Result<(ExperimentConfig, String, PathBuf), ConfigError> {
    let Some(path) = path else {
        return Ok((ExperimentConfig::default(), String::new(), PathBuf::from(".")));
    };
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
        path: Some(path.to_path_buf()),
        line: None,
        message: format!("cannot read config: {e}"),
    })?;
    let config = parse(&text, Some(path))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
    Ok((config, text, base))
}

/// Applies overrides and checks the result for `experiment`.
pub fn resolve(
    config: ExperimentConfig,
    text: &str,
    path: Option<&Path>,
    base_dir: PathBuf,
    experiment: Experiment,
    overrides: &Overrides,
) -> Result<Resolved, ConfigError> {
    let err = |key: &str, message: String| ConfigError {
        path: path.map(Path::to_path_buf),
        line: line_of_key(text, key),
        message,
    };

    if let Some(declared) = config.experiment {
        if declared != experiment {
            return Err(err("experiment", format!("config declares experiment {declared}, command runs {experiment}")));
        }
    }
    let seed = overrides
        .seed
        .or(config.seed)
        .ok_or_else(|| err("seed", "a seed is required (config `seed` or --seed)".to_string()))?;

    let modes = if !overrides.modes.is_empty() {
        overrides.modes.clone()
    } else {
        config.mode.as_ref().map(OneOrMany::to_vec).unwrap_or_else(|| vec![ControllerMode::Individual])
    };
    if modes.is_empty() {
        return Err(err("mode", "mode list is empty".to_string()));
    }

    let level = match (&overrides.level, &config.level_file) {
        (Some(id), _) => {
            levels::builtin(id).ok_or_else(|| err("level_id", format!("unknown level {id:?} (from --level)")))?
        }
        (None, Some(file)) => {
            let p = if file.is_absolute() { file.clone() } else { base_dir.join(file) };
            let body = std::fs::read_to_string(&p)
                .map_err(|e| err("level_file", format!("cannot read level file {}: {e}", p.display())))?;
            LevelConfig::from_json(&body).map_err(|e| err("level_file", format!("level file {}: {e}", p.display())))?
        }
        (None, None) => {
            let id = config.level_id.as_deref().unwrap_or("level_1");
            levels::builtin(id).ok_or_else(|| {
                err("level_id", format!("unknown level {id:?} (built-in: {})", levels::builtin_ids().join(", ")))
            })?
        }
    };

    let agent_count = overrides.agents.or(config.agent_count).unwrap_or(1);
    if agent_count == 0 || agent_count > MAX_AGENTS {
        return Err(err("agent_count", format!("agent_count must be 1..={MAX_AGENTS}, got {agent_count}")));
    }
    let step_budget = config.step_budget.unwrap_or(level.max_steps);
    if step_budget == 0 {
        return Err(err("step_budget", "step_budget must be positive".to_string()));
    }
    let episodes = config.episodes.unwrap_or(1);
    if episodes == 0 {
        return Err(err("episodes", "episodes must be positive".to_string()));
    }
    let jobs = overrides.jobs.or(config.jobs).unwrap_or(1);
    if jobs == 0 {
        return Err(err("jobs", "jobs must be positive".to_string()));
    }

    for (key, spec) in &config.bindings {
        let known = matches!(key.as_str(), "worker" | "orchestrator" | "planner")
            || key.strip_prefix("agent").and_then(|k| k.parse::<usize>().ok()).is_some_and(|k| k < MAX_AGENTS);
        if !known {
            return Err(err(key, format!("unknown binding role {key:?} (worker, agentK, orchestrator, planner)")));
        }
        check_binding(spec).map_err(|m| err(key, m))?;
        if matches!(spec, BindingSpec::Faulty { .. }) && matches!(key.as_str(), "orchestrator" | "planner") {
            return Err(err(key, format!("faulty bindings only apply to workers, not {key}")));
        }
    }
    if experiment != Experiment::AssignEval && !config.bindings.is_empty() {
        for mode in &modes {
            for role in required_roles(*mode, agent_count, experiment) {
                let covered = config.bindings.contains_key(&role)
                    || (role.starts_with("agent") && config.bindings.contains_key("worker"));
                if !covered {
                    return Err(err("bindings", format!("mode {mode} needs a binding for {role}")));
                }
            }
        }
    }

    for (i, roster) in config.rosters.iter().enumerate() {
        if roster.is_empty() || roster.len() > MAX_AGENTS {
            return Err(err("rosters", format!("roster {i} must list 1..={MAX_AGENTS} workers")));
        }
        for spec in roster {
            check_binding(spec).map_err(|m| err("rosters", format!("roster {i}: {m}")))?;
        }
    }

    let assign = config.assign.clone().unwrap_or_default();
    if experiment == Experiment::AssignEval {
        if assign.instances == 0 {
            return Err(err("instances", "instances must be positive".to_string()));
        }
        if assign.n_min < 1 || assign.n_min > assign.n_max || assign.n_max > 8 {
            return Err(err(
                "n_min",
                format!("need 1 <= n_min <= n_max <= 8, got {}..{}", assign.n_min, assign.n_max),
            ));
        }
        if assign.cost_min > assign.cost_max {
            return Err(err("cost_min", format!("cost_min {} exceeds cost_max {}", assign.cost_min, assign.cost_max)));
        }
    }

    Ok(Resolved {
        seed,
        modes,
        level,
        agent_count,
        step_budget,
        episodes,
        bindings: config.bindings,
        rosters: config.rosters,
        capability: config.capability_mode.unwrap_or_default(),
        legal_action_hint: config.legal_action_hint,
        price_table: config.price_table,
        assign,
        output_dir: overrides.output.clone().or(config.output_dir).unwrap_or_else(|| PathBuf::from("out")),
        jobs,
        base_dir,
    })
}

fn check_binding(spec: &BindingSpec) -> Result<(), String> {
    match spec {
        BindingSpec::Faulty { failure_rate, .. } if !(0.0..=1.0).contains(failure_rate) => {
            Err(format!("failure_rate must lie in [0, 1], got {failure_rate}"))
        }
        BindingSpec::Model(b) if b.model_id.is_empty() => Err("model binding has an empty model_id".to_string()),
        _ => Ok(()),
    }
}

/// Roles a run in `mode` asks a policy for.
pub fn required_roles(mode: ControllerMode, agents: usize, experiment: Experiment) -> Vec<String> {
    let mut roles: Vec<String> = Vec::new();
    match mode {
        ControllerMode::Individual => roles.extend((0..agents).map(|k| format!("agent{k}"))),
        ControllerMode::Orchestrator => roles.push("orchestrator".into()),
        ControllerMode::Planner => {
            roles.push("planner".into());
            // Sweep workers come from the rosters.
            if experiment != Experiment::CapabilitySweep {
                roles.extend((0..agents).map(|k| format!("agent{k}")));
            }
        }
    }
    roles
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resolve_text(text: &str, exp: Experiment, o: &Overrides) -> Result<Resolved, ConfigError> {
        let cfg = parse(text, None)?;
        resolve(cfg, text, None, PathBuf::from("."), exp, o)
    }

    #[test]
    fn syntax_error_reports_line() {
        let text = "{\n  \"seed\": 1,\n  \"agent_count\": ,\n}";
        let e = parse(text, None).unwrap_err();
        assert_eq!(e.line, Some(3));
    }

    #[test]
    fn unknown_field_reports_line() {
        let text = "{\n  \"seed\": 1,\n\n  \"agnet_count\": 2\n}";
        let e = parse(text, None).unwrap_err();
        assert_eq!(e.line, Some(4));
        assert!(e.message.contains("agnet_count"), "{}", e.message);
    }

    #[test]
    fn semantic_error_points_at_key() {
        let text = "{\n  \"seed\": 1,\n  \"level_id\": \"level_9\"\n}";
        let e = resolve_text(text, Experiment::KitchenRun, &Overrides::default()).unwrap_err();
        assert_eq!(e.line, Some(3));
        assert!(e.message.contains("level_9"));
    }

    #[test]
    fn seed_is_mandatory() {
        let e = resolve_text("{}", Experiment::KitchenRun, &Overrides::default()).unwrap_err();
        assert!(e.message.contains("seed"));
        let ok = resolve_text("{}", Experiment::KitchenRun, &Overrides { seed: Some(3), ..Default::default() });
        assert_eq!(ok.unwrap().seed, 3);
    }

    #[test]
    fn flags_win_over_file() {
        let text = r#"{"seed": 1, "agent_count": 2, "mode": "planner", "level_id": "level_2", "jobs": 2}"#;
        let o = Overrides {
            seed: Some(9),
            agents: Some(4),
            modes: vec![ControllerMode::Orchestrator],
            level: Some("level_3".into()),
            jobs: Some(3),
            output: Some("elsewhere".into()),
        };
        let r = resolve_text(text, Experiment::KitchenRun, &o).unwrap();
        assert_eq!(r.seed, 9);
        assert_eq!(r.agent_count, 4);
        assert_eq!(r.modes, vec![ControllerMode::Orchestrator]);
        assert_eq!(r.level.level_id, "level_3");
        assert_eq!(r.jobs, 3);
        assert_eq!(r.output_dir, PathBuf::from("elsewhere"));
    }

    #[test]
    fn mode_accepts_list() {
        let text = r#"{"seed": 1, "mode": ["individual", "planner"]}"#;
        let r = resolve_text(text, Experiment::KitchenRun, &Overrides::default()).unwrap();
        assert_eq!(r.modes, vec![ControllerMode::Individual, ControllerMode::Planner]);
    }

    #[test]
    fn bindings_must_cover_roles() {
        let text = "{\n  \"seed\": 1,\n  \"mode\": \"planner\",\n  \"bindings\": {\n    \"worker\": {\"kind\": \"scripted\"}\n  }\n}";
        let e = resolve_text(text, Experiment::KitchenRun, &Overrides::default()).unwrap_err();
        assert!(e.message.contains("planner"), "{}", e.message);
        assert_eq!(e.line, Some(4));

        let text = r#"{"seed": 1, "mode": "planner", "agent_count": 2,
            "bindings": {"planner": {"kind": "scripted"}, "agent0": {"kind": "scripted"}}}"#;
        let e = resolve_text(text, Experiment::KitchenRun, &Overrides::default()).unwrap_err();
        assert!(e.message.contains("agent1"), "{}", e.message);
    }

    #[test]
    fn agent_override_beats_worker_default() {
        let text = r#"{"seed": 1, "agent_count": 2, "bindings": {
            "worker": {"kind": "scripted"}, "agent1": {"kind": "faulty", "failure_rate": 0.3}}}"#;
        let r = resolve_text(text, Experiment::KitchenRun, &Overrides::default()).unwrap();
        assert_eq!(r.worker_binding(0), BindingSpec::Scripted);
        assert!(matches!(r.worker_binding(1), BindingSpec::Faulty { .. }));
    }

    #[test]
    fn bad_failure_rate_rejected() {
        let text = "{\"seed\": 1,\n\"bindings\": {\n\"worker\": {\"kind\": \"faulty\", \"failure_rate\": 1.5}}}";
        let e = resolve_text(text, Experiment::KitchenRun, &Overrides::default()).unwrap_err();
        assert_eq!(e.line, Some(3));
    }

    #[test]
    fn experiment_must_match_command() {
        let text = r#"{"experiment": "assign_eval", "seed": 1}"#;
        assert!(resolve_text(text, Experiment::KitchenRun, &Overrides::default()).is_err());
        assert!(resolve_text(text, Experiment::AssignEval, &Overrides::default()).is_ok());
    }

    #[test]
    fn assign_ranges_checked() {
        let text = "{\"seed\": 1, \"assign\": {\n\"n_min\": 5,\n\"n_max\": 3}}";
        let e = resolve_text(text, Experiment::AssignEval, &Overrides::default()).unwrap_err();
        assert_eq!(e.line, Some(2));
        let text = r#"{"seed": 1, "assign": {"n_max": 9}}"#;
        assert!(resolve_text(text, Experiment::AssignEval, &Overrides::default()).is_err());
    }

    #[test]
    fn model_binding_parses() {
        let text = r#"{"seed": 1, "bindings": {"worker": {"kind": "model", "model_id": "gpt-4o",
            "endpoint_url": "https://api.openai.com/v1/chat/completions", "auth_env_var": "OPENAI_API_KEY",
            "provider": "open_ai"}}}"#;
        let r = resolve_text(text, Experiment::KitchenRun, &Overrides::default());
        match r {
            Ok(r) => assert!(matches!(r.worker_binding(0), BindingSpec::Model(_))),
            Err(e) => panic!("{e}"),
        }
    }
}

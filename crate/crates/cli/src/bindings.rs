//! Turns binding specs into live policies.

use std::path::Path;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use taskalloc::coordination::{
    FaultyWorker, ModelPolicy, OrchestratorPolicy, PlannerPolicy, ScriptedOrchestrator, ScriptedPlanner,
    ScriptedWorker, WorkerPolicy,
};
use taskalloc::gateway::{install_mock, Decoding, HttpTransport, MockEntry, ModelBinding, Transport};
use taskalloc::seed;

use crate::config::BindingSpec;

/// Reads a mock script: a JSON array of entries.
pub fn load_mock_script(path: &Path) -> Result<Vec<MockEntry>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading mock script {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing mock script {}", path.display()))
}

/// A scripted in-process endpoint. Each call builds a fresh mock, so every
/// role replays its script from the start.
pub fn mock_endpoint(model_id: &str, script: &Path, base_dir: &Path) -> Result<(Arc<dyn Transport>, ModelBinding)> {
    let path = if script.is_absolute() { script.to_path_buf() } else { base_dir.join(script) };
    let entries = load_mock_script(&path)?;
    Ok((Arc::new(install_mock(entries)), ModelBinding::offline(model_id)))
}

pub fn remote_endpoint(binding: &ModelBinding) -> (Arc<dyn Transport>, ModelBinding) {
    (Arc::new(HttpTransport::new()), binding.clone())
}

fn model_policy(spec: &BindingSpec, base_dir: &Path) -> Result<Option<ModelPolicy>> {
    let endpoint = match spec {
        BindingSpec::Mock { model_id, script } => mock_endpoint(model_id, script, base_dir)?,
        BindingSpec::Model(b) => remote_endpoint(b),
        _ => return Ok(None),
    };
    let (transport, binding) = endpoint;
    Ok(Some(ModelPolicy::new(transport, binding, Decoding::greedy())))
}

/// Worker for `agent`; faulty workers draw from a stream derived from the
/// episode seed and the agent index.
pub fn worker(spec: &BindingSpec, agent: usize, episode_seed: u64, base_dir: &Path) -> Result<Box<dyn WorkerPolicy>> {
    if let Some(p) = model_policy(spec, base_dir)? {
        return Ok(Box::new(p));
    }
    Ok(match spec {
        BindingSpec::Faulty { failure_rate, .. } => Box::new(FaultyWorker::new(
            &spec.label(),
            *failure_rate,
            seed::derive(episode_seed, &format!("faulty/agent{agent}")),
        )),
        _ => Box::new(ScriptedWorker::new()),
    })
}

pub fn orchestrator(spec: &BindingSpec, base_dir: &Path) -> Result<Box<dyn OrchestratorPolicy>> {
    if let Some(p) = model_policy(spec, base_dir)? {
        return Ok(Box::new(p));
    }
    match spec {
        BindingSpec::Scripted => Ok(Box::new(ScriptedOrchestrator)),
        other => bail!("{} cannot act as orchestrator", other.label()),
    }
}

pub fn planner(spec: &BindingSpec, base_dir: &Path) -> Result<Box<dyn PlannerPolicy>> {
    if let Some(p) = model_policy(spec, base_dir)? {
        return Ok(Box::new(p));
    }
    match spec {
        BindingSpec::Scripted => Ok(Box::new(ScriptedPlanner::default())),
        other => bail!("{} cannot act as planner", other.label()),
    }
}

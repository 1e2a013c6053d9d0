//! Re-executes a recorded trace and checks every hash.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use taskalloc::kitchen::{observation_hash, trace};

/// Replay did not reproduce the recording.
#[derive(Debug, thiserror::Error)]
#[error("replay failed: {0}")]
pub struct ReplayFailure(pub String);

pub struct ReplayOutcome {
    pub steps: usize,
    pub final_hash: String,
}

/// `meta` defaults to `trace_meta.json` next to the trace.
pub fn run(trace_path: &Path, meta: Option<&Path>) -> Result<ReplayOutcome> {
    let meta_path: PathBuf = match meta {
        Some(p) => p.to_path_buf(),
        None => trace_path.with_file_name("trace_meta.json"),
    };
    let text = std::fs::read_to_string(trace_path).with_context(|| format!("reading {}", trace_path.display()))?;
    let meta_text = std::fs::read_to_string(&meta_path).with_context(|| format!("reading {}", meta_path.display()))?;
    let records = trace::from_jsonl(&text).map_err(|e| ReplayFailure(e.to_string()))?;
    let meta = trace::meta_from_json(&meta_text).map_err(|e| ReplayFailure(e.to_string()))?;
    let state = trace::replay(&meta, &records).map_err(|e| ReplayFailure(e.to_string()))?;
    Ok(ReplayOutcome { steps: records.len(), final_hash: observation_hash(&state) })
}

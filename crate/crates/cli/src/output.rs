//! Artifact writers. JSON is pretty-printed with a trailing newline, so
//! reading a file back and re-serializing it reproduces the same bytes.

use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use taskalloc::accounting::{ActionHistogram, CostLedger};
use taskalloc::kitchen::ActionKind;
use taskalloc::rational;

pub fn json_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    write_text(path, &json_string(value)?)
}

pub fn write_csv<R: Serialize>(path: &Path, rows: &[R]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct HistogramRow {
    action: &'static str,
    count: u64,
    fraction: f64,
}

pub fn write_histogram(path: &Path, histogram: &ActionHistogram) -> Result<()> {
    let fractions = histogram.fractions();
    let rows: Vec<HistogramRow> = ActionKind::ALL
        .into_iter()
        .map(|k| HistogramRow { action: k.name(), count: histogram.count(k), fraction: fractions[&k] })
        .collect();
    write_csv(path, &rows)
}

#[derive(Debug, Serialize)]
struct LedgerCsvRow {
    step: u32,
    role: String,
    model_id: String,
    tokens_in: u64,
    tokens_out: u64,
    usd: String,
    priced: bool,
}

pub fn write_ledger(path: &Path, ledger: &CostLedger) -> Result<()> {
    let rows: Vec<LedgerCsvRow> = ledger
        .ordered_rows()
        .into_iter()
        .map(|r| LedgerCsvRow {
            step: r.step,
            role: r.role.to_string(),
            model_id: r.model_id,
            tokens_in: r.tokens_in,
            tokens_out: r.tokens_out,
            usd: rational::to_decimal_string(&r.usd),
            priced: r.priced,
        })
        .collect();
    if rows.is_empty() {
        // csv writes no header without rows; keep the file self-describing.
        return write_text(path, "step,role,model_id,tokens_in,tokens_out,usd,priced\n");
    }
    write_csv(path, &rows)
}

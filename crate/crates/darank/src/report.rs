//! Report files: structured JSON plus a plain-text table with the columns
//! ID, N, PERF, SACC, DAC (and BLEU when human references were given).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use darank_core::evaluation::CorrelationTable;
use darank_core::{EvaluationReport, RankingFunction};
use serde::{Deserialize, Serialize};

use crate::error::DarankError;

/// Hashes of every input that shaped a run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    /// Input name (`ontology`, `train`, `test`) → SHA-256 of its bytes.
    pub inputs: BTreeMap<String, String>,
    /// Replay fixture file name → SHA-256 of its bytes.
    pub fixtures: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub id: String,
    pub rf: RankingFunction,
    pub report: EvaluationReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub config: serde_json::Value,
    pub provenance: Provenance,
    pub rows: Vec<ReportRow>,
}

pub fn render_table(rows: &[ReportRow]) -> String {
    let with_bleu = rows.iter().any(|r| r.report.bleu.is_some());
    let mut out = String::new();
    let _ = write!(out, "{:<10} {:>6} {:>7} {:>7} {:>7}", "ID", "N", "PERF", "SACC", "DAC");
    if with_bleu {
        let _ = write!(out, " {:>7}", "BLEU");
    }
    out.push('\n');
    for r in rows {
        let m = &r.report;
        let _ = write!(out, "{:<10} {:>6} {:>7.2} {:>7.2} {:>7.2}", r.id, m.n_items, m.perf, m.sacc, m.dac);
        if with_bleu {
            match m.bleu {
                Some(b) => {
                    let _ = write!(out, " {:>7.2}", 100.0 * b);
                }
                None => {
                    let _ = write!(out, " {:>7}", "-");
                }
            }
        }
        out.push('\n');
    }
    let blocks: Vec<_> = rows.iter().filter_map(|r| r.report.before_after.map(|ba| (&r.id, ba))).collect();
    if !blocks.is_empty() {
        let _ = writeln!(out, "\n{:<10} {:<7} {:>6} {:>7} {:>7} {:>7}", "ID", "STAGE", "N", "PERF", "SACC", "DAC");
        for (id, ba) in blocks {
            for (stage, m) in [("before", ba.before), ("after", ba.after)] {
                let _ = writeln!(out, "{:<10} {:<7} {:>6} {:>7.2} {:>7.2} {:>7.2}", id, stage, m.n, m.perf, m.sacc, m.dac);
            }
        }
    }
    out
}

pub fn render_correlations(table: &CorrelationTable) -> String {
    let mut out = format!("{:<10} {:>6} {:>9} {:>12}\n", "METRIC", "N", "R", "P");
    for row in &table.rows {
        let r = row.r.map_or("-".to_string(), |r| format!("{r:.4}"));
        let p = row.p_value.map_or("-".to_string(), |p| format!("{p:.3e}"));
        let _ = writeln!(out, "{:<10} {:>6} {:>9} {:>12}", row.metric, row.n, r, p);
    }
    out
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), DarankError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| DarankError::io(parent, e))?;
    }
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| DarankError::Other(e.to_string()))?;
    bytes.push(b'\n');
    std::fs::write(path, bytes).map_err(|e| DarankError::io(path, e))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, DarankError> {
    let bytes = std::fs::read(path).map_err(|e| DarankError::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| DarankError::Format { path: path.to_path_buf(), message: e.to_string() })
}

/// Writes `<stem>.json` and `<stem>.txt` into `dir`; returns both paths.
pub fn emit_report(dir: &Path, stem: &str, report: &ReportFile) -> Result<(PathBuf, PathBuf), DarankError> {
    let json = dir.join(format!("{stem}.json"));
    let txt = dir.join(format!("{stem}.txt"));
    write_json(&json, report)?;
    std::fs::write(&txt, render_table(&report.rows)).map_err(|e| DarankError::io(&txt, e))?;
    Ok((json, txt))
}

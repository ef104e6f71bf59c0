use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::OrchestratorError;
use crate::inference::{measure_throughput, throughput_cell, ThroughputStats};
use crate::langid::LanguageTag;
use crate::metrics::ScoreReport;

pub const SUMMARY_FILE: &str = "summary.json";
pub const DETAILS_FILE: &str = "details.jsonl";
pub const SCORES_FILE: &str = "scores.csv";

/// One scored sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub benchmark_id: String,
    pub sample_index: usize,
    /// `src-tgt` for translation, the subset tag otherwise.
    pub unit: String,
    pub prompt: String,
    pub raw_output: String,
    /// `None` when no answer could be extracted.
    pub postprocessed_output: Option<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub unparsed: bool,
    pub references: Vec<String>,
    pub per_metric_scores: BTreeMap<String, f64>,
    pub used_fallback_prompt: bool,
    /// Seconds; absent for requests that are not generations.
    pub wall_time: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generated_tokens: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThroughputCell {
    pub tokens: u64,
    pub seconds: f64,
    pub tokens_per_second: f64,
    /// `tokens / seconds = tokens/s`
    pub cell: String,
}

impl ThroughputCell {
    pub fn from_stats(stats: &ThroughputStats) -> Option<Self> {
        Some(Self {
            tokens: stats.tokens,
            seconds: stats.seconds,
            tokens_per_second: measure_throughput(stats).ok()?,
            cell: throughput_cell(stats).ok()?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitResult {
    pub unit: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tag: Option<LanguageTag>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_tag: Option<LanguageTag>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_tag: Option<LanguageTag>,
    /// Original benchmark labels the unit was read from.
    pub labels: Vec<String>,
    pub n_scored: usize,
    pub n_demonstrations: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt_language: Option<LanguageTag>,
    pub prompt_fallbacks: usize,
    pub unparsed: usize,
    pub scores: Vec<ScoreReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub throughput: Option<ThroughputCell>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchmarkStatus {
    Ok,
    /// Some units failed; the rest were scored.
    Partial,
    /// Aborted before any unit was scored.
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkResult {
    pub id: String,
    pub task_kind: String,
    pub status: BenchmarkStatus,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub errors: Vec<String>,
    pub units: Vec<UnitResult>,
}

/// Generation throughput aggregated per task and language.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThroughputRow {
    pub task: String,
    pub language: LanguageTag,
    #[serde(flatten)]
    pub cell: ThroughputCell,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub tool_version: String,
    pub config: serde_json::Value,
    pub metadata: BTreeMap<String, serde_json::Value>,
    pub benchmarks: Vec<BenchmarkResult>,
    pub prompt_fallbacks: usize,
    pub throughput: Vec<ThroughputRow>,
}

impl RunSummary {
    /// True when no benchmark aborted or partially failed.
    pub fn all_ok(&self) -> bool {
        self.benchmarks.iter().all(|b| b.status == BenchmarkStatus::Ok)
    }

    /// `(benchmark, unit, metric, value)` rows, one per corpus score.
    pub fn score_rows(&self) -> Vec<(String, String, String, f64)> {
        let mut rows = Vec::new();
        for b in &self.benchmarks {
            for u in &b.units {
                for s in &u.scores {
                    rows.push((b.id.clone(), u.unit.clone(), s.metric_id.clone(), s.corpus_score));
                }
            }
        }
        rows
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub summary: RunSummary,
    pub records: Vec<EvalRecord>,
}

pub fn summary_json(summary: &RunSummary) -> String {
    let mut s = serde_json::to_string_pretty(summary).expect("summary serializes");
    s.push('\n');
    s
}

pub fn details_jsonl(records: &[EvalRecord]) -> String {
    let mut s = String::new();
    for r in records {
        s.push_str(&serde_json::to_string(r).expect("record serializes"));
        s.push('\n');
    }
    s
}

pub fn scores_csv(summary: &RunSummary) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["benchmark", "unit", "metric", "value"]).expect("in-memory write");
    for (b, u, m, v) in summary.score_rows() {
        w.write_record([b, u, m, v.to_string()]).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

/// Writes `summary.json`, `scores.csv` and, when `store_details` is set,
/// `details.jsonl` (removing a stale one otherwise). Returns written paths.
pub fn emit_reports(
    outcome: &RunOutcome,
    out_dir: &Path,
    store_details: bool,
) -> Result<Vec<PathBuf>, OrchestratorError> {
    let unwritable = |e: std::io::Error| OrchestratorError::OutputDirNotWritable {
        path: out_dir.to_path_buf(),
        reason: e.to_string(),
    };
    fs::create_dir_all(out_dir).map_err(unwritable)?;
    let mut files = vec![
        (out_dir.join(SUMMARY_FILE), summary_json(&outcome.summary)),
        (out_dir.join(SCORES_FILE), scores_csv(&outcome.summary)),
    ];
    let details = out_dir.join(DETAILS_FILE);
    if store_details {
        files.push((details, details_jsonl(&outcome.records)));
    } else if details.exists() {
        fs::remove_file(&details).map_err(unwritable)?;
    }
    let mut written = Vec::new();
    for (path, content) in files {
        let mut f = fs::File::create(&path).map_err(unwritable)?;
        f.write_all(content.as_bytes()).map_err(unwritable)?;
        written.push(path);
    }
    Ok(written)
}

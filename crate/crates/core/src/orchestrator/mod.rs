//! Run configuration, the evaluation loop, output post-processing, and the
//! report files (`summary.json`, `details.jsonl`, `scores.csv`).

mod config;
mod postprocess;
mod report;
mod run;

use std::path::PathBuf;

use thiserror::Error;

use crate::langid::LangIdError;
use crate::promptlib::PromptError;
use crate::registry::RegistryError;

pub use config::{Overrides, RunConfig, ALL};
pub use postprocess::{clean_generation, extract_option_letter, postprocess, Postprocessed};
pub use report::{
    details_jsonl, emit_reports, scores_csv, summary_json, BenchmarkResult, BenchmarkStatus,
    EvalRecord, RunOutcome, RunSummary, ThroughputCell, ThroughputRow, UnitResult, DETAILS_FILE,
    SCORES_FILE, SUMMARY_FILE,
};
pub use run::{
    gold_option_letter, load_aligned_registry, plan_units, run, select_benchmarks, AlignedRegistry,
    Selection, Unit,
};

#[derive(Debug, Error)]
pub enum OrchestratorError {
    #[error("config: {0}")]
    Config(String),
    #[error("no benchmark matched: {0}")]
    NoBenchmarkMatched(String),
    #[error("a pivot is required for multi-aligned translation benchmarks: {0:?}")]
    MissingPivot(Vec<String>),
    #[error("backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error(transparent)]
    Prompts(#[from] PromptError),
    #[error(transparent)]
    LangId(#[from] LangIdError),
    #[error("output directory {} is not writable: {reason}", path.display())]
    OutputDirNotWritable { path: PathBuf, reason: String },
}

//! Language label alignment: benchmark labels to canonical `lang_Script` tags.
//!
//! Labels are resolved against a bundled ISO 639-3 table (exact code or name
//! match first, then suffix stripping, then fuzzy name similarity), and each
//! label's data is sampled to find its dominant script. The result is an
//! auditable [`AlignmentRecord`] per label plus a label → [`LanguageTag`]
//! dictionary used everywhere downstream.

mod align;
mod iso;
mod resolve;
mod script;
mod tag;

use std::io::Write;

use thiserror::Error;

pub use align::{align_benchmark, match_query, AlignOptions, Alignment, LanguageQuery};
pub use iso::{fold_label, IsoRow, IsoTable, Scope};
pub use resolve::{
    resolve_language, strip_suffixes, AlignmentRecord, Candidate, LanguageRef, MatchKind,
    ScopeKind, ScriptEvidence, ScriptSource, FUZZY_THRESHOLD, TOKEN_MATCH_WEIGHT,
};
pub use script::{
    detect_script, sample_line_indices, script_histogram, ScriptDetection, DEFAULT_SAMPLE_SIZE,
    DEFAULT_SEED,
};
pub use tag::{LanguageCode, LanguageTag, ScriptCode};

#[derive(Debug, Error)]
pub enum LangIdError {
    #[error("empty language label")]
    EmptyLabel,
    #[error("invalid ISO 639-3 code {0:?}")]
    InvalidCode(String),
    #[error("invalid ISO 15924 script code {0:?}")]
    InvalidScript(String),
    #[error("invalid language tag {0:?} (expected e.g. eng_Latn)")]
    InvalidTag(String),
    #[error("language code {0:?} is not in the ISO 639-3 table")]
    UnknownCode(String),
    #[error("query code {0:?} is not in the ISO 639-3 table")]
    UnknownQueryCode(String),
    #[error("no non-empty lines to detect a script from")]
    NoLines,
    #[error("sampled text has no characters with a specific script")]
    NoScriptEvidence,
    #[error("ISO table line {line}: {reason}")]
    TableFormat { line: usize, reason: String },
    #[error("ISO table integrity: {0}")]
    TableIntegrity(String),
}

/// Writes an alignment report as JSONL, one record per line.
pub fn write_report<W: Write>(mut w: W, report: &[AlignmentRecord]) -> std::io::Result<()> {
    for rec in report {
        serde_json::to_writer(&mut w, rec)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

//! Exact and fuzzy resolution of free-form benchmark language labels.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::iso::{fold_label, IsoTable, Scope};
use super::{LangIdError, LanguageCode, LanguageTag, ScriptCode};

/// Minimum normalized similarity for a fuzzy name match to be accepted.
pub const FUZZY_THRESHOLD: f64 = 0.8;

/// Weight applied to a match against a single word of a multi-word name
/// (e.g. `mandarin` against `Mandarin Chinese`), so whole-name matches win ties.
pub const TOKEN_MATCH_WEIGHT: f64 = 0.9;

const MAX_CANDIDATES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MatchKind {
    Exact,
    Fuzzy,
    NoMatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScopeKind {
    Individual,
    Macrolanguage,
    Unknown,
}

impl From<Scope> for ScopeKind {
    fn from(s: Scope) -> Self {
        match s {
            Scope::Individual => ScopeKind::Individual,
            Scope::Macrolanguage => ScopeKind::Macrolanguage,
        }
    }
}

/// A language code with the script filled in once known (`cmn` or `cmn_Hans`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LanguageRef {
    pub language: LanguageCode,
    pub script: Option<ScriptCode>,
}

impl LanguageRef {
    pub fn tag(&self) -> Option<LanguageTag> {
        self.script.map(|s| LanguageTag::new(self.language, s))
    }
}

impl fmt::Display for LanguageRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.script {
            Some(s) => write!(f, "{}_{}", self.language, s),
            None => write!(f, "{}", self.language),
        }
    }
}

impl Serialize for LanguageRef {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for LanguageRef {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        let (lang, script) = match s.split_once('_') {
            Some((l, sc)) => (l, Some(ScriptCode::parse(sc).map_err(serde::de::Error::custom)?)),
            None => (s.as_str(), None),
        };
        Ok(LanguageRef {
            language: LanguageCode::parse(lang).map_err(serde::de::Error::custom)?,
            script,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub language: LanguageCode,
    pub confidence: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScriptSource {
    /// `script_overrides` entry in the benchmark descriptor.
    Override,
    /// Script suffix carried by the label itself (`eng_Latn`).
    Label,
    /// Majority Unicode script of sampled data lines.
    Detected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptEvidence {
    pub script: ScriptCode,
    pub source: ScriptSource,
    /// Detector output, kept even when an override or label suffix wins.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detected: Option<ScriptCode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detected_confidence: Option<f64>,
}

/// One line of the alignment report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentRecord {
    pub source_label: String,
    pub resolved: Option<LanguageRef>,
    pub match_kind: MatchKind,
    pub scope: ScopeKind,
    pub confidence: f64,
    pub candidates: Vec<Candidate>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub stripped_suffixes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub script: Option<ScriptEvidence>,
}

impl AlignmentRecord {
    pub fn tag(&self) -> Option<LanguageTag> {
        self.resolved.and_then(|r| r.tag())
    }

    /// Script suffix stripped from the label, if it was one.
    pub fn label_script(&self) -> Option<ScriptCode> {
        self.stripped_suffixes
            .iter()
            .find_map(|s| ScriptCode::parse_loose(s).ok())
    }
}

/// Splits trailing region (`-CN`) and script (`_Latn`) components off a label.
/// Returns the remaining label and the stripped components in label order.
pub fn strip_suffixes<'a>(table: &IsoTable, label: &'a str) -> (&'a str, Vec<String>) {
    let mut rest = label;
    let mut stripped = Vec::new();
    for _ in 0..2 {
        let Some(pos) = rest.rfind(['-', '_', ' ']) else { break };
        let (head, tail) = (&rest[..pos], &rest[pos + 1..]);
        if head.trim().is_empty() {
            break;
        }
        let is_region = tail.len() == 2 && tail.chars().all(|c| c.is_ascii_uppercase());
        let is_script = tail.len() == 4
            && tail.is_ascii()
            && ScriptCode::parse_loose(tail)
                .map(|s| table.is_known_script(s))
                .unwrap_or(false);
        if !(is_region || is_script) {
            break;
        }
        stripped.insert(0, tail.to_string());
        rest = head.trim_end();
    }
    (rest, stripped)
}

fn rank_rows(table: &IsoTable, mut rows: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
    rows.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(Ordering::Equal)
            .then_with(|| {
                let (ra, rb) = (&table.rows()[a.0], &table.rows()[b.0]);
                ra.scope.cmp(&rb.scope).then(ra.iso639_3.cmp(&rb.iso639_3))
            })
    });
    rows
}

fn exact_rows(table: &IsoTable, label: &str) -> Vec<usize> {
    let folded = fold_label(label);
    if !folded.contains(' ') {
        if let Some(i) = table.row_index_by_code(&folded) {
            return vec![i];
        }
    }
    table.rows_by_folded_name(&folded).to_vec()
}

#[allow(clippy::ptr_arg)]
fn similarity(a: &Vec<char>, b: &Vec<char>) -> f64 {
    let max_len = a.len().max(b.len());
    if max_len == 0 {
        return 1.0;
    }
    1.0 - strsim::generic_levenshtein(a, b) as f64 / max_len as f64
}

/// Best similarity of `label` against every row's names, one score per row.
pub(crate) fn score_rows(table: &IsoTable, folded_label: &str) -> Vec<(usize, f64)> {
    let label: Vec<char> = folded_label.chars().collect();
    let mut best = vec![f64::NEG_INFINITY; table.len()];
    for entry in &table.names {
        let mut score = similarity(&label, &entry.folded);
        if entry.tokens.len() > 1 {
            for tok in &entry.tokens {
                score = score.max(TOKEN_MATCH_WEIGHT * similarity(&label, tok));
            }
        }
        if score > best[entry.row] {
            best[entry.row] = score;
        }
    }
    best.into_iter()
        .enumerate()
        .filter(|(_, s)| s.is_finite())
        .collect()
}

fn record_from(
    table: &IsoTable,
    source_label: &str,
    stripped: Vec<String>,
    kind: MatchKind,
    ranked: &[(usize, f64)],
) -> AlignmentRecord {
    let candidates: Vec<Candidate> = ranked
        .iter()
        .take(MAX_CANDIDATES)
        .map(|&(i, c)| Candidate { language: table.rows()[i].iso639_3, confidence: c })
        .collect();
    let (resolved, scope, confidence) = match (kind, ranked.first()) {
        (MatchKind::NoMatch, _) | (_, None) => (None, ScopeKind::Unknown, 0.0),
        (_, Some(&(i, c))) => {
            let row = &table.rows()[i];
            let conf = if kind == MatchKind::Exact { 1.0 } else { c };
            (Some(LanguageRef { language: row.iso639_3, script: None }), row.scope.into(), conf)
        }
    };
    AlignmentRecord {
        source_label: source_label.to_string(),
        resolved,
        match_kind: kind,
        scope,
        confidence,
        candidates,
        stripped_suffixes: stripped,
        script: None,
    }
}

/// Resolves one benchmark label against the ISO table.
///
/// Codes of any of the four ISO 639 parts and reference/alternate names match
/// exactly (case-folded, `-`/`_`/space equivalent). Failing that, trailing
/// region and script components are stripped and the lookup retried, then a
/// fuzzy name search runs on what remains.
pub fn resolve_language(table: &IsoTable, label: &str) -> Result<AlignmentRecord, LangIdError> {
    let trimmed = label.trim();
    if trimmed.is_empty() {
        return Err(LangIdError::EmptyLabel);
    }

    let exact = exact_rows(table, trimmed);
    if !exact.is_empty() {
        let ranked = rank_rows(table, exact.into_iter().map(|i| (i, 1.0)).collect());
        return Ok(record_from(table, label, Vec::new(), MatchKind::Exact, &ranked));
    }

    let (core, stripped) = strip_suffixes(table, trimmed);
    if !stripped.is_empty() {
        let exact = exact_rows(table, core);
        if !exact.is_empty() {
            let ranked = rank_rows(table, exact.into_iter().map(|i| (i, 1.0)).collect());
            return Ok(record_from(table, label, stripped, MatchKind::Exact, &ranked));
        }
    }

    let ranked = rank_rows(table, score_rows(table, &fold_label(core)));
    let kind = match ranked.first() {
        Some(&(_, s)) if s >= FUZZY_THRESHOLD => MatchKind::Fuzzy,
        _ => MatchKind::NoMatch,
    };
    Ok(record_from(table, label, stripped, kind, &ranked))
}

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use super::resolve::{resolve_language, MatchKind, ScriptEvidence, ScriptSource};
use super::script::{detect_script, DEFAULT_SAMPLE_SIZE, DEFAULT_SEED};
use super::{AlignmentRecord, IsoTable, LangIdError, LanguageCode, LanguageTag, ScriptCode};
use crate::registry::BenchmarkDescriptor;

#[derive(Debug, Clone, Copy)]
pub struct AlignOptions {
    pub sample_size: usize,
    pub seed: u64,
}

impl Default for AlignOptions {
    fn default() -> Self {
        Self { sample_size: DEFAULT_SAMPLE_SIZE, seed: DEFAULT_SEED }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Alignment {
    pub lang_dict: BTreeMap<String, LanguageTag>,
    pub report: Vec<AlignmentRecord>,
}

/// Resolves every original label of a benchmark and attaches a script.
///
/// Script precedence: descriptor override, then a script suffix on the label,
/// then detection over the label's data lines. Detection still runs when an
/// override exists so that disagreements show up in the report.
/// Labels that do not resolve (or get no script) stay in the report only.
pub fn align_benchmark<F, E>(
    table: &IsoTable,
    descriptor: &BenchmarkDescriptor,
    mut corpus_sampler: F,
    opts: AlignOptions,
) -> Alignment
where
    F: FnMut(&str) -> Result<Vec<String>, E>,
    E: fmt::Display,
{
    let mut out = Alignment::default();
    for label in &descriptor.labels {
        let mut record = match resolve_language(table, label) {
            Ok(r) => r,
            Err(e) => {
                out.report.push(AlignmentRecord {
                    source_label: label.clone(),
                    resolved: None,
                    match_kind: MatchKind::NoMatch,
                    scope: super::ScopeKind::Unknown,
                    confidence: 0.0,
                    candidates: Vec::new(),
                    stripped_suffixes: Vec::new(),
                    script: None,
                });
                log::warn!("label {label:?}: {e}");
                continue;
            }
        };
        if record.match_kind == MatchKind::NoMatch {
            out.report.push(record);
            continue;
        }

        let detected = match corpus_sampler(label) {
            Ok(lines) => detect_script(&lines, opts.sample_size, opts.seed).ok(),
            Err(e) => {
                log::warn!("label {label:?}: cannot sample data for script detection: {e}");
                None
            }
        };
        let chosen = descriptor
            .script_overrides
            .get(label)
            .map(|s| (*s, ScriptSource::Override))
            .or_else(|| record.label_script().map(|s| (s, ScriptSource::Label)))
            .or_else(|| detected.map(|d| (d.script, ScriptSource::Detected)));

        if let Some((script, source)) = chosen {
            if let Some(d) = detected {
                if d.script != script && source != ScriptSource::Detected {
                    log::info!(
                        "label {label:?}: detected {} but using {script} from {source:?}",
                        d.script
                    );
                }
            }
            record.script = Some(ScriptEvidence {
                script,
                source,
                detected: detected.map(|d| d.script),
                detected_confidence: detected.map(|d| d.confidence),
            });
            if let Some(r) = record.resolved.as_mut() {
                r.script = Some(script);
                out.lang_dict.insert(label.clone(), LanguageTag::new(r.language, script));
            }
        }
        out.report.push(record);
    }
    out
}

/// A language query item: a bare ISO 639-3 code or a full tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LanguageQuery {
    Code(LanguageCode),
    Tag(LanguageTag),
}

impl FromStr for LanguageQuery {
    type Err = LangIdError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.contains('_') {
            Ok(LanguageQuery::Tag(LanguageTag::parse(s)?))
        } else {
            Ok(LanguageQuery::Code(LanguageCode::parse(s)?))
        }
    }
}

impl fmt::Display for LanguageQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LanguageQuery::Code(c) => c.fmt(f),
            LanguageQuery::Tag(t) => t.fmt(f),
        }
    }
}

impl LanguageQuery {
    pub fn language(&self) -> LanguageCode {
        match self {
            LanguageQuery::Code(c) => *c,
            LanguageQuery::Tag(t) => t.language,
        }
    }

    fn script(&self) -> Option<ScriptCode> {
        match self {
            LanguageQuery::Code(_) => None,
            LanguageQuery::Tag(t) => Some(t.script),
        }
    }

    /// Whether an aligned subset tag is selected by this query item.
    pub fn matches(&self, table: &IsoTable, tag: LanguageTag) -> bool {
        if let Some(script) = self.script() {
            if script != tag.script {
                return false;
            }
        }
        let lang = self.language();
        tag.language == lang || table.members(lang).contains(&tag.language)
    }
}

/// Selects, per benchmark, the original labels whose aligned tag matches any
/// query item. Benchmarks with no matching subset are left out.
pub fn match_query(
    table: &IsoTable,
    query: &[LanguageQuery],
    registry: &[BenchmarkDescriptor],
) -> Result<BTreeMap<String, Vec<String>>, LangIdError> {
    for q in query {
        if !table.contains(q.language()) {
            return Err(LangIdError::UnknownQueryCode(q.to_string()));
        }
    }
    let mut out = BTreeMap::new();
    for bench in registry {
        let hits: Vec<String> = bench
            .labels
            .iter()
            .filter(|label| {
                bench
                    .lang_dict
                    .get(*label)
                    .map(|tag| query.iter().any(|q| q.matches(table, *tag)))
                    .unwrap_or(false)
            })
            .cloned()
            .collect();
        if !hits.is_empty() {
            out.insert(bench.id.clone(), hits);
        }
    }
    Ok(out)
}

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{AlignmentMode, BenchmarkDescriptor, DataFormat, Direction, RegistryError, TaskKind};
use crate::langid::LanguageTag;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Gender {
    Masculine,
    Feminine,
}

impl Gender {
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "m" | "masc" | "masculine" => Some(Gender::Masculine),
            "f" | "fem" | "feminine" => Some(Gender::Feminine),
            _ => None,
        }
    }
}

/// One evaluation item, in the shape shared by all data formats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub benchmark_id: String,
    /// Position of the source line or record (0-based).
    pub index: usize,
    pub input_text: String,
    pub references: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub choices: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tokens: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tags: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gender: Option<Gender>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source_tag: Option<LanguageTag>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_tag: Option<LanguageTag>,
}

impl Sample {
    fn bare(benchmark_id: &str, index: usize, input_text: String) -> Self {
        Self {
            benchmark_id: benchmark_id.to_string(),
            index,
            input_text,
            references: Vec::new(),
            label: None,
            choices: Vec::new(),
            tokens: None,
            tags: None,
            gender: None,
            source_tag: None,
            target_tag: None,
        }
    }
}

fn read(path: &Path) -> Result<String, RegistryError> {
    if !path.is_file() {
        return Err(RegistryError::MissingFile(path.to_path_buf()));
    }
    fs::read_to_string(path).map_err(|e| RegistryError::Io { path: path.to_path_buf(), source: e })
}

pub(crate) fn read_lines(path: &Path) -> Result<Vec<String>, RegistryError> {
    Ok(read(path)?.lines().map(str::to_string).collect())
}

fn truncate<T>(mut v: Vec<T>, limit: Option<usize>) -> Vec<T> {
    if let Some(n) = limit {
        v.truncate(n);
    }
    v
}

/// Lines of every per-language file must agree for multi-aligned benchmarks.
fn check_multi_aligned(desc: &BenchmarkDescriptor) -> Result<(), RegistryError> {
    let mut counts = Vec::with_capacity(desc.labels.len());
    for label in &desc.labels {
        counts.push((label.clone(), read_lines(&desc.file_for(label))?.len()));
    }
    if counts.windows(2).any(|w| w[0].1 != w[1].1) {
        return Err(RegistryError::RaggedParallelData { benchmark: desc.id.clone(), counts });
    }
    Ok(())
}

fn read_genders(desc: &BenchmarkDescriptor) -> Result<Option<Vec<Option<Gender>>>, RegistryError> {
    match &desc.gender_file {
        None => Ok(None),
        Some(p) => Ok(Some(read_lines(p)?.iter().map(|l| Gender::parse(l)).collect())),
    }
}

/// Text lines used to detect a label's script.
pub fn corpus_lines(desc: &BenchmarkDescriptor, label: &str) -> Result<Vec<String>, RegistryError> {
    let samples = load_label_samples(desc, label, None)?;
    Ok(samples.into_iter().map(|s| s.input_text).collect())
}

/// Loads the subset aligned to `tag`. `limit` keeps the first N items.
pub fn load_samples(
    desc: &BenchmarkDescriptor,
    tag: LanguageTag,
    limit: Option<usize>,
) -> Result<Vec<Sample>, RegistryError> {
    let label = desc
        .label_for(tag)
        .ok_or_else(|| RegistryError::TagNotInBenchmark { benchmark: desc.id.clone(), tag })?;
    load_label_samples(desc, label, limit)
}

/// Loads one original-label subset.
pub fn load_label_samples(
    desc: &BenchmarkDescriptor,
    label: &str,
    limit: Option<usize>,
) -> Result<Vec<Sample>, RegistryError> {
    let path = desc.file_for(label);
    match desc.data_format {
        DataFormat::ParallelPerLanguageFiles => {
            if desc.alignment_mode == AlignmentMode::MultiAligned {
                check_multi_aligned(desc)?;
            }
            let genders = read_genders(desc)?;
            let lines = read_lines(&path)?;
            Ok(truncate(
                lines
                    .into_iter()
                    .enumerate()
                    .map(|(i, line)| {
                        let mut s = Sample::bare(&desc.id, i, line);
                        s.gender = genders.as_ref().and_then(|g| g.get(i).copied().flatten());
                        s
                    })
                    .collect(),
                limit,
            ))
        }
        DataFormat::JsonlRecords => load_jsonl(desc, &path, limit),
        DataFormat::TokenTag2Col => load_token_tags(desc, &path, limit),
    }
}

fn string_list(v: &Value) -> Option<Vec<String>> {
    match v {
        Value::String(s) => Some(vec![s.clone()]),
        Value::Array(items) => items.iter().map(|i| i.as_str().map(String::from)).collect(),
        _ => None,
    }
}

fn scalar_text(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        Value::Bool(b) => Some(b.to_string()),
        _ => None,
    }
}

fn load_jsonl(
    desc: &BenchmarkDescriptor,
    path: &Path,
    limit: Option<usize>,
) -> Result<Vec<Sample>, RegistryError> {
    let text = read(path)?;
    let malformed = |line: usize, reason: String| RegistryError::MalformedRow {
        file: path.to_path_buf(),
        line,
        reason,
    };
    let input_key = desc.field("input").unwrap_or("input");
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if limit.is_some_and(|n| out.len() >= n) {
            break;
        }
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value =
            serde_json::from_str(line).map_err(|e| malformed(line_no, e.to_string()))?;
        let obj = value
            .as_object()
            .ok_or_else(|| malformed(line_no, "record is not a JSON object".into()))?;
        let input = obj
            .get(input_key)
            .and_then(Value::as_str)
            .ok_or_else(|| malformed(line_no, format!("missing string field {input_key:?}")))?;
        let mut s = Sample::bare(&desc.id, out.len(), input.to_string());
        if let Some(key) = desc.field("reference") {
            if let Some(v) = obj.get(key) {
                s.references = string_list(v)
                    .ok_or_else(|| malformed(line_no, format!("{key:?} must be text")))?;
            }
        }
        if let Some(key) = desc.field("label") {
            s.label = obj.get(key).and_then(scalar_text);
        }
        if let Some(key) = desc.field("answer") {
            s.label = obj.get(key).and_then(scalar_text).or(s.label);
        }
        if let Some(key) = desc.field("choices") {
            s.choices = obj
                .get(key)
                .and_then(string_list)
                .ok_or_else(|| malformed(line_no, format!("{key:?} must be a list of text")))?;
        }
        if let Some(key) = desc.field("gender") {
            s.gender = obj.get(key).and_then(Value::as_str).and_then(Gender::parse);
        }
        if desc.task_kind == TaskKind::Classification && s.label.is_none() {
            return Err(malformed(line_no, "classification record without a label".into()));
        }
        out.push(s);
    }
    Ok(out)
}

fn load_token_tags(
    desc: &BenchmarkDescriptor,
    path: &Path,
    limit: Option<usize>,
) -> Result<Vec<Sample>, RegistryError> {
    let text = read(path)?;
    let mut out = Vec::new();
    let mut tokens = Vec::new();
    let mut tags = Vec::new();
    let flush = |tokens: &mut Vec<String>, tags: &mut Vec<String>, out: &mut Vec<Sample>| {
        if tokens.is_empty() {
            return;
        }
        let mut s = Sample::bare(&desc.id, out.len(), tokens.join(" "));
        s.tokens = Some(std::mem::take(tokens));
        s.tags = Some(std::mem::take(tags));
        out.push(s);
    };
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            flush(&mut tokens, &mut tags, &mut out);
            if limit.is_some_and(|n| out.len() >= n) {
                return Ok(out);
            }
            continue;
        }
        let (tok, tag) = line.split_once('\t').ok_or_else(|| RegistryError::MalformedRow {
            file: path.to_path_buf(),
            line: i + 1,
            reason: "expected token<TAB>tag".into(),
        })?;
        if tok.is_empty() || tag.trim().is_empty() || tag.contains('\t') {
            return Err(RegistryError::MalformedRow {
                file: path.to_path_buf(),
                line: i + 1,
                reason: "expected token<TAB>tag".into(),
            });
        }
        tokens.push(tok.to_string());
        tags.push(tag.trim().to_string());
    }
    flush(&mut tokens, &mut tags, &mut out);
    Ok(truncate(out, limit))
}

/// Loads source/reference pairs for one translation direction.
pub fn load_direction_samples(
    desc: &BenchmarkDescriptor,
    direction: Direction,
    limit: Option<usize>,
) -> Result<Vec<Sample>, RegistryError> {
    if desc.task_kind != TaskKind::Translation {
        return Err(RegistryError::NotATranslationBenchmark(desc.id.clone()));
    }
    let label = |tag| {
        desc.label_for(tag)
            .ok_or_else(|| RegistryError::TagNotInBenchmark { benchmark: desc.id.clone(), tag })
    };
    let (src_label, tgt_label) = (label(direction.source)?, label(direction.target)?);
    if desc.alignment_mode == AlignmentMode::MultiAligned {
        check_multi_aligned(desc)?;
    }
    let src = read_lines(&desc.file_for(src_label))?;
    let tgt = read_lines(&desc.file_for(tgt_label))?;
    if src.len() != tgt.len() {
        return Err(RegistryError::RaggedParallelData {
            benchmark: desc.id.clone(),
            counts: vec![(src_label.to_string(), src.len()), (tgt_label.to_string(), tgt.len())],
        });
    }
    let genders = read_genders(desc)?;
    let samples = src
        .into_iter()
        .zip(tgt)
        .enumerate()
        .map(|(i, (s, t))| {
            let mut sample = Sample::bare(&desc.id, i, s);
            sample.references = vec![t];
            sample.source_tag = Some(direction.source);
            sample.target_tag = Some(direction.target);
            sample.gender = genders.as_ref().and_then(|g| g.get(i).copied().flatten());
            sample
        })
        .collect();
    Ok(truncate(samples, limit))
}

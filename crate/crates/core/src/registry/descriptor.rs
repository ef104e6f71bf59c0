use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::RegistryError;
use crate::langid::{LanguageTag, ScriptCode};
use crate::metrics::MetricId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Translation,
    Classification,
    TokenClassification,
    Summarization,
    OpenGeneration,
    Comprehension,
    Intrinsic,
}

impl TaskKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            TaskKind::Translation => "translation",
            TaskKind::Classification => "classification",
            TaskKind::TokenClassification => "token_classification",
            TaskKind::Summarization => "summarization",
            TaskKind::OpenGeneration => "open_generation",
            TaskKind::Comprehension => "comprehension",
            TaskKind::Intrinsic => "intrinsic",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        serde_json::from_value(Value::String(s.to_string())).ok()
    }

    /// Tasks answered by free generation (as opposed to choice scoring or NLL).
    pub fn is_generative(&self) -> bool {
        matches!(
            self,
            TaskKind::Translation
                | TaskKind::Summarization
                | TaskKind::OpenGeneration
                | TaskKind::Comprehension
                | TaskKind::TokenClassification
        )
    }
}

impl std::fmt::Display for TaskKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlignmentMode {
    MultiAligned,
    Pairwise,
    Monolingual,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataFormat {
    ParallelPerLanguageFiles,
    JsonlRecords,
    #[serde(rename = "token_tag_2col")]
    TokenTag2Col,
}

impl DataFormat {
    pub fn extension(&self) -> &'static str {
        match self {
            DataFormat::ParallelPerLanguageFiles => "txt",
            DataFormat::JsonlRecords => "jsonl",
            DataFormat::TokenTag2Col => "tsv",
        }
    }
}

/// Roles a JSONL record key can play; `field_map` maps role → key.
pub const FIELD_ROLES: &[&str] = &["input", "reference", "label", "choices", "answer", "gender"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkDescriptor {
    pub id: String,
    pub task_kind: TaskKind,
    pub alignment_mode: AlignmentMode,
    pub data_format: DataFormat,
    /// Absolute, or resolved against the descriptor file's directory.
    pub root_path: PathBuf,
    pub labels: Vec<String>,
    pub metrics: Vec<MetricId>,
    pub script_overrides: BTreeMap<String, ScriptCode>,
    pub field_map: BTreeMap<String, String>,
    /// Directed (source label, target label) pairs for pairwise benchmarks.
    pub pairs: Vec<(String, String)>,
    /// Candidate class names for classification benchmarks.
    pub class_labels: Vec<String>,
    /// Stop markers passed to generation; defaults to a blank line.
    pub stop: Vec<String>,
    /// Optional per-line gender markers aligned with the parallel files.
    pub gender_file: Option<PathBuf>,
    /// Filled by language alignment.
    pub lang_dict: BTreeMap<String, LanguageTag>,
}

pub const DEFAULT_STOP: &str = "\n\n";

impl BenchmarkDescriptor {
    pub fn file_for(&self, label: &str) -> PathBuf {
        self.root_path.join(format!("{label}.{}", self.data_format.extension()))
    }

    /// First original label aligned to `tag`, in label order.
    pub fn label_for(&self, tag: LanguageTag) -> Option<&str> {
        self.labels
            .iter()
            .find(|l| self.lang_dict.get(*l) == Some(&tag))
            .map(String::as_str)
    }

    /// Distinct aligned tags, sorted by canonical rendering.
    pub fn aligned_tags(&self) -> Vec<LanguageTag> {
        let set: BTreeSet<String> = self.lang_dict.values().map(|t| t.to_string()).collect();
        set.iter().map(|s| LanguageTag::parse(s).expect("valid tag")).collect()
    }

    pub fn field(&self, role: &str) -> Option<&str> {
        self.field_map.get(role).map(String::as_str)
    }

    /// Parses and validates one `*.benchmark.json` document. `base_dir` anchors
    /// a relative `root_path`.
    pub fn from_json(text: &str, file: &Path, base_dir: &Path) -> Result<Self, RegistryError> {
        let violation = |field: &str, reason: String| RegistryError::SchemaViolation {
            file: file.to_path_buf(),
            field: field.to_string(),
            reason,
        };
        let value: Value =
            serde_json::from_str(text).map_err(|e| violation("<document>", e.to_string()))?;
        let Value::Object(obj) = value else {
            return Err(violation("<document>", "top level must be an object".into()));
        };

        fn get<T: DeserializeOwned>(
            obj: &Map<String, Value>,
            key: &str,
        ) -> Result<Option<T>, String> {
            match obj.get(key) {
                None | Some(Value::Null) => Ok(None),
                Some(v) => serde_json::from_value(v.clone()).map(Some).map_err(|e| e.to_string()),
            }
        }
        let required = |key: &str| -> Result<Value, RegistryError> {
            obj.get(key)
                .filter(|v| !v.is_null())
                .cloned()
                .ok_or_else(|| violation(key, "missing required field".into()))
        };
        macro_rules! req {
            ($key:literal, $ty:ty) => {{
                let v = required($key)?;
                serde_json::from_value::<$ty>(v).map_err(|e| violation($key, e.to_string()))?
            }};
        }
        macro_rules! opt {
            ($key:literal, $ty:ty) => {
                get::<$ty>(&obj, $key).map_err(|e| violation($key, e))?
            };
        }

        let id: String = req!("id", String);
        if id.trim().is_empty() {
            return Err(violation("id", "must be non-empty".into()));
        }
        let task_kind: TaskKind = req!("task_kind", TaskKind);
        let alignment_mode: AlignmentMode = req!("alignment_mode", AlignmentMode);
        let data_format: DataFormat = req!("data_format", DataFormat);
        let root: String = req!("root_path", String);
        let labels: Vec<String> = req!("labels", Vec<String>);
        let metric_names: Vec<String> = req!("metrics", Vec<String>);
        let script_overrides: BTreeMap<String, String> =
            opt!("script_overrides", BTreeMap<String, String>).unwrap_or_default();
        let field_map: BTreeMap<String, String> =
            opt!("field_map", BTreeMap<String, String>).unwrap_or_default();
        let pairs: Vec<(String, String)> =
            opt!("pairs", Vec<(String, String)>).unwrap_or_default();
        let class_labels: Vec<String> = opt!("class_labels", Vec<String>).unwrap_or_default();
        let stop: Vec<String> =
            opt!("stop", Vec<String>).unwrap_or_else(|| vec![DEFAULT_STOP.to_string()]);
        let gender_file: Option<String> = opt!("gender_file", String);

        if labels.is_empty() {
            return Err(violation("labels", "at least one label is required".into()));
        }
        let mut seen = BTreeSet::new();
        for l in &labels {
            if l.trim().is_empty() || !seen.insert(l.as_str()) {
                return Err(violation("labels", format!("empty or duplicate label {l:?}")));
            }
        }

        let mut metrics = Vec::new();
        for name in &metric_names {
            let m = MetricId::parse(name)
                .ok_or_else(|| violation("metrics", format!("unknown metric id {name:?}")))?;
            if !m.applies_to(task_kind) {
                return Err(violation(
                    "metrics",
                    format!("metric {name:?} does not apply to {task_kind} tasks"),
                ));
            }
            metrics.push(m);
        }
        if metrics.is_empty() {
            return Err(violation("metrics", "at least one metric is required".into()));
        }

        let mut overrides = BTreeMap::new();
        for (label, script) in script_overrides {
            if !seen.contains(label.as_str()) {
                return Err(violation("script_overrides", format!("unknown label {label:?}")));
            }
            let code = ScriptCode::parse(&script)
                .map_err(|e| violation("script_overrides", e.to_string()))?;
            overrides.insert(label, code);
        }

        for role in field_map.keys() {
            if !FIELD_ROLES.contains(&role.as_str()) {
                return Err(violation("field_map", format!("unknown role {role:?}")));
            }
        }

        for (s, t) in &pairs {
            if !seen.contains(s.as_str()) || !seen.contains(t.as_str()) || s == t {
                return Err(violation("pairs", format!("invalid pair [{s:?}, {t:?}]")));
            }
        }

        match task_kind {
            TaskKind::Translation => {
                if alignment_mode == AlignmentMode::Monolingual {
                    return Err(violation(
                        "alignment_mode",
                        "translation benchmarks cannot be monolingual".into(),
                    ));
                }
                if data_format != DataFormat::ParallelPerLanguageFiles {
                    return Err(violation(
                        "data_format",
                        "translation benchmarks use parallel_per_language_files".into(),
                    ));
                }
                if alignment_mode == AlignmentMode::Pairwise && pairs.is_empty() {
                    return Err(violation("pairs", "pairwise benchmarks must list pairs".into()));
                }
            }
            TaskKind::Classification if class_labels.is_empty() => {
                return Err(violation("class_labels", "classification needs class labels".into()));
            }
            TaskKind::TokenClassification if data_format != DataFormat::TokenTag2Col => {
                return Err(violation(
                    "data_format",
                    "token classification uses token_tag_2col".into(),
                ));
            }
            TaskKind::Comprehension => {
                for role in ["input", "choices", "answer"] {
                    if !field_map.contains_key(role) {
                        return Err(violation("field_map", format!("missing role {role:?}")));
                    }
                }
            }
            _ => {}
        }
        if data_format == DataFormat::JsonlRecords && !field_map.contains_key("input") {
            return Err(violation("field_map", "jsonl records need an \"input\" role".into()));
        }
        if gender_file.is_some() && data_format != DataFormat::ParallelPerLanguageFiles {
            return Err(violation("gender_file", "only valid with parallel files".into()));
        }

        let root_path = {
            let p = PathBuf::from(&root);
            if p.is_absolute() { p } else { base_dir.join(p) }
        };
        let gender_file = gender_file.map(|g| root_path.join(g));

        Ok(Self {
            id,
            task_kind,
            alignment_mode,
            data_format,
            root_path,
            labels,
            metrics,
            script_overrides: overrides,
            field_map,
            pairs,
            class_labels,
            stop,
            gender_file,
            lang_dict: BTreeMap::new(),
        })
    }
}

/// Reads every `*.benchmark.json` in `config_dir` (sorted by file name).
pub fn load_registry(config_dir: &Path) -> Result<Vec<BenchmarkDescriptor>, RegistryError> {
    let entries = fs::read_dir(config_dir)
        .map_err(|e| RegistryError::Io { path: config_dir.to_path_buf(), source: e })?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .map(|n| n.ends_with(".benchmark.json"))
                .unwrap_or(false)
        })
        .collect();
    files.sort();

    let mut out: Vec<BenchmarkDescriptor> = Vec::with_capacity(files.len());
    for file in files {
        let text = fs::read_to_string(&file)
            .map_err(|e| RegistryError::Io { path: file.clone(), source: e })?;
        let desc = BenchmarkDescriptor::from_json(&text, &file, config_dir)?;
        if out.iter().any(|d| d.id == desc.id) {
            return Err(RegistryError::DuplicateId(desc.id));
        }
        out.push(desc);
    }
    Ok(out)
}

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{PromptError, PromptMode, PromptStrategy, PromptTemplate, ENGLISH};
use crate::langid::LanguageTag;
use crate::registry::TaskKind;

/// On-disk shape of one library entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Entry {
    instruction: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    fewshot_item: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    provenance: Option<String>,
}

/// Templates keyed by task kind, then language tag.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PromptLibrary {
    templates: BTreeMap<TaskKind, BTreeMap<LanguageTag, PromptTemplate>>,
}

pub fn library_file(dir: &Path, task: TaskKind) -> PathBuf {
    dir.join(format!("{}.json", task.as_str()))
}

impl PromptLibrary {
    pub fn new() -> Self {
        Self::default()
    }

    /// Loads every `<task_kind>.json` present in `dir`. A missing directory
    /// is an error; missing task files are simply absent from the library.
    pub fn load_dir(dir: &Path) -> Result<Self, PromptError> {
        if !dir.is_dir() {
            return Err(PromptError::Library { path: dir.to_path_buf(), reason: "not a directory".into() });
        }
        let mut lib = Self::new();
        for task in ALL_TASKS {
            let path = library_file(dir, *task);
            if path.is_file() {
                lib.load_file(&path, *task)?;
            }
        }
        Ok(lib)
    }

    pub fn load_file(&mut self, path: &Path, task: TaskKind) -> Result<(), PromptError> {
        let err = |reason: String| PromptError::Library { path: path.to_path_buf(), reason };
        let text = fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        let entries: BTreeMap<String, Entry> = serde_json::from_str(&text).map_err(|e| err(e.to_string()))?;
        for (key, e) in entries {
            let tag = LanguageTag::parse(&key).map_err(|e| err(e.to_string()))?;
            let mut t = PromptTemplate::new(task, tag, e.instruction, e.fewshot_item)
                .map_err(|e| err(e.to_string()))?;
            t.provenance = e.provenance;
            self.insert(t);
        }
        Ok(())
    }

    /// Writes the task's templates as pretty JSON with sorted keys.
    pub fn save_task(&self, dir: &Path, task: TaskKind) -> Result<PathBuf, PromptError> {
        let path = library_file(dir, task);
        let entries: BTreeMap<String, Entry> = self
            .templates
            .get(&task)
            .into_iter()
            .flatten()
            .map(|(tag, t)| {
                let e = Entry {
                    instruction: t.instruction.clone(),
                    fewshot_item: t.fewshot_item.clone(),
                    provenance: t.provenance.clone(),
                };
                (tag.to_string(), e)
            })
            .collect();
        let mut text = serde_json::to_string_pretty(&entries).expect("entries serialize");
        text.push('\n');
        fs::create_dir_all(dir)
            .and_then(|_| fs::write(&path, text))
            .map_err(|e| PromptError::Library { path: path.clone(), reason: e.to_string() })?;
        Ok(path)
    }

    pub fn insert(&mut self, template: PromptTemplate) -> Option<PromptTemplate> {
        self.templates.entry(template.task_kind).or_default().insert(template.tag, template)
    }

    pub fn get(&self, task: TaskKind, tag: LanguageTag) -> Option<&PromptTemplate> {
        self.templates.get(&task)?.get(&tag)
    }

    pub fn tags(&self, task: TaskKind) -> Vec<LanguageTag> {
        self.templates.get(&task).map(|m| m.keys().copied().collect()).unwrap_or_default()
    }

    pub fn tasks(&self) -> Vec<TaskKind> {
        self.templates.keys().copied().collect()
    }
}

const ALL_TASKS: &[TaskKind] = &[
    TaskKind::Translation,
    TaskKind::Classification,
    TaskKind::TokenClassification,
    TaskKind::Summarization,
    TaskKind::OpenGeneration,
    TaskKind::Comprehension,
    TaskKind::Intrinsic,
];

/// Picks the template for one subset. Single mode uses the configured
/// language; Multi uses `test_tag` (the source tag for translation). Either
/// falls back to English, returning `true` as the fallback flag.
pub fn select_template<'a>(
    library: &'a PromptLibrary,
    strategy: &PromptStrategy,
    task: TaskKind,
    test_tag: LanguageTag,
) -> Result<(&'a PromptTemplate, bool), PromptError> {
    strategy.validate()?;
    let english = LanguageTag::parse(ENGLISH).expect("valid tag");
    let fallback = library.get(task, english).ok_or(PromptError::NoEnglishBaseline(task))?;
    let wanted = match strategy.mode {
        PromptMode::Single => strategy.single_language.expect("validated"),
        PromptMode::Multi => test_tag,
    };
    Ok(match library.get(task, wanted) {
        Some(t) => (t, false),
        None => (fallback, true),
    })
}

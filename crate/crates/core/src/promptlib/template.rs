use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::PromptError;
use crate::langid::LanguageTag;
use crate::registry::TaskKind;

pub const ENGLISH: &str = "eng_Latn";
pub const MACHINE_TRANSLATED: &str = "machine-translated";

fn placeholder_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\{([A-Za-z_][A-Za-z0-9_]*)\}").unwrap())
}

/// Placeholder names in order of occurrence, repeats included.
pub fn parse_placeholders(text: &str) -> Vec<String> {
    placeholder_re().captures_iter(text).map(|c| c[1].to_string()).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub task_kind: TaskKind,
    pub tag: LanguageTag,
    pub instruction: String,
    pub fewshot_item: Option<String>,
    pub provenance: Option<String>,
}

impl PromptTemplate {
    pub fn new(
        task_kind: TaskKind,
        tag: LanguageTag,
        instruction: impl Into<String>,
        fewshot_item: Option<String>,
    ) -> Result<Self, PromptError> {
        let t = Self { task_kind, tag, instruction: instruction.into(), fewshot_item, provenance: None };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<(), PromptError> {
        if self.task_kind == TaskKind::Translation
            && !parse_placeholders(&self.instruction).iter().any(|p| p == "src_text")
        {
            return Err(PromptError::MissingSrcText(self.tag));
        }
        Ok(())
    }

    /// Distinct placeholder names across instruction and few-shot item.
    pub fn placeholders(&self) -> BTreeSet<String> {
        self.placeholder_multiset().into_keys().collect()
    }

    pub fn placeholder_multiset(&self) -> BTreeMap<String, usize> {
        let mut m = BTreeMap::new();
        let texts = std::iter::once(self.instruction.as_str()).chain(self.fewshot_item.as_deref());
        for name in texts.flat_map(parse_placeholders) {
            *m.entry(name).or_insert(0) += 1;
        }
        m
    }

    pub fn is_machine_translated(&self) -> bool {
        self.provenance.as_deref() == Some(MACHINE_TRANSLATED)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptMode {
    Single,
    Multi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptStrategy {
    pub mode: PromptMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub single_language: Option<LanguageTag>,
}

impl PromptStrategy {
    pub fn multi() -> Self {
        Self { mode: PromptMode::Multi, single_language: None }
    }

    pub fn single(tag: LanguageTag) -> Self {
        Self { mode: PromptMode::Single, single_language: Some(tag) }
    }

    pub fn validate(&self) -> Result<(), PromptError> {
        match (self.mode, self.single_language) {
            (PromptMode::Single, None) => {
                Err(PromptError::InvalidStrategy("single mode needs a prompt language".into()))
            }
            (PromptMode::Multi, Some(_)) => {
                Err(PromptError::InvalidStrategy("multi mode takes no prompt language".into()))
            }
            _ => Ok(()),
        }
    }
}

impl Default for PromptStrategy {
    fn default() -> Self {
        Self::multi()
    }
}

fn fill(text: &str, bindings: &BTreeMap<String, String>) -> Result<String, PromptError> {
    let names: BTreeSet<String> = parse_placeholders(text).into_iter().collect();
    if let Some(missing) = names.iter().find(|n| !bindings.contains_key(*n)) {
        return Err(PromptError::MissingBinding(missing.clone()));
    }
    if let Some(extra) = bindings.keys().find(|k| !names.contains(*k)) {
        return Err(PromptError::UnknownPlaceholder(extra.clone()));
    }
    Ok(placeholder_re().replace_all(text, |c: &regex::Captures| bindings[&c[1]].clone()).into_owned())
}

/// Renders few-shot blocks (one per entry of `fewshot`) followed by the
/// instruction, joined with newlines. Bindings must match the placeholders
/// exactly: absent names are `MissingBinding`, extra names `UnknownPlaceholder`.
/// Bound values are inserted verbatim and never re-scanned.
pub fn render_prompt(
    template: &PromptTemplate,
    bindings: &BTreeMap<String, String>,
    fewshot: &[BTreeMap<String, String>],
) -> Result<String, PromptError> {
    let mut parts = Vec::with_capacity(fewshot.len() + 1);
    if !fewshot.is_empty() {
        let item = template.fewshot_item.as_deref().ok_or(PromptError::NoFewshotItem(template.tag))?;
        for b in fewshot {
            parts.push(fill(item, b)?);
        }
    }
    parts.push(fill(&template.instruction, bindings)?);
    Ok(parts.join("\n"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eng() -> LanguageTag {
        LanguageTag::parse(ENGLISH).unwrap()
    }

    fn b(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn placeholder_parsing() {
        assert_eq!(parse_placeholders("a {x} {y_1} {x} {} {1a} {{z}}"), vec!["x", "y_1", "x", "z"]);
    }

    #[test]
    fn translation_needs_src_text() {
        let e = PromptTemplate::new(TaskKind::Translation, eng(), "Translate", None);
        assert!(matches!(e, Err(PromptError::MissingSrcText(_))));
    }

    #[test]
    fn rendering() {
        let t = PromptTemplate::new(
            TaskKind::Translation,
            eng(),
            "Translate {src_text}",
            Some("{src_text} => {tgt_text}".into()),
        )
        .unwrap();
        assert_eq!(render_prompt(&t, &b(&[("src_text", "hi")]), &[]).unwrap(), "Translate hi");
        assert_eq!(
            render_prompt(&t, &b(&[]), &[]),
            Err(PromptError::MissingBinding("src_text".into()))
        );
        assert_eq!(
            render_prompt(&t, &b(&[("src_text", "a"), ("other", "b")]), &[]),
            Err(PromptError::UnknownPlaceholder("other".into()))
        );
        let shots = vec![b(&[("src_text", "x"), ("tgt_text", "y")]); 2];
        assert_eq!(render_prompt(&t, &b(&[("src_text", "{tgt_text}")]), &shots).unwrap(), "x => y\nx => y\nTranslate {tgt_text}");
    }

    #[test]
    fn strategy_validation() {
        assert!(PromptStrategy::single(eng()).validate().is_ok());
        assert!(PromptStrategy { mode: PromptMode::Single, single_language: None }.validate().is_err());
    }
}

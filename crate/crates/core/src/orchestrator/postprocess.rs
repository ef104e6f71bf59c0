use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::registry::TaskKind;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Postprocessed {
    Text(String),
    Label(String),
    /// No answer could be extracted; scored as wrong.
    Unparsed,
}

impl Postprocessed {
    pub fn as_text(&self) -> Option<&str> {
        match self {
            Postprocessed::Text(s) | Postprocessed::Label(s) => Some(s),
            Postprocessed::Unparsed => None,
        }
    }
}

fn blank_line() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\n[ \t\r]*\n").unwrap())
}

fn option_letter() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)\b([a-d])\b").unwrap())
}

/// Cuts at the first stop marker, trims, and keeps only what precedes the
/// first blank line.
pub fn clean_generation(raw: &str, stop: &[String]) -> String {
    let mut text = raw;
    if let Some(cut) = stop.iter().filter(|s| !s.is_empty()).filter_map(|s| text.find(s.as_str())).min() {
        text = &text[..cut];
    }
    let text = text.trim();
    let text = match blank_line().find(text) {
        Some(m) => &text[..m.start()],
        None => text,
    };
    text.trim().to_string()
}

/// First standalone option letter A-D, case-insensitive, uppercased.
pub fn extract_option_letter(text: &str) -> Option<String> {
    option_letter().captures(text).map(|c| c[1].to_ascii_uppercase())
}

pub fn postprocess(raw: &str, task: TaskKind, stop: &[String]) -> Postprocessed {
    match task {
        TaskKind::Comprehension => match extract_option_letter(&clean_generation(raw, stop)) {
            Some(l) => Postprocessed::Label(l),
            None => Postprocessed::Unparsed,
        },
        TaskKind::Classification => Postprocessed::Label(raw.trim().to_string()),
        _ => Postprocessed::Text(clean_generation(raw, stop)),
    }
}

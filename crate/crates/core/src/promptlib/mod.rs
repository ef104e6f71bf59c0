//! Per-language prompt templates: storage, selection, rendering, and
//! machine propagation with placeholder preservation.

mod library;
mod propagate;
mod template;

use std::path::PathBuf;

use thiserror::Error;

use crate::langid::LanguageTag;
use crate::registry::TaskKind;

pub use library::{library_file, select_template, PromptLibrary};
pub use propagate::{
    mask_placeholders, merge_propagation, mock, propagate_template, sentinel, unmask_placeholders,
    HttpTranslator, PropagateOptions, Propagation, PropagationFailure, TargetFailure, TargetTexts,
    TranslateRequest, TranslateResponse, Translator,
};
pub use template::{
    parse_placeholders, render_prompt, PromptMode, PromptStrategy, PromptTemplate, ENGLISH,
    MACHINE_TRANSLATED,
};

#[derive(Debug, Error, PartialEq)]
pub enum PromptError {
    #[error("no eng_Latn template for task {0}")]
    NoEnglishBaseline(TaskKind),
    #[error("no binding for placeholder {{{0}}}")]
    MissingBinding(String),
    #[error("binding {0:?} matches no placeholder")]
    UnknownPlaceholder(String),
    #[error("translation template for {0} lacks {{src_text}}")]
    MissingSrcText(LanguageTag),
    #[error("template for {0} has no few-shot item")]
    NoFewshotItem(LanguageTag),
    #[error("invalid prompt strategy: {0}")]
    InvalidStrategy(String),
    #[error("translator unavailable: {0}")]
    TranslatorUnavailable(String),
    #[error("no propagation targets")]
    NoTargets,
    #[error("{}: {reason}", path.display())]
    Library { path: PathBuf, reason: String },
}

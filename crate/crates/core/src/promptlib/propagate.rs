use std::collections::{BTreeMap, BTreeSet};
use std::future::Future;
use std::sync::OnceLock;
use std::time::Duration;

use futures::stream::{self, StreamExt, TryStreamExt};
use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{parse_placeholders, PromptError, PromptTemplate, MACHINE_TRANSLATED};
use crate::langid::LanguageTag;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslateRequest {
    pub texts: Vec<String>,
    pub to: Vec<String>,
    pub from: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetTexts {
    pub to: String,
    pub texts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslateResponse {
    pub translations: Vec<TargetTexts>,
}

/// A machine translation backend. One call translates every text into every
/// requested target; targets the backend cannot handle are left out of the
/// response.
pub trait Translator: Sync {
    fn translate(
        &self,
        request: &TranslateRequest,
    ) -> impl Future<Output = Result<TranslateResponse, PromptError>> + Send;
}

/// Talks to `POST <base>/translate`.
#[derive(Debug, Clone)]
pub struct HttpTranslator {
    base_url: String,
    client: reqwest::Client,
}

impl HttpTranslator {
    pub fn new(base_url: &str, timeout: Duration) -> Result<Self, PromptError> {
        let client = reqwest::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| PromptError::TranslatorUnavailable(e.to_string()))?;
        Ok(Self { base_url: base_url.trim_end_matches('/').to_string(), client })
    }
}

impl Translator for HttpTranslator {
    async fn translate(&self, request: &TranslateRequest) -> Result<TranslateResponse, PromptError> {
        let unavailable = |e: reqwest::Error| PromptError::TranslatorUnavailable(e.to_string());
        let resp = self
            .client
            .post(format!("{}/translate", self.base_url))
            .json(request)
            .send()
            .await
            .map_err(unavailable)?;
        if !resp.status().is_success() {
            return Err(PromptError::TranslatorUnavailable(format!("status {}", resp.status())));
        }
        resp.json().await.map_err(unavailable)
    }
}

/// Per-target reasons a propagated template was rejected.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TargetFailure {
    /// The restored text does not carry the source's placeholder multiset.
    PlaceholderLost { missing: Vec<String>, unexpected: Vec<String> },
    TargetUnsupported,
    MalformedTranslation { reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropagationFailure {
    pub target: LanguageTag,
    #[serde(flatten)]
    pub failure: TargetFailure,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Propagation {
    /// Accepted templates, in target-list order.
    pub templates: Vec<(LanguageTag, PromptTemplate)>,
    pub failures: Vec<PropagationFailure>,
}

#[derive(Debug, Clone, Copy)]
pub struct PropagateOptions {
    pub targets_per_request: usize,
    pub concurrency: usize,
}

impl Default for PropagateOptions {
    fn default() -> Self {
        Self { targets_per_request: 8, concurrency: 4 }
    }
}

pub fn sentinel(k: usize) -> String {
    format!("\u{27E6}P{k}\u{27E7}")
}

fn sentinel_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    // translators sometimes pad bracketed tokens with spaces
    RE.get_or_init(|| Regex::new(r"\x{27E6}\s*P\s*(\d+)\s*\x{27E7}").unwrap())
}

/// Replaces every placeholder occurrence with a numbered sentinel, numbering
/// across all texts. Returns the masked texts and the name for each ordinal.
pub fn mask_placeholders(texts: &[&str]) -> (Vec<String>, Vec<String>) {
    static RE: OnceLock<Regex> = OnceLock::new();
    let re = RE.get_or_init(|| Regex::new(r"\{([A-Za-z_][A-Za-z0-9_]*)\}").unwrap());
    let mut names = Vec::new();
    let masked = texts
        .iter()
        .map(|t| {
            re.replace_all(t, |c: &regex::Captures| {
                names.push(c[1].to_string());
                sentinel(names.len() - 1)
            })
            .into_owned()
        })
        .collect();
    (masked, names)
}

/// Restores sentinels by ordinal. Unknown ordinals and stray bracket
/// characters are left in place so the multiset check rejects them.
pub fn unmask_placeholders(text: &str, names: &[String]) -> String {
    sentinel_re()
        .replace_all(text, |c: &regex::Captures| {
            match c[1].parse::<usize>().ok().and_then(|k| names.get(k)) {
                Some(name) => format!("{{{name}}}"),
                None => c[0].to_string(),
            }
        })
        .into_owned()
}

fn multiset<'a>(texts: impl IntoIterator<Item = &'a str>) -> BTreeMap<String, usize> {
    let mut m = BTreeMap::new();
    for name in texts.into_iter().flat_map(parse_placeholders) {
        *m.entry(name).or_insert(0) += 1;
    }
    m
}

fn diff(want: &BTreeMap<String, usize>, got: &BTreeMap<String, usize>) -> Vec<String> {
    let mut out = Vec::new();
    for (name, n) in want {
        for _ in *got.get(name).unwrap_or(&0)..*n {
            out.push(name.clone());
        }
    }
    out
}

fn rebuild(
    source: &PromptTemplate,
    target: LanguageTag,
    texts: &[String],
    names: &[String],
) -> Result<PromptTemplate, TargetFailure> {
    let expected = if source.fewshot_item.is_some() { 2 } else { 1 };
    if texts.len() != expected {
        return Err(TargetFailure::MalformedTranslation {
            reason: format!("expected {expected} texts, got {}", texts.len()),
        });
    }
    let restored: Vec<String> = texts.iter().map(|t| unmask_placeholders(t, names)).collect();
    let want = source.placeholder_multiset();
    let got = multiset(restored.iter().map(String::as_str));
    let stray = restored.iter().any(|t| t.contains('\u{27E6}') || t.contains('\u{27E7}'));
    if want != got || stray {
        let mut unexpected = diff(&got, &want);
        if stray {
            unexpected.push("\u{27E6}\u{2026}\u{27E7}".into());
        }
        return Err(TargetFailure::PlaceholderLost { missing: diff(&want, &got), unexpected });
    }
    let mut restored = restored.into_iter();
    let instruction = restored.next().expect("length checked");
    let template = PromptTemplate {
        task_kind: source.task_kind,
        tag: target,
        instruction,
        fewshot_item: restored.next(),
        provenance: Some(MACHINE_TRANSLATED.to_string()),
    };
    template
        .validate()
        .map_err(|e| TargetFailure::MalformedTranslation { reason: e.to_string() })?;
    Ok(template)
}

/// Machine-translates a template into each target while keeping its
/// placeholders intact. Placeholders travel as opaque `⟦Pk⟧` sentinels and
/// are restored by ordinal, so reordering by the translator is harmless.
/// A target is accepted only if its placeholder multiset equals the source's;
/// failures are collected per target. Any transport failure aborts the whole
/// batch with `TranslatorUnavailable`.
pub async fn propagate_template<T: Translator>(
    template: &PromptTemplate,
    targets: &[LanguageTag],
    translator: &T,
    options: PropagateOptions,
) -> Result<Propagation, PromptError> {
    let targets: Vec<LanguageTag> = {
        let mut seen = BTreeSet::new();
        targets.iter().copied().filter(|t| *t != template.tag && seen.insert(*t)).collect()
    };
    if targets.is_empty() {
        return Err(PromptError::NoTargets);
    }
    let sources: Vec<&str> =
        std::iter::once(template.instruction.as_str()).chain(template.fewshot_item.as_deref()).collect();
    let (masked, names) = mask_placeholders(&sources);

    let requests: Vec<TranslateRequest> = targets
        .chunks(options.targets_per_request.max(1))
        .map(|chunk| TranslateRequest {
            texts: masked.clone(),
            to: chunk.iter().map(|t| t.to_string()).collect(),
            from: template.tag.to_string(),
        })
        .collect();
    let responses: Vec<TranslateResponse> = stream::iter(requests.iter().map(|r| translator.translate(r)))
        .buffered(options.concurrency.max(1))
        .try_collect()
        .await?;

    let mut by_target: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for r in responses {
        for t in r.translations {
            by_target.entry(t.to).or_insert(t.texts);
        }
    }

    let mut out = Propagation::default();
    for target in targets {
        let result = match by_target.get(&target.to_string()) {
            None => Err(TargetFailure::TargetUnsupported),
            Some(texts) => rebuild(template, target, texts, &names),
        };
        match result {
            Ok(t) => out.templates.push((target, t)),
            Err(failure) => out.failures.push(PropagationFailure { target, failure }),
        }
    }
    Ok(out)
}

/// Adds accepted templates to a library. Existing entries are kept unless
/// `overwrite` is set. Returns the tags that were written.
pub fn merge_propagation(
    library: &mut super::PromptLibrary,
    propagation: &Propagation,
    overwrite: bool,
) -> Vec<LanguageTag> {
    let mut written = Vec::new();
    for (tag, t) in &propagation.templates {
        if overwrite || library.get(t.task_kind, *tag).is_none() {
            library.insert(t.clone());
            written.push(*tag);
        }
    }
    written
}

/// In-process translators for tests and dry runs.
pub mod mock {
    use super::*;

    /// Returns every text unchanged for every target.
    #[derive(Debug, Default, Clone)]
    pub struct IdentityTranslator;

    impl Translator for IdentityTranslator {
        async fn translate(&self, request: &TranslateRequest) -> Result<TranslateResponse, PromptError> {
            Ok(TranslateResponse {
                translations: request
                    .to
                    .iter()
                    .map(|to| TargetTexts { to: to.clone(), texts: request.texts.clone() })
                    .collect(),
            })
        }
    }

    /// Identity translation, except that the first sentinel is deleted for
    /// the targets in `corrupt`.
    #[derive(Debug, Default, Clone)]
    pub struct SentinelDroppingTranslator {
        pub corrupt: BTreeSet<String>,
    }

    impl Translator for SentinelDroppingTranslator {
        async fn translate(&self, request: &TranslateRequest) -> Result<TranslateResponse, PromptError> {
            let mut resp = IdentityTranslator.translate(request).await?;
            for t in &mut resp.translations {
                if self.corrupt.contains(&t.to) {
                    for text in &mut t.texts {
                        if let Some(m) = sentinel_re().find(text) {
                            text.replace_range(m.range(), "");
                            break;
                        }
                    }
                }
            }
            Ok(resp)
        }
    }

    /// Applies a text transform per target; targets in `unsupported` are
    /// left out of the response.
    pub struct FnTranslator<F> {
        pub f: F,
        pub unsupported: BTreeSet<String>,
    }

    impl<F: Fn(&str, &str) -> String + Sync> Translator for FnTranslator<F> {
        async fn translate(&self, request: &TranslateRequest) -> Result<TranslateResponse, PromptError> {
            Ok(TranslateResponse {
                translations: request
                    .to
                    .iter()
                    .filter(|to| !self.unsupported.contains(*to))
                    .map(|to| TargetTexts {
                        to: to.clone(),
                        texts: request.texts.iter().map(|t| (self.f)(t, to)).collect(),
                    })
                    .collect(),
            })
        }
    }

    /// Always fails, as an unreachable service would.
    #[derive(Debug, Default, Clone)]
    pub struct UnavailableTranslator;

    impl Translator for UnavailableTranslator {
        async fn translate(&self, _: &TranslateRequest) -> Result<TranslateResponse, PromptError> {
            Err(PromptError::TranslatorUnavailable("connection refused".into()))
        }
    }
}

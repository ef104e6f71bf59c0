//! Tokenizers applied to hypotheses and references before BLEU counting.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::sync::{Arc, OnceLock};

use regex::Regex;
use unicode_normalization::UnicodeNormalization;

use super::MetricError;

pub trait BleuTokenizer: Send + Sync + fmt::Debug {
    /// Identifier rendered as `tok:<id>` in metric signatures.
    fn id(&self) -> &str;
    /// Returns the tokenized line with single spaces between tokens.
    fn tokenize(&self, line: &str) -> String;
}

/// Whitespace split with every Unicode punctuation mark as its own token.
/// Deterministic and dependency-free; used by fixtures and tests.
#[derive(Debug, Default, Clone)]
pub struct TestWsTokenizer;

impl BleuTokenizer for TestWsTokenizer {
    fn id(&self) -> &str {
        "test-ws"
    }

    fn tokenize(&self, line: &str) -> String {
        static PUNCT: OnceLock<Regex> = OnceLock::new();
        let re = PUNCT.get_or_init(|| Regex::new(r"(\p{P})").unwrap());
        let spaced = re.replace_all(line, " $1 ");
        spaced.split_whitespace().collect::<Vec<_>>().join(" ")
    }
}

#[derive(Debug, Default, Clone)]
pub struct NoTokenizer;

impl BleuTokenizer for NoTokenizer {
    fn id(&self) -> &str {
        "none"
    }

    fn tokenize(&self, line: &str) -> String {
        line.to_string()
    }
}

/// The mteval-v13a tokenizer used as the WMT default.
#[derive(Debug, Clone)]
pub struct Tokenizer13a {
    rules: Vec<(Regex, &'static str)>,
}

impl Default for Tokenizer13a {
    fn default() -> Self {
        let rules = vec![
            (Regex::new(r"([\{-~\[-` -&\(-\+:-@/])").unwrap(), " $1 "),
            (Regex::new(r"([^0-9])([\.,])").unwrap(), "$1 $2 "),
            (Regex::new(r"([\.,])([^0-9])").unwrap(), " $1 $2"),
            (Regex::new(r"([0-9])(-)").unwrap(), "$1 $2 "),
        ];
        Self { rules }
    }
}

impl BleuTokenizer for Tokenizer13a {
    fn id(&self) -> &str {
        "13a"
    }

    fn tokenize(&self, line: &str) -> String {
        let mut s = line.replace("<skipped>", "").replace("-\n", "").replace('\n', " ");
        if s.contains('&') {
            s = s
                .replace("&quot;", "\"")
                .replace("&amp;", "&")
                .replace("&lt;", "<")
                .replace("&gt;", ">");
        }
        let mut s = format!(" {s} ");
        for (re, rep) in &self.rules {
            s = re.replace_all(&s, *rep).into_owned();
        }
        s.split_whitespace().collect::<Vec<_>>().join(" ")
    }
}

const SPACE_PIECE: char = '\u{2581}';

/// Unigram subword segmentation driven by a SentencePiece `.vocab` file
/// (`piece<TAB>log-prob` per line). Input is NFKC-normalized, whitespace is
/// mapped to `▁` with a leading dummy prefix, and the best-scoring
/// segmentation is found by Viterbi search.
#[derive(Debug, Clone)]
pub struct UnigramTokenizer {
    id: String,
    pieces: HashMap<String, f64>,
    max_piece_chars: usize,
    unk_score: f64,
}

impl UnigramTokenizer {
    pub fn from_vocab_str(id: &str, vocab: &str) -> Result<Self, MetricError> {
        let mut pieces = HashMap::new();
        let mut max_piece_chars = 1;
        let mut min_score = 0.0f64;
        for (i, line) in vocab.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let (piece, score) = line.rsplit_once('\t').ok_or_else(|| {
                MetricError::Tokenizer(format!("vocab line {}: expected piece<TAB>score", i + 1))
            })?;
            let score: f64 = score.trim().parse().map_err(|_| {
                MetricError::Tokenizer(format!("vocab line {}: bad score {score:?}", i + 1))
            })?;
            // control symbols such as <unk>, <s>, </s> never appear in text
            if piece.starts_with('<') && piece.ends_with('>') && piece.len() > 2 {
                continue;
            }
            max_piece_chars = max_piece_chars.max(piece.chars().count());
            min_score = min_score.min(score);
            pieces.insert(piece.to_string(), score);
        }
        if pieces.is_empty() {
            return Err(MetricError::Tokenizer("vocab has no pieces".into()));
        }
        Ok(Self { id: id.to_string(), pieces, max_piece_chars, unk_score: min_score - 10.0 })
    }

    pub fn from_vocab_file(id: &str, path: &Path) -> Result<Self, MetricError> {
        let text = fs::read_to_string(path)
            .map_err(|e| MetricError::Tokenizer(format!("{}: {e}", path.display())))?;
        Self::from_vocab_str(id, &text)
    }

    pub fn pieces(&self, line: &str) -> Vec<String> {
        let normalized: String = line.nfkc().collect();
        let words: Vec<&str> = normalized.split_whitespace().collect();
        if words.is_empty() {
            return Vec::new();
        }
        let text: Vec<char> = std::iter::once(SPACE_PIECE)
            .chain(words.join(" ").chars().map(|c| if c == ' ' { SPACE_PIECE } else { c }))
            .collect();

        let n = text.len();
        let mut best = vec![f64::NEG_INFINITY; n + 1];
        let mut back = vec![0usize; n + 1];
        best[0] = 0.0;
        for end in 1..=n {
            let lo = end.saturating_sub(self.max_piece_chars);
            for start in lo..end {
                if best[start] == f64::NEG_INFINITY {
                    continue;
                }
                let piece: String = text[start..end].iter().collect();
                let score = match self.pieces.get(&piece) {
                    Some(s) => *s,
                    None if end - start == 1 => self.unk_score,
                    None => continue,
                };
                let cand = best[start] + score;
                if cand > best[end] {
                    best[end] = cand;
                    back[end] = start;
                }
            }
        }
        let mut out = Vec::new();
        let mut end = n;
        while end > 0 {
            let start = back[end];
            out.push(text[start..end].iter().collect());
            end = start;
        }
        out.reverse();
        out
    }
}

impl BleuTokenizer for UnigramTokenizer {
    fn id(&self) -> &str {
        &self.id
    }

    fn tokenize(&self, line: &str) -> String {
        self.pieces(line).join(" ")
    }
}

/// Builds a tokenizer from a config spec: `test-ws`, `13a`, `none`, or
/// `spm:<id>:<path-to-vocab>` for a unigram subword model.
pub fn tokenizer_from_spec(spec: &str) -> Result<Arc<dyn BleuTokenizer>, MetricError> {
    match spec {
        "test-ws" => Ok(Arc::new(TestWsTokenizer)),
        "13a" => Ok(Arc::new(Tokenizer13a::default())),
        "none" => Ok(Arc::new(NoTokenizer)),
        other => {
            let rest = other
                .strip_prefix("spm:")
                .ok_or_else(|| MetricError::Tokenizer(format!("unknown tokenizer {other:?}")))?;
            let (id, path) = rest.split_once(':').ok_or_else(|| {
                MetricError::Tokenizer("expected spm:<id>:<vocab path>".into())
            })?;
            Ok(Arc::new(UnigramTokenizer::from_vocab_file(id, Path::new(path))?))
        }
    }
}

//! Scoring kernels. All functions are pure.

mod bleu;
mod chrf;
mod ids;
mod labels;
mod rouge;
pub mod tokenize;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bleu::{score_from_stats as bleu_from_stats, segment_stats as bleu_segment_stats};
pub use bleu::{BleuConfig, BleuScore, BleuScorer, BleuStats, Smoothing};
pub use chrf::{
    chrf, chrf_by_gender, gender_key, score_from_stats as chrf_from_stats,
    segment_stats as chrf_segment_stats, ChrfConfig,
};
pub use ids::{MetricId, ALL_METRICS};
pub use labels::{classification_scores, decode_bio, span_f1, token_accuracy, Span};
pub use rouge::{rouge, sentence_rouge, RougeConfig, RougeVariant};

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("{hypotheses} hypotheses but {references} references")]
    LengthMismatch { hypotheses: usize, references: usize },
    #[error("nothing to score")]
    EmptyCorpus,
    #[error("self-BLEU needs at least two outputs, got {0}")]
    TooFewOutputs(usize),
    #[error("sentence {sentence}: {pred} predicted tags but {gold} gold tags")]
    TagLengthMismatch { sentence: usize, pred: usize, gold: usize },
    #[error("sentence {sentence}, token {position}: malformed tag {tag:?}")]
    MalformedTag { sentence: usize, position: usize, tag: String },
    #[error("token count is zero")]
    ZeroTokens,
    #[error("invalid metric config: {0}")]
    InvalidConfig(String),
    #[error("tokenizer: {0}")]
    Tokenizer(String),
    #[error("external scores: {0}")]
    ExternalScores(String),
}

pub(crate) fn check_pairs(hypotheses: usize, references: usize) -> Result<(), MetricError> {
    if hypotheses != references {
        return Err(MetricError::LengthMismatch { hypotheses, references });
    }
    if hypotheses == 0 {
        return Err(MetricError::EmptyCorpus);
    }
    Ok(())
}

/// Settings echoed into every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct MetricConfig {
    pub metric_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bleu: Option<BleuConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chrf: Option<ChrfConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rouge: Option<RougeConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub metric_id: String,
    pub corpus_score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_sample: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subgroup_scores: Option<BTreeMap<String, f64>>,
    /// Secondary values such as `delta`, `ppl`, `brevity_penalty`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub derived: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signature: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    pub config_echo: MetricConfig,
}

impl ScoreReport {
    pub fn new(metric_id: &str, corpus_score: f64, config_echo: MetricConfig) -> Self {
        Self {
            metric_id: metric_id.to_string(),
            corpus_score,
            per_sample: None,
            subgroup_scores: None,
            derived: BTreeMap::new(),
            signature: None,
            notes: Vec::new(),
            config_echo,
        }
    }
}

/// Sums window NLLs and derives perplexity as `exp(total / tokens)`.
pub fn aggregate_nll(per_window_nlls: &[f64], token_counts: &[usize]) -> Result<ScoreReport, MetricError> {
    if per_window_nlls.len() != token_counts.len() {
        return Err(MetricError::LengthMismatch {
            hypotheses: per_window_nlls.len(),
            references: token_counts.len(),
        });
    }
    let tokens: usize = token_counts.iter().sum();
    if tokens == 0 {
        return Err(MetricError::ZeroTokens);
    }
    let total: f64 = per_window_nlls.iter().sum();
    let mut report =
        ScoreReport::new("nll", total, MetricConfig { metric_id: "nll".into(), ..Default::default() });
    report.derived.insert("ppl".into(), (total / tokens as f64).exp());
    report.derived.insert("tokens".into(), tokens as f64);
    Ok(report)
}

/// Merges externally computed per-sample scores, given as JSON lines of the
/// form `{"index": i, "score": x}`. Every index in `0..n_samples` must
/// appear exactly once.
pub fn merge_external_scores(metric_id: &str, jsonl: &str, n_samples: usize) -> Result<ScoreReport, MetricError> {
    #[derive(Deserialize)]
    struct Row {
        index: usize,
        score: f64,
    }
    if n_samples == 0 {
        return Err(MetricError::EmptyCorpus);
    }
    let mut scores: Vec<Option<f64>> = vec![None; n_samples];
    for (i, line) in jsonl.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let row: Row = serde_json::from_str(line)
            .map_err(|e| MetricError::ExternalScores(format!("line {}: {e}", i + 1)))?;
        let slot = scores
            .get_mut(row.index)
            .ok_or_else(|| MetricError::ExternalScores(format!("index {} out of range", row.index)))?;
        if slot.replace(row.score).is_some() {
            return Err(MetricError::ExternalScores(format!("index {} given twice", row.index)));
        }
    }
    let per: Vec<f64> = scores
        .iter()
        .enumerate()
        .map(|(i, s)| s.ok_or_else(|| MetricError::ExternalScores(format!("index {i} missing"))))
        .collect::<Result<_, _>>()?;
    let mean = per.iter().sum::<f64>() / per.len() as f64;
    let mut report =
        ScoreReport::new(metric_id, mean, MetricConfig { metric_id: metric_id.into(), ..Default::default() });
    report.per_sample = Some(per);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nll_aggregation() {
        let r = aggregate_nll(&[10.0], &[5]).unwrap();
        assert_eq!(r.corpus_score, 10.0);
        assert!((r.derived["ppl"] - 2f64.exp()).abs() < 1e-12);
        let r = aggregate_nll(&[3.0, 5.0], &[2, 2]).unwrap();
        assert_eq!(r.corpus_score, 8.0);
        assert!((r.derived["ppl"] - 2f64.exp()).abs() < 1e-12);
        assert_eq!(aggregate_nll(&[1.0], &[0]), Err(MetricError::ZeroTokens));
        assert!(aggregate_nll(&[1.0], &[1, 2]).is_err());
    }

    #[test]
    fn external_merge() {
        let r = merge_external_scores("comet", "{\"index\":1,\"score\":0.5}\n{\"index\":0,\"score\":0.7}\n", 2).unwrap();
        assert_eq!(r.per_sample, Some(vec![0.7, 0.5]));
        assert!((r.corpus_score - 0.6).abs() < 1e-12);
        assert!(merge_external_scores("comet", "{\"index\":0,\"score\":1}", 2).is_err());
        assert!(merge_external_scores("comet", "{\"index\":5,\"score\":1}", 2).is_err());
    }
}

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::tokenize::{tokenizer_from_spec, BleuTokenizer};
use super::{check_pairs, MetricConfig, MetricError, ScoreReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Smoothing {
    #[default]
    Exp,
    None,
}

impl Smoothing {
    fn as_str(&self) -> &'static str {
        match self {
            Smoothing::Exp => "exp",
            Smoothing::None => "none",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BleuConfig {
    pub max_ngram: usize,
    pub smoothing: Smoothing,
    pub case_sensitive: bool,
    pub effective_order: bool,
    /// Tokenizer spec understood by [`tokenizer_from_spec`].
    pub tokenizer: String,
}

impl Default for BleuConfig {
    fn default() -> Self {
        Self {
            max_ngram: 4,
            smoothing: Smoothing::Exp,
            case_sensitive: true,
            effective_order: false,
            tokenizer: "13a".to_string(),
        }
    }
}

/// Sufficient statistics of one or more segments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BleuStats {
    pub sys_len: u64,
    pub ref_len: u64,
    pub correct: Vec<u64>,
    pub total: Vec<u64>,
}

impl BleuStats {
    pub fn zero(max_ngram: usize) -> Self {
        Self { sys_len: 0, ref_len: 0, correct: vec![0; max_ngram], total: vec![0; max_ngram] }
    }

    pub fn add(&mut self, other: &BleuStats) {
        self.sys_len += other.sys_len;
        self.ref_len += other.ref_len;
        for (a, b) in self.correct.iter_mut().zip(&other.correct) {
            *a += b;
        }
        for (a, b) in self.total.iter_mut().zip(&other.total) {
            *a += b;
        }
    }
}

/// Breakdown of a BLEU score.
#[derive(Debug, Clone, PartialEq)]
pub struct BleuScore {
    pub score: f64,
    pub precisions: Vec<f64>,
    pub brevity_penalty: f64,
}

type NgramCounts<'a> = HashMap<&'a [&'a str], u64>;

fn ngram_counts<'a>(tokens: &'a [&'a str], max_ngram: usize) -> NgramCounts<'a> {
    let mut counts = HashMap::new();
    for n in 1..=max_ngram.min(tokens.len()) {
        for w in tokens.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

/// Statistics of one hypothesis against any number of references. Reference
/// n-gram counts are clipped by their maximum across references and the
/// reference length is the one closest to the hypothesis (shorter on ties).
pub fn segment_stats(hyp: &[&str], refs: &[Vec<&str>], max_ngram: usize) -> BleuStats {
    let mut max_ref: HashMap<&[&str], u64> = HashMap::new();
    let mut closest_len = 0u64;
    let mut closest_diff = u64::MAX;
    let hyp_len = hyp.len() as u64;
    for r in refs {
        let len = r.len() as u64;
        let diff = len.abs_diff(hyp_len);
        if diff < closest_diff || (diff == closest_diff && len < closest_len) {
            closest_diff = diff;
            closest_len = len;
        }
        for (g, c) in ngram_counts(r, max_ngram) {
            let e = max_ref.entry(g).or_insert(0);
            *e = (*e).max(c);
        }
    }
    let mut stats = BleuStats::zero(max_ngram);
    stats.sys_len = hyp_len;
    stats.ref_len = closest_len;
    for (g, c) in ngram_counts(hyp, max_ngram) {
        let n = g.len() - 1;
        stats.total[n] += c;
        if let Some(r) = max_ref.get(g) {
            stats.correct[n] += c.min(*r);
        }
    }
    stats
}

fn my_log(x: f64) -> f64 {
    if x == 0.0 {
        -9_999_999_999.0
    } else {
        x.ln()
    }
}

/// Final score from aggregated statistics, on the 0-100 scale.
pub fn score_from_stats(stats: &BleuStats, config: &BleuConfig) -> BleuScore {
    let max = config.max_ngram;
    let mut precisions = vec![0.0; max];
    let bp = if stats.sys_len < stats.ref_len {
        if stats.sys_len > 0 {
            (1.0 - stats.ref_len as f64 / stats.sys_len as f64).exp()
        } else {
            0.0
        }
    } else {
        1.0
    };
    if stats.correct.iter().all(|&c| c == 0) {
        return BleuScore { score: 0.0, precisions, brevity_penalty: bp };
    }
    let mut smooth = 1.0;
    let mut eff_order = max;
    for n in 1..=max {
        let (correct, total) = (stats.correct[n - 1], stats.total[n - 1]);
        if total == 0 {
            break;
        }
        if config.effective_order {
            eff_order = n;
        }
        precisions[n - 1] = if correct == 0 {
            match config.smoothing {
                Smoothing::Exp => {
                    smooth *= 2.0;
                    100.0 / (smooth * total as f64)
                }
                Smoothing::None => 0.0,
            }
        } else {
            100.0 * correct as f64 / total as f64
        };
    }
    // mean log over fractional precisions so a perfect match is exactly 100
    let log_sum: f64 = precisions[..eff_order].iter().map(|&p| my_log(p / 100.0)).sum();
    let score = 100.0 * bp * (log_sum / eff_order as f64).exp();
    BleuScore { score, precisions, brevity_penalty: bp }
}

/// Corpus BLEU with a configured tokenizer.
#[derive(Debug, Clone)]
pub struct BleuScorer {
    config: BleuConfig,
    tokenizer: Arc<dyn BleuTokenizer>,
}

impl BleuScorer {
    pub fn new(config: BleuConfig) -> Result<Self, MetricError> {
        if config.max_ngram == 0 {
            return Err(MetricError::InvalidConfig("max_ngram must be at least 1".into()));
        }
        let tokenizer = tokenizer_from_spec(&config.tokenizer)?;
        Ok(Self { config, tokenizer })
    }

    pub fn with_tokenizer(config: BleuConfig, tokenizer: Arc<dyn BleuTokenizer>) -> Self {
        Self { config, tokenizer }
    }

    pub fn config(&self) -> &BleuConfig {
        &self.config
    }

    pub fn tokenizer_id(&self) -> &str {
        self.tokenizer.id()
    }

    /// Lowercasing (if configured) then tokenization, as applied to every
    /// hypothesis and reference.
    pub fn preprocess(&self, line: &str) -> String {
        let line = line.trim_end();
        if self.config.case_sensitive {
            self.tokenizer.tokenize(line)
        } else {
            self.tokenizer.tokenize(&line.to_lowercase())
        }
    }

    pub fn signature(&self, nrefs: usize) -> String {
        format!(
            "nrefs:{}|case:{}|eff:{}|tok:{}|smooth:{}|version:{}",
            nrefs,
            if self.config.case_sensitive { "mixed" } else { "lc" },
            if self.config.effective_order { "yes" } else { "no" },
            self.tokenizer.id(),
            self.config.smoothing.as_str(),
            env!("CARGO_PKG_VERSION"),
        )
    }

    fn echo(&self, metric_id: &str) -> MetricConfig {
        MetricConfig { metric_id: metric_id.to_string(), bleu: Some(self.config.clone()), ..Default::default() }
    }

    fn stats(&self, hyp: &str, refs: &[&str]) -> BleuStats {
        let hyp = self.preprocess(hyp);
        let refs: Vec<String> = refs.iter().map(|r| self.preprocess(r)).collect();
        let hyp_toks: Vec<&str> = hyp.split_whitespace().collect();
        let ref_toks: Vec<Vec<&str>> = refs.iter().map(|r| r.split_whitespace().collect()).collect();
        segment_stats(&hyp_toks, &ref_toks, self.config.max_ngram)
    }

    /// Corpus BLEU over single-reference pairs. Per-sample values are
    /// sentence-level BLEU with effective order, the usual convention for
    /// single segments.
    pub fn corpus(&self, hypotheses: &[String], references: &[String]) -> Result<ScoreReport, MetricError> {
        check_pairs(hypotheses.len(), references.len())?;
        let mut total = BleuStats::zero(self.config.max_ngram);
        let sentence_cfg = BleuConfig { effective_order: true, ..self.config.clone() };
        let mut per_sample = Vec::with_capacity(hypotheses.len());
        for (h, r) in hypotheses.iter().zip(references) {
            let s = self.stats(h, &[r.as_str()]);
            per_sample.push(score_from_stats(&s, &sentence_cfg).score);
            total.add(&s);
        }
        let score = score_from_stats(&total, &self.config);
        let mut report = ScoreReport::new("bleu", score.score, self.echo("bleu"));
        report.per_sample = Some(per_sample);
        report.signature = Some(self.signature(1));
        report.derived.insert("brevity_penalty".into(), score.brevity_penalty);
        Ok(report)
    }

    /// Each output scored against all the others as references; the corpus
    /// value is the mean. Higher means less diverse output.
    pub fn self_bleu(&self, outputs: &[String]) -> Result<ScoreReport, MetricError> {
        if outputs.len() < 2 {
            return Err(MetricError::TooFewOutputs(outputs.len()));
        }
        let per_sample: Vec<f64> = (0..outputs.len())
            .map(|i| {
                let refs: Vec<&str> = outputs
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, o)| o.as_str())
                    .collect();
                score_from_stats(&self.stats(&outputs[i], &refs), &self.config).score
            })
            .collect();
        let mean = per_sample.iter().sum::<f64>() / per_sample.len() as f64;
        let mut report = ScoreReport::new("self_bleu", mean, self.echo("self_bleu"));
        report.signature = Some(self.signature(outputs.len() - 1));
        report.per_sample = Some(per_sample);
        Ok(report)
    }
}

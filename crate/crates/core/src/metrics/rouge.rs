use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{check_pairs, MetricConfig, MetricError, ScoreReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RougeVariant {
    #[serde(rename = "rouge1")]
    R1,
    #[serde(rename = "rouge2")]
    R2,
    #[serde(rename = "rougeL")]
    RL,
}

impl RougeVariant {
    pub fn as_str(&self) -> &'static str {
        match self {
            RougeVariant::R1 => "rouge1",
            RougeVariant::R2 => "rouge2",
            RougeVariant::RL => "rougeL",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RougeConfig {
    pub variants: Vec<RougeVariant>,
    /// Stemming is not supported; must stay false.
    pub use_stemmer: bool,
}

impl Default for RougeConfig {
    fn default() -> Self {
        Self { variants: vec![RougeVariant::R1, RougeVariant::R2, RougeVariant::RL], use_stemmer: false }
    }
}

fn tokens(text: &str) -> Vec<String> {
    text.to_lowercase().split_whitespace().map(String::from).collect()
}

fn f1(overlap: usize, hyp_total: usize, ref_total: usize) -> f64 {
    if overlap == 0 || hyp_total == 0 || ref_total == 0 {
        return 0.0;
    }
    let p = overlap as f64 / hyp_total as f64;
    let r = overlap as f64 / ref_total as f64;
    2.0 * p * r / (p + r)
}

fn ngram_counts(t: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut m = HashMap::new();
    if t.len() >= n {
        for w in t.windows(n) {
            *m.entry(w).or_insert(0) += 1;
        }
    }
    m
}

fn ngram_f1(hyp: &[String], reference: &[String], n: usize) -> f64 {
    let (h, r) = (ngram_counts(hyp, n), ngram_counts(reference, n));
    let overlap = h.iter().map(|(g, c)| (*c).min(*r.get(g).unwrap_or(&0))).sum();
    f1(overlap, h.values().sum(), r.values().sum())
}

fn lcs_len(a: &[String], b: &[String]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { cur[j].max(prev[j + 1]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Sentence-level F1 for one variant.
pub fn sentence_rouge(hyp: &str, reference: &str, variant: RougeVariant) -> f64 {
    let (h, r) = (tokens(hyp), tokens(reference));
    match variant {
        RougeVariant::R1 => ngram_f1(&h, &r, 1),
        RougeVariant::R2 => ngram_f1(&h, &r, 2),
        RougeVariant::RL => f1(lcs_len(&h, &r), h.len(), r.len()),
    }
}

/// One report per configured variant; corpus value is the mean of the
/// per-sample F1 scores.
pub fn rouge(
    hypotheses: &[String],
    references: &[String],
    config: &RougeConfig,
) -> Result<Vec<ScoreReport>, MetricError> {
    check_pairs(hypotheses.len(), references.len())?;
    if config.use_stemmer {
        return Err(MetricError::InvalidConfig("stemming is not supported".into()));
    }
    Ok(config
        .variants
        .iter()
        .map(|&v| {
            let per: Vec<f64> =
                hypotheses.iter().zip(references).map(|(h, r)| sentence_rouge(h, r, v)).collect();
            let mean = per.iter().sum::<f64>() / per.len() as f64;
            let echo = MetricConfig { metric_id: v.as_str().into(), rouge: Some(config.clone()), ..Default::default() };
            let mut report = ScoreReport::new(v.as_str(), mean, echo);
            report.per_sample = Some(per);
            report
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_cases() {
        assert_eq!(sentence_rouge("The cat sat", "the cat sat", RougeVariant::RL), 1.0);
        assert_eq!(sentence_rouge("a b", "c d", RougeVariant::R1), 0.0);
        let r1 = sentence_rouge("the cat sat", "the cat ran", RougeVariant::R1);
        assert!((r1 - 2.0 / 3.0).abs() < 1e-12);
        let r2 = sentence_rouge("the cat sat", "the cat ran", RougeVariant::R2);
        assert!((r2 - 0.5).abs() < 1e-12);
        assert_eq!(lcs_len(&tokens("a b c d"), &tokens("a c b d")), 3);
    }

    #[test]
    fn reports_per_variant() {
        let h = vec!["x y".to_string()];
        let reps = rouge(&h, &h, &RougeConfig::default()).unwrap();
        let ids: Vec<&str> = reps.iter().map(|r| r.metric_id.as_str()).collect();
        assert_eq!(ids, ["rouge1", "rouge2", "rougeL"]);
        assert!(reps.iter().all(|r| r.corpus_score == 1.0));
    }
}

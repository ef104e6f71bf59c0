use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{check_pairs, MetricConfig, MetricError, ScoreReport};
use crate::registry::Gender;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChrfConfig {
    pub char_order: usize,
    /// 0 for chrF, 2 for chrF++.
    pub word_order: usize,
    pub beta: f64,
    pub whitespace_ignored: bool,
    pub case_sensitive: bool,
}

impl Default for ChrfConfig {
    fn default() -> Self {
        Self { char_order: 6, word_order: 0, beta: 2.0, whitespace_ignored: true, case_sensitive: true }
    }
}

impl ChrfConfig {
    pub fn chrf_plus_plus() -> Self {
        Self { word_order: 2, ..Self::default() }
    }

    fn metric_id(&self) -> &'static str {
        if self.word_order > 0 {
            "chrf++"
        } else {
            "chrf"
        }
    }

    fn validate(&self) -> Result<(), MetricError> {
        if self.char_order == 0 {
            return Err(MetricError::InvalidConfig("char_order must be at least 1".into()));
        }
        if self.beta.is_nan() || self.beta <= 0.0 {
            return Err(MetricError::InvalidConfig("beta must be positive".into()));
        }
        Ok(())
    }
}

const PUNCTS: &str = "!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~";

/// Splits off one leading or trailing ASCII punctuation mark per word.
fn split_punctuation(sent: &str) -> Vec<String> {
    let mut out = Vec::new();
    for w in sent.split_whitespace() {
        let chars: Vec<char> = w.chars().collect();
        if chars.len() == 1 {
            out.push(w.to_string());
        } else if PUNCTS.contains(chars[chars.len() - 1]) {
            out.push(chars[..chars.len() - 1].iter().collect());
            out.push(chars[chars.len() - 1].to_string());
        } else if PUNCTS.contains(chars[0]) {
            out.push(chars[0].to_string());
            out.push(chars[1..].iter().collect());
        } else {
            out.push(w.to_string());
        }
    }
    out
}

fn ngram_table(orders: &mut Vec<HashMap<String, u64>>, units: &[String], max: usize, sep: &str) {
    for n in 1..=max {
        let mut counts = HashMap::new();
        if units.len() >= n {
            for w in units.windows(n) {
                *counts.entry(w.join(sep)).or_insert(0) += 1;
            }
        }
        orders.push(counts);
    }
}

fn extract(config: &ChrfConfig, text: &str) -> Vec<HashMap<String, u64>> {
    let text = if config.case_sensitive { text.to_string() } else { text.to_lowercase() };
    let chars: Vec<String> = if config.whitespace_ignored {
        text.chars().filter(|c| !c.is_whitespace()).map(String::from).collect()
    } else {
        text.chars().map(String::from).collect()
    };
    let mut orders = Vec::with_capacity(config.char_order + config.word_order);
    ngram_table(&mut orders, &chars, config.char_order, "");
    if config.word_order > 0 {
        ngram_table(&mut orders, &split_punctuation(&text), config.word_order, " ");
    }
    orders
}

/// Flattened `[hyp, ref, match]` counts per order; character orders first.
pub fn segment_stats(config: &ChrfConfig, hyp: &str, reference: &str) -> Vec<u64> {
    let h = extract(config, hyp);
    let r = extract(config, reference);
    let mut stats = Vec::with_capacity(3 * h.len());
    for (hn, rn) in h.iter().zip(&r) {
        let mut hyp_count = 0;
        let mut matched = 0;
        for (g, c) in hn {
            hyp_count += c;
            if let Some(rc) = rn.get(g) {
                matched += (*c).min(*rc);
            }
        }
        stats.push(if rn.is_empty() { 0 } else { hyp_count });
        stats.push(rn.values().sum());
        stats.push(matched);
    }
    stats
}

/// F-beta over precision and recall averaged across orders where both the
/// hypothesis and reference have n-grams, scaled to 0-100.
pub fn score_from_stats(config: &ChrfConfig, stats: &[u64]) -> f64 {
    let factor = config.beta * config.beta;
    let (mut avg_p, mut avg_r, mut eff) = (0.0, 0.0, 0usize);
    for o in stats.chunks(3) {
        let (n_hyp, n_ref, n_match) = (o[0], o[1], o[2]);
        if n_hyp > 0 && n_ref > 0 {
            avg_p += n_match as f64 / n_hyp as f64;
            avg_r += n_match as f64 / n_ref as f64;
            eff += 1;
        }
    }
    if eff == 0 {
        return 0.0;
    }
    avg_p /= eff as f64;
    avg_r /= eff as f64;
    if avg_p + avg_r == 0.0 {
        return 0.0;
    }
    100.0 * ((1.0 + factor) * avg_p * avg_r) / (factor * avg_p + avg_r)
}

fn sum_stats(acc: &mut Vec<u64>, s: &[u64]) {
    if acc.is_empty() {
        acc.resize(s.len(), 0);
    }
    for (a, b) in acc.iter_mut().zip(s) {
        *a += b;
    }
}

/// Corpus chrF (or chrF++ when `word_order > 0`) from summed segment counts.
pub fn chrf(hypotheses: &[String], references: &[String], config: &ChrfConfig) -> Result<ScoreReport, MetricError> {
    config.validate()?;
    check_pairs(hypotheses.len(), references.len())?;
    let mut total = Vec::new();
    let mut per_sample = Vec::with_capacity(hypotheses.len());
    for (h, r) in hypotheses.iter().zip(references) {
        let s = segment_stats(config, h, r);
        per_sample.push(score_from_stats(config, &s));
        sum_stats(&mut total, &s);
    }
    let id = config.metric_id();
    let echo = MetricConfig { metric_id: id.to_string(), chrf: Some(config.clone()), ..Default::default() };
    let mut report = ScoreReport::new(id, score_from_stats(config, &total), echo);
    report.per_sample = Some(per_sample);
    Ok(report)
}

pub fn gender_key(g: Gender) -> &'static str {
    match g {
        Gender::Masculine => "masculine",
        Gender::Feminine => "feminine",
    }
}

/// chrF computed separately per gender. Absent genders are omitted from the
/// subgroups and listed in the notes; `delta` (masculine - feminine) is only
/// derived when both are present.
pub fn chrf_by_gender(
    records: &[(String, String, Gender)],
    config: &ChrfConfig,
) -> Result<ScoreReport, MetricError> {
    config.validate()?;
    if records.is_empty() {
        return Err(MetricError::EmptyCorpus);
    }
    let mut groups: BTreeMap<&'static str, (Vec<String>, Vec<String>)> = BTreeMap::new();
    for (h, r, g) in records {
        let e = groups.entry(gender_key(*g)).or_default();
        e.0.push(h.clone());
        e.1.push(r.clone());
    }
    let mut subgroups = BTreeMap::new();
    let mut notes = Vec::new();
    for g in [Gender::Masculine, Gender::Feminine] {
        match groups.get(gender_key(g)) {
            Some((h, r)) => {
                subgroups.insert(gender_key(g).to_string(), chrf(h, r, config)?.corpus_score);
            }
            None => notes.push(format!("empty subgroup: {}", gender_key(g))),
        }
    }
    let hyps: Vec<String> = records.iter().map(|r| r.0.clone()).collect();
    let refs: Vec<String> = records.iter().map(|r| r.1.clone()).collect();
    let overall = chrf(&hyps, &refs, config)?;
    let echo = MetricConfig { metric_id: "chrf_gender".into(), chrf: Some(config.clone()), ..Default::default() };
    let mut report = ScoreReport::new("chrf_gender", overall.corpus_score, echo);
    if let (Some(m), Some(f)) = (subgroups.get("masculine"), subgroups.get("feminine")) {
        report.derived.insert("delta".into(), m - f);
    }
    report.per_sample = overall.per_sample;
    report.subgroup_scores = Some(subgroups);
    report.notes = notes;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: &[&str]) -> Vec<String> {
        v.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn sacrebleu_reference_values() {
        // sacrebleu 2.6.0 CHRF() and CHRF(word_order=2)
        let r = chrf(&s(&["hello world"]), &s(&["hello there"]), &ChrfConfig::default()).unwrap();
        assert!((r.corpus_score - 31.197_089_947_089_946).abs() < 1e-9, "{}", r.corpus_score);
        let r = chrf(&s(&["hello world"]), &s(&["hello there"]), &ChrfConfig::chrf_plus_plus()).unwrap();
        assert!((r.corpus_score - 29.647_817_460_317_462).abs() < 1e-9, "{}", r.corpus_score);
        assert_eq!(r.metric_id, "chrf++");
    }

    #[test]
    fn identical_and_disjoint() {
        let c = ChrfConfig::default();
        assert_eq!(chrf(&s(&["abc def"]), &s(&["abc def"]), &c).unwrap().corpus_score, 100.0);
        assert_eq!(chrf(&s(&["abc"]), &s(&["xyz"]), &c).unwrap().corpus_score, 0.0);
    }

    #[test]
    fn punctuation_split() {
        assert_eq!(split_punctuation("(hi) x, .y a"), vec!["(hi", ")", "x", ",", ".", "y", "a"]);
    }

    #[test]
    fn gender_subgroups() {
        let c = ChrfConfig::default();
        let recs = vec![
            ("le chat".to_string(), "le chat".to_string(), Gender::Masculine),
            ("la chatte".to_string(), "la chatte".to_string(), Gender::Feminine),
        ];
        let r = chrf_by_gender(&recs, &c).unwrap();
        let sub = r.subgroup_scores.as_ref().unwrap();
        assert_eq!(sub["masculine"], 100.0);
        assert_eq!(sub["feminine"], 100.0);
        assert_eq!(r.derived["delta"], 0.0);

        let r = chrf_by_gender(&recs[..1], &c).unwrap();
        assert!(!r.subgroup_scores.as_ref().unwrap().contains_key("feminine"));
        assert!(!r.derived.contains_key("delta"));
        assert_eq!(r.notes, vec!["empty subgroup: feminine"]);
    }
}

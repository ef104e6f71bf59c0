//! Label-level metrics: classification accuracy and macro-F1, BIO span F1,
//! and per-token tag accuracy.

use std::collections::{BTreeSet, HashSet};

use super::{check_pairs, MetricConfig, MetricError, ScoreReport};

fn echo(id: &str) -> MetricConfig {
    MetricConfig { metric_id: id.to_string(), ..Default::default() }
}

/// Returns `[accuracy, macro_f1]`. Macro-F1 averages per-class F1 over the
/// classes present in `gold`.
pub fn classification_scores(predictions: &[String], gold: &[String]) -> Result<[ScoreReport; 2], MetricError> {
    check_pairs(predictions.len(), gold.len())?;
    let per: Vec<f64> =
        predictions.iter().zip(gold).map(|(p, g)| if p == g { 1.0 } else { 0.0 }).collect();
    let acc = per.iter().sum::<f64>() / per.len() as f64;

    let classes: BTreeSet<&String> = gold.iter().collect();
    let mut f1_sum = 0.0;
    for c in &classes {
        let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
        for (p, g) in predictions.iter().zip(gold) {
            match (p == *c, g == *c) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                _ => {}
            }
        }
        f1_sum += 2.0 * tp as f64 / (2 * tp + fp + fn_) as f64;
    }
    let macro_f1 = f1_sum / classes.len() as f64;

    let mut accuracy = ScoreReport::new("accuracy", acc, echo("accuracy"));
    accuracy.per_sample = Some(per);
    Ok([accuracy, ScoreReport::new("macro_f1", macro_f1, echo("macro_f1"))])
}

/// A typed span over token positions `[start, end)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Span {
    pub label: String,
    pub start: usize,
    pub end: usize,
}

/// Decodes BIO tags into spans. An `I-X` that does not continue an open `X`
/// span starts a new one; the number of such repairs is returned alongside.
pub fn decode_bio(tags: &[String], sentence: usize) -> Result<(Vec<Span>, usize), MetricError> {
    let mut spans = Vec::new();
    let mut repairs = 0;
    let mut open: Option<Span> = None;
    for (i, tag) in tags.iter().enumerate() {
        let malformed = || MetricError::MalformedTag { sentence, position: i, tag: tag.clone() };
        if tag == "O" {
            spans.extend(open.take());
            continue;
        }
        let (prefix, label) = tag.split_once('-').ok_or_else(malformed)?;
        if label.is_empty() {
            return Err(malformed());
        }
        match prefix {
            "B" => {
                spans.extend(open.take());
                open = Some(Span { label: label.to_string(), start: i, end: i + 1 });
            }
            "I" => match open.as_mut() {
                Some(s) if s.label == label => s.end = i + 1,
                _ => {
                    repairs += 1;
                    spans.extend(open.take());
                    open = Some(Span { label: label.to_string(), start: i, end: i + 1 });
                }
            },
            _ => return Err(malformed()),
        }
    }
    spans.extend(open);
    Ok((spans, repairs))
}

fn check_tag_lengths(pred: &[Vec<String>], gold: &[Vec<String>]) -> Result<(), MetricError> {
    check_pairs(pred.len(), gold.len())?;
    for (i, (p, g)) in pred.iter().zip(gold).enumerate() {
        if p.len() != g.len() {
            return Err(MetricError::TagLengthMismatch { sentence: i, pred: p.len(), gold: g.len() });
        }
    }
    Ok(())
}

fn prf(tp: usize, n_pred: usize, n_gold: usize) -> f64 {
    if n_pred == 0 && n_gold == 0 {
        return 1.0;
    }
    if tp == 0 {
        return 0.0;
    }
    let p = tp as f64 / n_pred as f64;
    let r = tp as f64 / n_gold as f64;
    2.0 * p * r / (p + r)
}

/// Micro-averaged exact-match span F1. When neither side has any span the
/// score is 1.0.
pub fn span_f1(pred: &[Vec<String>], gold: &[Vec<String>]) -> Result<ScoreReport, MetricError> {
    check_tag_lengths(pred, gold)?;
    let (mut tp, mut n_pred, mut n_gold, mut repairs) = (0, 0, 0, 0);
    let mut per_sample = Vec::with_capacity(pred.len());
    for (i, (p, g)) in pred.iter().zip(gold).enumerate() {
        let (ps, pr) = decode_bio(p, i)?;
        let (gs, gr) = decode_bio(g, i)?;
        repairs += pr + gr;
        let gset: HashSet<&Span> = gs.iter().collect();
        let hits = ps.iter().filter(|s| gset.contains(s)).count();
        per_sample.push(prf(hits, ps.len(), gs.len()));
        tp += hits;
        n_pred += ps.len();
        n_gold += gs.len();
    }
    let mut report = ScoreReport::new("span_f1", prf(tp, n_pred, n_gold), echo("span_f1"));
    report.per_sample = Some(per_sample);
    if repairs > 0 {
        report.notes.push(format!("repaired {repairs} I- tags without a matching B- tag"));
    }
    Ok(report)
}

pub fn token_accuracy(pred: &[Vec<String>], gold: &[Vec<String>]) -> Result<ScoreReport, MetricError> {
    check_tag_lengths(pred, gold)?;
    let (mut hit, mut total) = (0usize, 0usize);
    let mut per_sample = Vec::with_capacity(pred.len());
    for (p, g) in pred.iter().zip(gold) {
        let h = p.iter().zip(g).filter(|(a, b)| a == b).count();
        per_sample.push(if g.is_empty() { 1.0 } else { h as f64 / g.len() as f64 });
        hit += h;
        total += g.len();
    }
    let score = if total == 0 { 1.0 } else { hit as f64 / total as f64 };
    let mut report = ScoreReport::new("token_accuracy", score, echo("token_accuracy"));
    report.per_sample = Some(per_sample);
    Ok(report)
}

//! Shared helpers for integration tests: fixture paths, a runtime, and
//! brute-force reference implementations of the metrics.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use polyeval::inference::stub::{StubServer, StubSpec};
use polyeval::orchestrator::{RunConfig, RunOutcome};

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn runtime() -> tokio::runtime::Runtime {
    tokio::runtime::Builder::new_multi_thread().worker_threads(4).enable_all().build().unwrap()
}

pub fn golden_config() -> RunConfig {
    RunConfig::from_file(&fixtures().join("golden.run.json")).unwrap()
}

/// Runs `config` against a fresh echo stub.
pub async fn run_with_stub(mut config: RunConfig) -> RunOutcome {
    let stub = StubServer::spawn(StubSpec::Echo).await.unwrap();
    config.backend_url = stub.url();
    polyeval::orchestrator::run(&config).await.unwrap()
}

pub fn strings(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

// ---------------------------------------------------------------------------
// n-gram counting by linear scans

fn count_window<T: PartialEq>(seq: &[T], gram: &[T]) -> usize {
    if gram.is_empty() || seq.len() < gram.len() {
        return 0;
    }
    (0..=seq.len() - gram.len()).filter(|&i| seq[i..i + gram.len()] == *gram).count()
}

/// Σ over distinct n-grams g of the hypothesis of min(count_h(g), count_r(g)),
/// plus the total number of hypothesis and reference n-grams.
fn clipped<T: PartialEq + Clone>(hyp: &[T], reference: &[T], n: usize) -> (usize, usize, usize) {
    let total_h = hyp.len().saturating_sub(n - 1).min(hyp.len());
    let total_r = reference.len().saturating_sub(n - 1).min(reference.len());
    let mut seen: Vec<&[T]> = Vec::new();
    let mut matched = 0;
    if hyp.len() >= n {
        for i in 0..=hyp.len() - n {
            let g = &hyp[i..i + n];
            if seen.contains(&g) {
                continue;
            }
            seen.push(g);
            matched += count_window(hyp, g).min(count_window(reference, g));
        }
    }
    (matched, total_h, total_r)
}

// ---------------------------------------------------------------------------
// BLEU

/// Corpus BLEU over whitespace tokens, 4-gram, exponential smoothing, as a
/// product of precisions.
pub fn oracle_bleu(hyps: &[String], refs: &[String]) -> f64 {
    let mut correct = [0usize; 4];
    let mut total = [0usize; 4];
    let (mut c, mut r) = (0usize, 0usize);
    for (h, rf) in hyps.iter().zip(refs) {
        let h: Vec<&str> = h.split_whitespace().collect();
        let rf: Vec<&str> = rf.split_whitespace().collect();
        c += h.len();
        r += rf.len();
        for n in 1..=4 {
            let (m, th, _) = clipped(&h, &rf, n);
            correct[n - 1] += m;
            total[n - 1] += th;
        }
    }
    if correct.iter().all(|&x| x == 0) || total.contains(&0) {
        return 0.0;
    }
    let mut product = 1.0f64;
    let mut smooth = 1.0;
    for n in 0..4 {
        let p = if correct[n] == 0 {
            smooth *= 2.0;
            1.0 / (smooth * total[n] as f64)
        } else {
            correct[n] as f64 / total[n] as f64
        };
        product *= p;
    }
    let bp = if c >= r { 1.0 } else { (1.0 - r as f64 / c as f64).exp() };
    100.0 * bp * product.powf(0.25)
}

// ---------------------------------------------------------------------------
// chrF / chrF++

const PUNCT: &[char] = &[
    '!', '"', '#', '$', '%', '&', '\'', '(', ')', '*', '+', ',', '-', '.', '/', ':', ';', '<', '=', '>', '?',
    '@', '[', '\\', ']', '^', '_', '`', '{', '|', '}', '~',
];

/// Word units: a word longer than one character sheds one trailing
/// punctuation mark, or failing that one leading mark.
fn word_units(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    for w in s.split_whitespace() {
        let cs: Vec<char> = w.chars().collect();
        let n = cs.len();
        if n > 1 && PUNCT.contains(&cs[n - 1]) {
            out.push(cs[..n - 1].iter().collect());
            out.push(cs[n - 1].to_string());
        } else if n > 1 && PUNCT.contains(&cs[0]) {
            out.push(cs[0].to_string());
            out.push(cs[1..].iter().collect());
        } else {
            out.push(w.to_string());
        }
    }
    out
}

/// Corpus chrF with beta 2 and six character orders; `word_order` 2 gives
/// chrF++.
pub fn oracle_chrf(hyps: &[String], refs: &[String], word_order: usize) -> f64 {
    let orders = 6 + word_order;
    let mut stats = vec![[0usize; 3]; orders];
    for (h, r) in hyps.iter().zip(refs) {
        let hc: Vec<char> = h.chars().filter(|c| !c.is_whitespace()).collect();
        let rc: Vec<char> = r.chars().filter(|c| !c.is_whitespace()).collect();
        for n in 1..=6 {
            let (m, th, tr) = clipped(&hc, &rc, n);
            let s = &mut stats[n - 1];
            s[0] += if tr == 0 { 0 } else { th };
            s[1] += tr;
            s[2] += m;
        }
        let (hw, rw) = (word_units(h), word_units(r));
        for n in 1..=word_order {
            let (m, th, tr) = clipped(&hw, &rw, n);
            let s = &mut stats[6 + n - 1];
            s[0] += if tr == 0 { 0 } else { th };
            s[1] += tr;
            s[2] += m;
        }
    }
    let used: Vec<&[usize; 3]> = stats.iter().filter(|s| s[0] > 0 && s[1] > 0).collect();
    if used.is_empty() {
        return 0.0;
    }
    let p: f64 = used.iter().map(|s| s[2] as f64 / s[0] as f64).sum::<f64>() / used.len() as f64;
    let r: f64 = used.iter().map(|s| s[2] as f64 / s[1] as f64).sum::<f64>() / used.len() as f64;
    if p + r == 0.0 {
        return 0.0;
    }
    100.0 * 5.0 * p * r / (4.0 * p + r)
}

// ---------------------------------------------------------------------------
// ROUGE

fn f1(overlap: usize, h: usize, r: usize) -> f64 {
    if overlap == 0 {
        return 0.0;
    }
    let (p, rc) = (overlap as f64 / h as f64, overlap as f64 / r as f64);
    2.0 * p * rc / (p + rc)
}

fn is_subsequence(needle: &[&String], hay: &[String]) -> bool {
    let mut it = hay.iter();
    needle.iter().all(|x| it.any(|y| y == *x))
}

/// Longest common subsequence by trying every subset of hypothesis positions.
/// Exponential; keep hypotheses short.
fn lcs_by_subsets(h: &[String], r: &[String]) -> usize {
    let mut best = 0;
    for mask in 0u32..(1u32 << h.len()) {
        let n = mask.count_ones() as usize;
        if n <= best {
            continue;
        }
        let pick: Vec<&String> = (0..h.len()).filter(|i| mask & (1 << i) != 0).map(|i| &h[i]).collect();
        if is_subsequence(&pick, r) {
            best = n;
        }
    }
    best
}

/// Sentence ROUGE-1, ROUGE-2 and ROUGE-L F1 over lowercased whitespace tokens.
pub fn oracle_rouge(hyp: &str, reference: &str) -> [f64; 3] {
    let h: Vec<String> = hyp.to_lowercase().split_whitespace().map(String::from).collect();
    let r: Vec<String> = reference.to_lowercase().split_whitespace().map(String::from).collect();
    let mut out = [0.0; 3];
    for n in 1..=2 {
        let (m, th, tr) = clipped(&h, &r, n);
        out[n - 1] = f1(m, th, tr);
    }
    out[2] = f1(lcs_by_subsets(&h, &r), h.len(), r.len());
    out
}

// ---------------------------------------------------------------------------
// BIO spans

/// Every `[s, e)` that forms a maximal chunk: it starts at a `B-X`, or at an
/// `I-X` not preceded by a tag of the same type, continues with `I-X`, and is
/// not followed by another `I-X`.
pub fn oracle_spans(tags: &[String]) -> BTreeSet<(String, usize, usize)> {
    let ty = |t: &str| t.split_once('-').map(|(_, l)| l.to_string());
    let mut out = BTreeSet::new();
    let n = tags.len();
    for s in 0..n {
        let Some(label) = ty(&tags[s]) else { continue };
        let inside = format!("I-{label}");
        let starts = tags[s].starts_with("B-") || s == 0 || ty(&tags[s - 1]).as_deref() != Some(label.as_str());
        if !starts {
            continue;
        }
        for e in s + 1..=n {
            if (s + 1..e).all(|k| tags[k] == inside) && (e == n || tags[e] != inside) {
                out.insert((label.clone(), s, e));
            }
        }
    }
    out
}

/// Micro span F1; 1.0 when neither side has spans.
pub fn oracle_span_f1(pred: &[Vec<String>], gold: &[Vec<String>]) -> f64 {
    let (mut tp, mut np, mut ng) = (0, 0, 0);
    for (p, g) in pred.iter().zip(gold) {
        let (ps, gs) = (oracle_spans(p), oracle_spans(g));
        tp += ps.intersection(&gs).count();
        np += ps.len();
        ng += gs.len();
    }
    if np == 0 && ng == 0 {
        return 1.0;
    }
    f1(tp, np, ng)
}

// ---------------------------------------------------------------------------
// Random instances

pub const WORDS: &[&str] = &[
    "the", "cat", "sat", "on", "mat", "a", "dog", "ran", "Cat", "mat.", "(on", "über", "x,", "naïve", "!", "猫", "b",
];

pub const TAGS: &[&str] = &["O", "O", "B-PER", "I-PER", "B-LOC", "I-LOC", "I-ORG"];

pub fn random_sentence<R: rand::Rng>(rng: &mut R, max_len: usize) -> String {
    let n = rng.gen_range(0..=max_len);
    (0..n).map(|_| WORDS[rng.gen_range(0..WORDS.len())]).collect::<Vec<_>>().join(" ")
}

/// A hypothesis built from its reference by random deletions, substitutions
/// and insertions, so that partial overlap is common.
pub fn perturb<R: rand::Rng>(rng: &mut R, reference: &str) -> String {
    let mut out = Vec::new();
    for w in reference.split_whitespace() {
        match rng.gen_range(0..10) {
            0 => {}
            1 => out.push(WORDS[rng.gen_range(0..WORDS.len())]),
            2 => {
                out.push(w);
                out.push(WORDS[rng.gen_range(0..WORDS.len())]);
            }
            _ => out.push(w),
        }
    }
    out.join(" ")
}

pub fn random_corpus<R: rand::Rng>(rng: &mut R, max_len: usize) -> (Vec<String>, Vec<String>) {
    let n = rng.gen_range(1..=5);
    let refs: Vec<String> = (0..n).map(|_| random_sentence(rng, max_len)).collect();
    let hyps = refs
        .iter()
        .map(|r| if rng.gen_bool(0.2) { random_sentence(rng, max_len) } else { perturb(rng, r) })
        .collect();
    (hyps, refs)
}

pub fn random_tags<R: rand::Rng>(rng: &mut R, len: usize) -> Vec<String> {
    (0..len).map(|_| TAGS[rng.gen_range(0..TAGS.len())].to_string()).collect()
}

// ---------------------------------------------------------------------------
// Descriptors and templates

pub const TAG_POOL: &[&str] = &["eng_Latn", "fra_Latn", "deu_Latn", "fin_Latn", "rus_Cyrl", "zho_Hans", "arb_Arab"];

/// A multi-aligned translation benchmark whose labels are already aligned to
/// the first `n` tags of [`TAG_POOL`].
pub fn translation_descriptor(n: usize) -> polyeval::registry::BenchmarkDescriptor {
    use std::path::Path;
    let labels = &TAG_POOL[..n];
    let json = serde_json::json!({
        "id": format!("mt{n}"), "task_kind": "translation", "alignment_mode": "multi_aligned",
        "data_format": "parallel_per_language_files", "root_path": ".", "labels": labels, "metrics": ["bleu"],
    });
    let mut d = polyeval::registry::BenchmarkDescriptor::from_json(&json.to_string(), Path::new("mt.json"), Path::new("."))
        .unwrap();
    for l in labels {
        d.lang_dict.insert(l.to_string(), l.parse().unwrap());
    }
    d
}

const FILLER: &[&str] = &["Answer", "the", "question", ":", "\n", "Ünïcödé", "{{", "}}", "…", "。", "  "];
const NAMES: &[&str] = &["text", "src_text", "src_lang", "tgt_lang", "labels", "choices", "x1", "_y"];

/// Text interleaving filler with placeholders, repeats allowed.
pub fn random_template_text<R: rand::Rng>(rng: &mut R) -> String {
    let mut s = String::new();
    for _ in 0..rng.gen_range(1..12) {
        if rng.gen_bool(0.35) {
            s.push('{');
            s.push_str(NAMES[rng.gen_range(0..NAMES.len())]);
            s.push('}');
        } else {
            s.push_str(FILLER[rng.gen_range(0..FILLER.len())]);
        }
        if rng.gen_bool(0.5) {
            s.push(' ');
        }
    }
    s
}

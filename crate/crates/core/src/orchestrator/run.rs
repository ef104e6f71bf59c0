use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use super::postprocess::{postprocess, Postprocessed};
use super::report::{
    BenchmarkResult, BenchmarkStatus, EvalRecord, RunOutcome, RunSummary, ThroughputCell, ThroughputRow,
    UnitResult,
};
use super::{OrchestratorError, RunConfig, ALL};
use crate::inference::{run_ordered, InferenceClient, ThroughputStats};
use crate::langid::{
    align_benchmark, match_query, AlignOptions, AlignmentRecord, IsoTable, LanguageQuery, LanguageTag,
    DEFAULT_SAMPLE_SIZE,
};
use crate::metrics::{
    chrf, chrf_by_gender, classification_scores, merge_external_scores, rouge, span_f1, token_accuracy,
    aggregate_nll, BleuConfig, BleuScorer, ChrfConfig, MetricId, RougeConfig, ScoreReport,
};
use crate::promptlib::{parse_placeholders, render_prompt, select_template, PromptLibrary, PromptTemplate};
use crate::registry::{
    corpus_lines, declared_directions, enumerate_directions, load_direction_samples, load_label_samples,
    load_registry, AlignmentMode, BenchmarkDescriptor, Direction, Sample, TaskKind,
};

/// Registry with language alignment applied, plus the per-benchmark reports.
#[derive(Debug, Clone)]
pub struct AlignedRegistry {
    pub benchmarks: Vec<BenchmarkDescriptor>,
    pub reports: BTreeMap<String, Vec<AlignmentRecord>>,
}

pub fn load_aligned_registry(dir: &Path, seed: u64) -> Result<AlignedRegistry, OrchestratorError> {
    let table = IsoTable::bundled();
    let mut benchmarks = load_registry(dir)?;
    let mut reports = BTreeMap::new();
    let opts = AlignOptions { sample_size: DEFAULT_SAMPLE_SIZE, seed };
    for desc in &mut benchmarks {
        let alignment = align_benchmark(table, desc, |label| corpus_lines(desc, label), opts);
        desc.lang_dict = alignment.lang_dict;
        reports.insert(desc.id.clone(), alignment.report);
    }
    Ok(AlignedRegistry { benchmarks, reports })
}

/// A selected benchmark and the original labels chosen by the language query.
#[derive(Debug, Clone)]
pub struct Selection<'a> {
    pub descriptor: &'a BenchmarkDescriptor,
    pub labels: Vec<String>,
}

/// Applies the benchmark and language filters of `config`.
pub fn select_benchmarks<'a>(
    config: &RunConfig,
    registry: &'a [BenchmarkDescriptor],
) -> Result<Vec<Selection<'a>>, OrchestratorError> {
    let chosen: Vec<&BenchmarkDescriptor> = if config.benchmarks.iter().any(|b| b == ALL) {
        registry.iter().collect()
    } else {
        for id in &config.benchmarks {
            if !registry.iter().any(|d| &d.id == id) {
                return Err(OrchestratorError::NoBenchmarkMatched(format!("unknown benchmark id {id:?}")));
            }
        }
        registry.iter().filter(|d| config.benchmarks.contains(&d.id)).collect()
    };

    let selections: Vec<Selection> = if config.langs.iter().any(|l| l == ALL) {
        chosen
            .into_iter()
            .map(|d| Selection {
                descriptor: d,
                labels: d.labels.iter().filter(|l| d.lang_dict.contains_key(*l)).cloned().collect(),
            })
            .filter(|s| !s.labels.is_empty())
            .collect()
    } else {
        let queries = config
            .langs
            .iter()
            .map(|l| l.parse::<LanguageQuery>())
            .collect::<Result<Vec<_>, _>>()?;
        let owned: Vec<BenchmarkDescriptor> = chosen.iter().map(|d| (*d).clone()).collect();
        let hits = match_query(IsoTable::bundled(), &queries, &owned)?;
        chosen
            .into_iter()
            .filter_map(|d| hits.get(&d.id).map(|labels| Selection { descriptor: d, labels: labels.clone() }))
            .collect()
    };
    if selections.is_empty() {
        return Err(OrchestratorError::NoBenchmarkMatched(format!(
            "no subset of {:?} matches languages {:?}",
            config.benchmarks, config.langs
        )));
    }

    let needs_pivot: Vec<String> = selections
        .iter()
        .filter(|s| {
            s.descriptor.task_kind == TaskKind::Translation
                && s.descriptor.alignment_mode == AlignmentMode::MultiAligned
        })
        .map(|s| s.descriptor.id.clone())
        .collect();
    if config.pivot.is_none() && !needs_pivot.is_empty() {
        return Err(OrchestratorError::MissingPivot(needs_pivot));
    }
    Ok(selections)
}

/// One evaluated slice of a benchmark.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Unit {
    Direction(Direction),
    Subset { label: String, tag: LanguageTag },
}

impl Unit {
    pub fn key(&self) -> String {
        match self {
            Unit::Direction(d) => d.to_string(),
            Unit::Subset { tag, .. } => tag.to_string(),
        }
    }

    /// The language a template is chosen for: the source side of a direction.
    fn prompt_tag(&self) -> LanguageTag {
        match self {
            Unit::Direction(d) => d.source,
            Unit::Subset { tag, .. } => *tag,
        }
    }

    /// The language of the generated text.
    fn output_tag(&self) -> LanguageTag {
        match self {
            Unit::Direction(d) => d.target,
            Unit::Subset { tag, .. } => *tag,
        }
    }
}

/// Units for a selection. Translation directions are kept when either side
/// belongs to the selected subsets.
pub fn plan_units(config: &RunConfig, sel: &Selection) -> Result<Vec<Unit>, OrchestratorError> {
    let desc = sel.descriptor;
    if desc.task_kind != TaskKind::Translation {
        return Ok(sel
            .labels
            .iter()
            .map(|l| Unit::Subset { label: l.clone(), tag: desc.lang_dict[l] })
            .collect());
    }
    let selected: BTreeSet<LanguageTag> = sel.labels.iter().map(|l| desc.lang_dict[l]).collect();
    let directions = match config.pivot {
        Some(p) => enumerate_directions(desc, p, config.direction_mode)?,
        None => declared_directions(desc),
    };
    Ok(directions
        .into_iter()
        .filter(|d| selected.contains(&d.source) || selected.contains(&d.target))
        .map(Unit::Direction)
        .collect())
}

/// Normalizes a comprehension answer (letter, 0-based index, or the text of
/// a choice) to an option letter.
pub fn gold_option_letter(sample: &Sample) -> Option<String> {
    let answer = sample.label.as_deref()?.trim();
    let letters = ["A", "B", "C", "D"];
    if let Some(l) = letters.iter().find(|l| l.eq_ignore_ascii_case(answer)) {
        return Some(l.to_string());
    }
    if let Ok(i) = answer.parse::<usize>() {
        return letters.get(i).map(|l| l.to_string());
    }
    sample.choices.iter().position(|c| c.trim() == answer).and_then(|i| letters.get(i)).map(|l| l.to_string())
}

fn choices_block(choices: &[String]) -> String {
    choices
        .iter()
        .zip(["A", "B", "C", "D"])
        .map(|(c, l)| format!("({l}) {c}"))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Every value a template for `task` may reference. Demonstrations also get
/// the expected answer.
fn bindings(
    desc: &BenchmarkDescriptor,
    unit: &Unit,
    sample: &Sample,
    demo: bool,
) -> BTreeMap<String, String> {
    let table = IsoTable::bundled();
    let name = |t: LanguageTag| table.reference_name(t.language).unwrap_or(t.language.as_str()).to_string();
    let mut b = BTreeMap::new();
    let mut put = |k: &str, v: String| {
        b.insert(k.to_string(), v);
    };
    put("text", sample.input_text.clone());
    let reference = sample.references.first().cloned().unwrap_or_default();
    match desc.task_kind {
        TaskKind::Translation => {
            put("src_text", sample.input_text.clone());
            if let Unit::Direction(d) = unit {
                put("src_lang", name(d.source));
                put("tgt_lang", name(d.target));
            }
            if demo {
                put("tgt_text", reference);
            }
        }
        TaskKind::Classification => {
            put("labels", desc.class_labels.join(", "));
            if demo {
                put("label", sample.label.clone().unwrap_or_default());
            }
        }
        TaskKind::Comprehension => {
            put("choices", choices_block(&sample.choices));
            if demo {
                put("answer", gold_option_letter(sample).unwrap_or_default());
            }
        }
        TaskKind::TokenClassification => {
            put("tokens", sample.tokens.clone().unwrap_or_default().join(" "));
            if demo {
                put("tags", sample.tags.clone().unwrap_or_default().join(" "));
            }
        }
        TaskKind::Summarization | TaskKind::OpenGeneration => {
            if demo {
                put("reference", reference);
            }
        }
        TaskKind::Intrinsic => {}
    }
    b
}

fn restrict(mut b: BTreeMap<String, String>, text: &str) -> BTreeMap<String, String> {
    let names: BTreeSet<String> = parse_placeholders(text).into_iter().collect();
    b.retain(|k, _| names.contains(k));
    b
}

struct Prompted {
    template_tag: LanguageTag,
    fallback: bool,
    prompts: Vec<String>,
}

fn render_all(
    library: &PromptLibrary,
    config: &RunConfig,
    desc: &BenchmarkDescriptor,
    unit: &Unit,
    demos: &[Sample],
    tests: &[Sample],
) -> Result<Prompted, String> {
    let (template, fallback): (&PromptTemplate, bool) =
        select_template(library, &config.prompt_strategy, desc.task_kind, unit.prompt_tag())
            .map_err(|e| e.to_string())?;
    let item = template.fewshot_item.clone().unwrap_or_default();
    let shots: Vec<BTreeMap<String, String>> =
        demos.iter().map(|s| restrict(bindings(desc, unit, s, true), &item)).collect();
    let prompts = tests
        .iter()
        .map(|s| render_prompt(template, &restrict(bindings(desc, unit, s, false), &template.instruction), &shots))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    Ok(Prompted { template_tag: template.tag, fallback, prompts })
}

/// Model response for one sample, before post-processing.
struct Response {
    raw: String,
    tokens: Option<usize>,
    seconds: Option<f64>,
}

/// A predicted tag that is not `O`, `B-X` or `I-X` is read as `O`.
fn sanitize_tag(t: &str) -> String {
    let ok = t == "O"
        || t.strip_prefix("B-").or_else(|| t.strip_prefix("I-")).is_some_and(|rest| !rest.is_empty());
    if ok { t.to_string() } else { "O".to_string() }
}

struct Scored {
    reports: Vec<ScoreReport>,
    notes: Vec<String>,
}

fn first_references(tests: &[Sample]) -> Result<Vec<String>, String> {
    tests
        .iter()
        .map(|s| s.references.first().cloned().ok_or_else(|| format!("sample {} has no reference", s.index)))
        .collect()
}

fn score(
    config: &RunConfig,
    desc: &BenchmarkDescriptor,
    unit: &Unit,
    tests: &[Sample],
    outputs: &[Postprocessed],
) -> Result<Scored, String> {
    let err = |e: crate::metrics::MetricError| e.to_string();
    let hyps: Vec<String> = outputs.iter().map(|o| o.as_text().unwrap_or("").to_string()).collect();
    let mut reports = Vec::new();
    let mut notes = Vec::new();
    let bleu = || BleuScorer::new(BleuConfig { tokenizer: config.bleu_tokenizer.clone(), ..Default::default() });
    for metric in &desc.metrics {
        match metric {
            MetricId::Bleu => reports.push(bleu().map_err(err)?.corpus(&hyps, &first_references(tests)?).map_err(err)?),
            MetricId::Chrf => reports.push(chrf(&hyps, &first_references(tests)?, &ChrfConfig::default()).map_err(err)?),
            MetricId::ChrfPlusPlus => {
                reports.push(chrf(&hyps, &first_references(tests)?, &ChrfConfig::chrf_plus_plus()).map_err(err)?)
            }
            MetricId::ChrfGender => {
                let refs = first_references(tests)?;
                let rows: Vec<_> = tests
                    .iter()
                    .zip(hyps.iter().zip(&refs))
                    .filter_map(|(s, (h, r))| s.gender.map(|g| (h.clone(), r.clone(), g)))
                    .collect();
                if rows.is_empty() {
                    notes.push("chrf_gender: no gender-marked samples".to_string());
                } else {
                    let mut r = chrf_by_gender(&rows, &ChrfConfig::default()).map_err(err)?;
                    r.per_sample = None;
                    reports.push(r);
                }
            }
            MetricId::Rouge => reports.extend(rouge(&hyps, &first_references(tests)?, &RougeConfig::default()).map_err(err)?),
            MetricId::SelfBleu => reports.push(bleu().map_err(err)?.self_bleu(&hyps).map_err(err)?),
            MetricId::Accuracy | MetricId::MacroF1 => {
                let gold: Vec<String> = tests
                    .iter()
                    .map(|s| match desc.task_kind {
                        TaskKind::Comprehension => gold_option_letter(s),
                        _ => s.label.clone(),
                    })
                    .map(|g| g.ok_or_else(|| "sample without a gold answer".to_string()))
                    .collect::<Result<_, _>>()?;
                let [acc, f1] = classification_scores(&hyps, &gold).map_err(err)?;
                reports.push(if *metric == MetricId::Accuracy { acc } else { f1 });
            }
            MetricId::SpanF1 | MetricId::TokenAccuracy => {
                let gold: Vec<Vec<String>> = tests.iter().map(|s| s.tags.clone().unwrap_or_default()).collect();
                let mut replaced = 0;
                let pred: Vec<Vec<String>> = hyps
                    .iter()
                    .zip(&gold)
                    .map(|(h, g)| {
                        let mut tags: Vec<String> = h.split_whitespace().take(g.len()).map(sanitize_tag).collect();
                        replaced += h.split_whitespace().take(g.len()).zip(&tags).filter(|(a, b)| a != b).count();
                        tags.resize(g.len(), "O".to_string());
                        tags
                    })
                    .collect();
                if replaced > 0 && *metric == MetricId::SpanF1 {
                    notes.push(format!("{replaced} predicted tags were not BIO tags and were read as O"));
                }
                reports.push(if *metric == MetricId::SpanF1 { span_f1(&pred, &gold) } else { token_accuracy(&pred, &gold) }.map_err(err)?);
            }
            MetricId::Comet => {
                let path = config
                    .resolve(&config.output_dir)
                    .join("external")
                    .join(&desc.id)
                    .join(format!("{}.comet.jsonl", unit.key()));
                match fs::read_to_string(&path) {
                    Ok(text) => reports.push(merge_external_scores("comet", &text, tests.len()).map_err(err)?),
                    Err(_) => notes.push(format!("comet: no external scores at external/{}/{}.comet.jsonl", desc.id, unit.key())),
                }
            }
            MetricId::Nll => return Err("nll applies to intrinsic subsets only".into()),
        }
    }
    Ok(Scored { reports, notes })
}

struct UnitOutput {
    result: UnitResult,
    records: Vec<EvalRecord>,
    stats: Option<ThroughputStats>,
}

struct Ctx<'a> {
    config: &'a RunConfig,
    library: &'a PromptLibrary,
    client: &'a InferenceClient,
}

fn empty_result(desc: &BenchmarkDescriptor, unit: &Unit) -> UnitResult {
    let (tag, source_tag, target_tag, labels) = match unit {
        Unit::Direction(d) => (
            None,
            Some(d.source),
            Some(d.target),
            [d.source, d.target].iter().filter_map(|t| desc.label_for(*t)).map(String::from).collect(),
        ),
        Unit::Subset { label, tag } => (Some(*tag), None, None, vec![label.clone()]),
    };
    UnitResult {
        unit: unit.key(),
        tag,
        source_tag,
        target_tag,
        labels,
        n_scored: 0,
        n_demonstrations: 0,
        prompt_language: None,
        prompt_fallbacks: 0,
        unparsed: 0,
        scores: Vec::new(),
        throughput: None,
        notes: Vec::new(),
        error: None,
    }
}

async fn eval_unit(ctx: &Ctx<'_>, desc: &BenchmarkDescriptor, unit: &Unit) -> Result<UnitOutput, String> {
    let config = ctx.config;
    let samples = match unit {
        Unit::Direction(d) => load_direction_samples(desc, *d, config.sample_limit),
        Unit::Subset { label, .. } => load_label_samples(desc, label, config.sample_limit),
    }
    .map_err(|e| e.to_string())?;
    let reserve = if desc.task_kind == TaskKind::Intrinsic { 0 } else { config.n_shot.min(samples.len()) };
    let (demos, tests) = samples.split_at(reserve);
    if tests.is_empty() {
        return Err(format!("no samples left to score after reserving {reserve} demonstrations"));
    }
    let mut result = empty_result(desc, unit);
    result.n_demonstrations = demos.len();
    result.n_scored = tests.len();

    if desc.task_kind == TaskKind::Intrinsic {
        return eval_intrinsic(ctx, desc, unit, tests, result).await;
    }

    let prompted = render_all(ctx.library, config, desc, unit, demos, tests)?;
    result.prompt_language = Some(prompted.template_tag);
    if prompted.fallback {
        result.prompt_fallbacks = tests.len();
    }

    let client = ctx.client;
    let responses: Vec<Response> = if desc.task_kind == TaskKind::Classification {
        let labels = &desc.class_labels;
        run_ordered(prompted.prompts.iter(), config.parallelism, |p| async move {
            client.rank_labels(p, labels).await.map(|r| Response {
                raw: labels[r.chosen_index].clone(),
                tokens: None,
                seconds: None,
            })
        })
        .await
        .into_iter()
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?
    } else {
        let (max, stop) = (config.max_new_tokens, &desc.stop);
        run_ordered(prompted.prompts.iter(), config.parallelism, |p| async move {
            client.generate(p, max, stop).await.map(|g| Response {
                raw: g.output_text,
                tokens: Some(g.generated_token_count),
                seconds: Some(g.wall_time.as_secs_f64()),
            })
        })
        .await
        .into_iter()
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?
    };

    let outputs: Vec<Postprocessed> =
        responses.iter().map(|r| postprocess(&r.raw, desc.task_kind, &desc.stop)).collect();
    result.unparsed = outputs.iter().filter(|o| **o == Postprocessed::Unparsed).count();
    let scored = score(config, desc, unit, tests, &outputs)?;

    let mut stats = None;
    if desc.task_kind.is_generative() {
        let mut s = ThroughputStats::default();
        for r in &responses {
            s.tokens += r.tokens.unwrap_or(0) as u64;
            s.seconds += r.seconds.unwrap_or(0.0);
        }
        result.throughput = ThroughputCell::from_stats(&s);
        stats = Some(s);
    }

    let mut records = Vec::with_capacity(tests.len());
    for (i, ((sample, response), output)) in tests.iter().zip(&responses).zip(&outputs).enumerate() {
        let mut per_metric_scores = BTreeMap::new();
        for r in &scored.reports {
            if let Some(v) = r.per_sample.as_ref().and_then(|p| p.get(i)) {
                per_metric_scores.insert(r.metric_id.clone(), *v);
            }
        }
        let references = match desc.task_kind {
            TaskKind::Classification => sample.label.iter().cloned().collect(),
            TaskKind::Comprehension => gold_option_letter(sample).into_iter().collect(),
            TaskKind::TokenClassification => vec![sample.tags.clone().unwrap_or_default().join(" ")],
            _ => sample.references.clone(),
        };
        records.push(EvalRecord {
            benchmark_id: desc.id.clone(),
            sample_index: sample.index,
            unit: unit.key(),
            prompt: prompted.prompts[i].clone(),
            raw_output: response.raw.clone(),
            postprocessed_output: output.as_text().map(String::from),
            unparsed: *output == Postprocessed::Unparsed,
            references,
            per_metric_scores,
            used_fallback_prompt: prompted.fallback,
            wall_time: response.seconds,
            generated_tokens: response.tokens,
        });
    }
    result.scores = scored
        .reports
        .into_iter()
        .map(|mut r| {
            r.per_sample = None;
            r
        })
        .collect();
    result.notes = scored.notes;
    Ok(UnitOutput { result, records, stats })
}

/// Intrinsic subsets are scored as one text: the lines joined by newlines.
async fn eval_intrinsic(
    ctx: &Ctx<'_>,
    desc: &BenchmarkDescriptor,
    unit: &Unit,
    tests: &[Sample],
    mut result: UnitResult,
) -> Result<UnitOutput, String> {
    let text = tests.iter().map(|s| s.input_text.as_str()).collect::<Vec<_>>().join("\n");
    let outcome = ctx
        .client
        .compute_nll(&text, ctx.config.nll_window, ctx.config.nll_stride)
        .await
        .map_err(|e| e.to_string())?;
    let nlls: Vec<f64> = outcome.segments.iter().map(|s| s.nll).collect();
    let counts: Vec<usize> = outcome.segments.iter().map(|s| s.scored_tokens).collect();
    let mut report = aggregate_nll(&nlls, &counts).map_err(|e| e.to_string())?;
    report.derived.insert("windows".into(), outcome.segments.len() as f64);
    result.scores = desc.metrics.iter().filter(|m| **m == MetricId::Nll).map(|_| report.clone()).collect();
    let records = tests
        .iter()
        .map(|s| EvalRecord {
            benchmark_id: desc.id.clone(),
            sample_index: s.index,
            unit: unit.key(),
            prompt: s.input_text.clone(),
            raw_output: String::new(),
            postprocessed_output: None,
            unparsed: false,
            references: Vec::new(),
            per_metric_scores: BTreeMap::new(),
            used_fallback_prompt: false,
            wall_time: None,
            generated_tokens: None,
        })
        .collect();
    Ok(UnitOutput { result, records, stats: None })
}

fn metadata(config: &RunConfig) -> BTreeMap<String, serde_json::Value> {
    use serde_json::json;
    BTreeMap::from([
        ("demonstrations".to_string(), json!("first n_shot samples of each subset; not scored")),
        ("intrinsic_text".to_string(), json!("subset lines joined with a newline")),
        ("nll_window".to_string(), json!(config.nll_window)),
        ("nll_stride".to_string(), json!(config.nll_stride)),
        ("throughput_language".to_string(), json!("target tag for translation, subset tag otherwise")),
    ])
}

/// Executes a run: alignment, selection, per-unit inference and scoring.
/// Report files are not written; see [`super::emit_reports`].
pub async fn run(config: &RunConfig) -> Result<RunOutcome, OrchestratorError> {
    config.validate()?;
    let registry = load_aligned_registry(&config.resolve(&config.registry_dir), config.seed)?;
    let selections = select_benchmarks(config, &registry.benchmarks)?;
    let library = PromptLibrary::load_dir(&config.resolve(&config.prompt_dir))?;
    let client = InferenceClient::new(config.client_config())
        .map_err(|e| OrchestratorError::BackendUnavailable(e.to_string()))?;
    client
        .health()
        .await
        .map_err(|e| OrchestratorError::BackendUnavailable(format!("{}: {e}", config.backend_url)))?;
    let ctx = Ctx { config, library: &library, client: &client };

    let mut benchmarks = Vec::new();
    let mut records = Vec::new();
    let mut throughput: BTreeMap<(String, LanguageTag), ThroughputStats> = BTreeMap::new();
    for sel in &selections {
        let desc = sel.descriptor;
        log::info!("benchmark {}", desc.id);
        let mut bench = BenchmarkResult {
            id: desc.id.clone(),
            task_kind: desc.task_kind.as_str().to_string(),
            status: BenchmarkStatus::Ok,
            errors: Vec::new(),
            units: Vec::new(),
        };
        let units = match plan_units(config, sel) {
            Ok(u) => u,
            Err(e) => {
                bench.status = BenchmarkStatus::Error;
                bench.errors.push(e.to_string());
                benchmarks.push(bench);
                continue;
            }
        };
        let mut failed = 0;
        for unit in &units {
            match eval_unit(&ctx, desc, unit).await {
                Ok(out) => {
                    if let Some(s) = out.stats {
                        throughput
                            .entry((desc.task_kind.as_str().to_string(), unit.output_tag()))
                            .or_default()
                            .merge(&s);
                    }
                    records.extend(out.records);
                    bench.units.push(out.result);
                }
                Err(e) => {
                    log::error!("{} {}: {e}", desc.id, unit.key());
                    failed += 1;
                    bench.errors.push(format!("{}: {e}", unit.key()));
                    let mut r = empty_result(desc, unit);
                    r.error = Some(e);
                    bench.units.push(r);
                }
            }
        }
        if failed > 0 {
            bench.status = if failed == units.len() { BenchmarkStatus::Error } else { BenchmarkStatus::Partial };
        }
        if units.is_empty() {
            bench.status = BenchmarkStatus::Error;
            bench.errors.push("no directions or subsets to evaluate".into());
        }
        benchmarks.push(bench);
    }

    let prompt_fallbacks = benchmarks.iter().flat_map(|b| &b.units).map(|u| u.prompt_fallbacks).sum();
    let throughput = throughput
        .into_iter()
        .filter_map(|((task, language), s)| ThroughputCell::from_stats(&s).map(|cell| ThroughputRow { task, language, cell }))
        .collect();
    let summary = RunSummary {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.echo(),
        metadata: metadata(config),
        benchmarks,
        prompt_fallbacks,
        throughput,
    };
    Ok(RunOutcome { summary, records })
}

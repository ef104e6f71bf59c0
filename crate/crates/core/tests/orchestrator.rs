mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;

use common::*;
use polyeval::inference::stub::{StubServer, StubSpec};
use polyeval::orchestrator::{
    details_jsonl, emit_reports, run, scores_csv, summary_json, BenchmarkStatus, OrchestratorError, RunConfig,
    RunOutcome, DETAILS_FILE, SCORES_FILE, SUMMARY_FILE,
};
use polyeval::promptlib::PromptStrategy;
use polyeval::registry::DirectionMode;

const BLESS_ENV: &str = "POLYEVAL_BLESS";

fn config_for(benchmarks: &[&str]) -> RunConfig {
    RunConfig { benchmarks: strings(benchmarks), ..golden_config() }
}

fn lines_in(path: &std::path::Path) -> usize {
    fs::read_to_string(path).unwrap().lines().filter(|l| !l.trim().is_empty()).count()
}

/// Σ over units of min(limit, file size) minus the demonstrations, read
/// straight from the data files.
fn expected_records(config: &RunConfig, outcome: &RunOutcome) -> usize {
    let reg = polyeval::orchestrator::load_aligned_registry(&fixtures().join("benchmarks"), 42).unwrap();
    let mut total = 0;
    for b in &outcome.summary.benchmarks {
        let desc = reg.benchmarks.iter().find(|d| d.id == b.id).unwrap();
        for u in &b.units {
            let size = lines_in(&desc.file_for(&u.labels[0]));
            let taken = config.sample_limit.map_or(size, |l| l.min(size));
            let demos = if b.task_kind == "intrinsic" { 0 } else { config.n_shot.min(taken) };
            total += taken - demos;
        }
    }
    total
}

#[tokio::test]
async fn golden_run_matches_frozen_reports() {
    let outcome = run_with_stub(golden_config()).await;
    let summary = summary_json(&outcome.summary);
    let details = details_jsonl(&outcome.records);
    let dir = fixtures().join("golden");
    if std::env::var_os(BLESS_ENV).is_some() {
        fs::create_dir_all(&dir).unwrap();
        fs::write(dir.join(SUMMARY_FILE), &summary).unwrap();
        fs::write(dir.join(DETAILS_FILE), &details).unwrap();
    }
    assert_eq!(summary, fs::read_to_string(dir.join(SUMMARY_FILE)).unwrap(), "set {BLESS_ENV}=1 to regenerate");
    assert_eq!(details, fs::read_to_string(dir.join(DETAILS_FILE)).unwrap());
}

#[tokio::test]
async fn parallelism_does_not_change_reports() {
    let mut outs = Vec::new();
    for p in [1, 4, 1] {
        let outcome = run_with_stub(RunConfig { parallelism: p, ..golden_config() }).await;
        outs.push((summary_json(&outcome.summary), details_jsonl(&outcome.records), scores_csv(&outcome.summary)));
    }
    assert_eq!(outs[0], outs[1]);
    assert_eq!(outs[0], outs[2]);
}

#[tokio::test]
async fn every_sample_is_scored_once() {
    for (limit, n_shot) in [(None, 0), (None, 1), (Some(2), 1), (Some(3), 2), (Some(100), 0)] {
        let config = RunConfig { sample_limit: limit, n_shot, ..golden_config() };
        let outcome = run_with_stub(config.clone()).await;
        assert_eq!(outcome.records.len(), expected_records(&config, &outcome), "{limit:?}/{n_shot}");
        let keys: BTreeSet<_> = outcome.records.iter().map(|r| (&r.benchmark_id, &r.unit, r.sample_index)).collect();
        assert_eq!(keys.len(), outcome.records.len());
        for b in &outcome.summary.benchmarks {
            let n: usize = b.units.iter().map(|u| u.n_scored).sum();
            assert_eq!(n, outcome.records.iter().filter(|r| r.benchmark_id == b.id).count());
        }
    }
}

#[tokio::test]
async fn single_english_equals_multi_on_english_subsets() {
    // English-prompted units: monolingual English subsets and directions out of English
    let base = RunConfig {
        langs: strings(&["eng"]),
        direction_mode: DirectionMode::PivotToAny,
        ..config_for(&["topic_mini", "qa_mini", "mt_mini"])
    };
    let multi = run_with_stub(base.clone()).await;
    let single = run_with_stub(RunConfig {
        prompt_strategy: PromptStrategy::single("eng_Latn".parse().unwrap()),
        ..base
    })
    .await;
    assert_eq!(multi.records, single.records);
    assert_eq!(multi.summary.benchmarks, single.summary.benchmarks);
}

#[tokio::test]
async fn both_is_the_union_of_one_way_modes() {
    let mut by_mode = Vec::new();
    for mode in [DirectionMode::AnyToPivot, DirectionMode::PivotToAny, DirectionMode::Both] {
        let outcome = run_with_stub(RunConfig { direction_mode: mode, ..config_for(&["mt_mini"]) }).await;
        let units: BTreeMap<String, String> = outcome.summary.benchmarks[0]
            .units
            .iter()
            .map(|u| (u.unit.clone(), serde_json::to_string(&u.scores).unwrap()))
            .collect();
        by_mode.push(units);
    }
    assert_eq!(by_mode[0].len(), 3);
    assert_eq!(by_mode[1].len(), 3);
    let mut union = by_mode[0].clone();
    union.extend(by_mode[1].clone());
    assert_eq!(union, by_mode[2]);
}

#[tokio::test]
async fn multi_falls_back_to_english_and_flags_it() {
    let outcome = run_with_stub(config_for(&["topic_mini"])).await;
    let units = &outcome.summary.benchmarks[0].units;
    let cmn = units.iter().find(|u| u.unit == "cmn_Hans").unwrap();
    assert_eq!(cmn.prompt_language.unwrap().to_string(), "eng_Latn");
    assert_eq!(cmn.prompt_fallbacks, cmn.n_scored);
    let eng = units.iter().find(|u| u.unit == "eng_Latn").unwrap();
    assert_eq!(eng.prompt_fallbacks, 0);
    for r in &outcome.records {
        assert_eq!(r.used_fallback_prompt, r.unit == "cmn_Hans");
    }
    assert_eq!(outcome.summary.prompt_fallbacks, cmn.prompt_fallbacks);
}

#[tokio::test]
async fn single_finnish_prompts_every_direction() {
    let config = RunConfig {
        prompt_strategy: PromptStrategy::single("fin_Latn".parse().unwrap()),
        ..config_for(&["mt_mini"])
    };
    let outcome = run_with_stub(config).await;
    assert_eq!(outcome.summary.benchmarks[0].units.len(), 6);
    for r in &outcome.records {
        let instruction = r.prompt.lines().rev().nth(1).unwrap();
        assert!(instruction.starts_with("Käännä seuraava lause"), "{}", r.prompt);
        assert!(!r.used_fallback_prompt);
    }
}

#[tokio::test]
async fn all_task_kinds_complete_against_the_stub() {
    let outcome = run_with_stub(RunConfig { benchmarks: strings(&["all"]), ..golden_config() }).await;
    let ids: Vec<&str> = outcome.summary.benchmarks.iter().map(|b| b.id.as_str()).collect();
    assert_eq!(ids, ["gen_mini", "lm_mini", "mt_mini", "ner_mini", "qa_mini", "sum_mini", "topic_mini"]);
    for b in &outcome.summary.benchmarks {
        assert_eq!(b.status, BenchmarkStatus::Ok, "{}: {:?}", b.id, b.errors);
        assert!(b.units.iter().all(|u| !u.scores.is_empty()), "{}", b.id);
    }
    assert!(outcome.summary.all_ok());
}

#[tokio::test]
async fn report_files_follow_store_details() {
    let tmp = tempfile::tempdir().unwrap();
    let outcome = run_with_stub(config_for(&["qa_mini"])).await;
    emit_reports(&outcome, tmp.path(), true).unwrap();
    assert!(tmp.path().join(DETAILS_FILE).exists());
    emit_reports(&outcome, tmp.path(), false).unwrap();
    assert!(!tmp.path().join(DETAILS_FILE).exists());
    let csv = fs::read_to_string(tmp.path().join(SCORES_FILE)).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("benchmark,unit,metric,value"));
    assert_eq!(lines.count(), outcome.summary.score_rows().len());
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join(SUMMARY_FILE)).unwrap()).unwrap();
    assert!(summary["config"].get("parallelism").is_none());
    assert!(summary["config"].get("backend_url").is_none());
}

#[tokio::test]
async fn throughput_cells_are_well_formed() {
    let outcome = run_with_stub(golden_config()).await;
    let re = regex::Regex::new(r"^\d+ / \d+\.\d{2} = \d+\.\d{2}$").unwrap();
    assert!(!outcome.summary.throughput.is_empty());
    for row in &outcome.summary.throughput {
        assert!(re.is_match(&row.cell.cell), "{}", row.cell.cell);
    }
}

#[tokio::test]
async fn selection_errors() {
    let stub = StubServer::spawn(StubSpec::Echo).await.unwrap();
    let cfg = RunConfig { backend_url: stub.url(), ..golden_config() };

    let e = run(&RunConfig { benchmarks: strings(&["nope"]), ..cfg.clone() }).await.unwrap_err();
    assert!(matches!(e, OrchestratorError::NoBenchmarkMatched(_)), "{e}");
    let e = run(&RunConfig { langs: strings(&["swh"]), ..cfg.clone() }).await.unwrap_err();
    assert!(matches!(e, OrchestratorError::NoBenchmarkMatched(_)), "{e}");
    let e = run(&RunConfig { pivot: None, ..cfg.clone() }).await.unwrap_err();
    assert!(matches!(e, OrchestratorError::MissingPivot(_)), "{e}");

    let dead = {
        let s = StubServer::spawn(StubSpec::Echo).await.unwrap();
        s.url()
    };
    tokio::time::sleep(std::time::Duration::from_millis(50)).await;
    let e = run(&RunConfig { backend_url: dead, retries: 0, ..cfg.clone() }).await.unwrap_err();
    assert!(matches!(e, OrchestratorError::BackendUnavailable(_)), "{e}");

    let outcome = run(&cfg).await.unwrap();
    let file = tempfile::NamedTempFile::new().unwrap();
    let e = emit_reports(&outcome, &file.path().join("sub"), false).unwrap_err();
    assert!(matches!(e, OrchestratorError::OutputDirNotWritable { .. }), "{e}");
}

#[tokio::test]
async fn language_queries_select_macrolanguage_members() {
    let outcome = run_with_stub(RunConfig { langs: strings(&["zho"]), ..config_for(&["mt_mini", "topic_mini"]) }).await;
    let units: Vec<(String, String)> = outcome
        .summary
        .benchmarks
        .iter()
        .flat_map(|b| b.units.iter().map(move |u| (b.id.clone(), u.unit.clone())))
        .collect();
    let want = [("mt_mini", "zho_Hans-eng_Latn"), ("mt_mini", "eng_Latn-zho_Hans"), ("topic_mini", "cmn_Hans")];
    assert_eq!(units, want.map(|(a, b)| (a.to_string(), b.to_string())));
}

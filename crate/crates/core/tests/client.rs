mod common;

use std::time::Duration;

use polyeval::inference::conformance::check_backend;
use polyeval::inference::stub::{bigram_logprob, StubFaults, StubServer, StubSpec, BOS};
use polyeval::inference::wire::WireRequest;
use polyeval::inference::{
    plan_nll_windows, run_ordered, ClientConfig, Clock, InferenceClient, InferenceError,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn client(url: &str) -> InferenceClient {
    let mut c = ClientConfig::new(url);
    c.backoff = Duration::from_millis(10);
    InferenceClient::new(c).unwrap()
}

fn words(n: usize) -> String {
    (0..n).map(|i| format!("w{}", i % 37)).collect::<Vec<_>>().join(" ")
}

/// Full-context bigram NLL of the stub's toy model.
fn bigram_nll(text: &str) -> f64 {
    let toks: Vec<&str> = text.split_whitespace().collect();
    let mut prev = BOS;
    let mut total = 0.0;
    for t in toks {
        total -= bigram_logprob(prev, t);
        prev = t;
    }
    total
}

#[tokio::test]
async fn uniform_vocab_nll_is_n_log_v() {
    let v = 50_000u64;
    let stub = StubServer::spawn(StubSpec::UniformVocab { vocab_size: v }).await.unwrap();
    let c = client(&stub.url());
    for n in [1usize, 1023, 1024, 1025, 4096] {
        let out = c.compute_nll(&words(n), 1024, 512).await.unwrap();
        assert_eq!(out.n_tokens, n);
        let want = n as f64 * (v as f64).ln();
        assert!((out.total_nll - want).abs() <= 1e-9 * want.max(1.0), "{n}: {} vs {want}", out.total_nll);
    }
}

#[tokio::test]
async fn strided_windows_agree_with_full_context_bigram() {
    let stub = StubServer::spawn(StubSpec::Echo).await.unwrap();
    let c = client(&stub.url());
    let text = words(301);
    for (w, s) in [(16, 8), (64, 1), (300, 299), (1024, 512)] {
        let out = c.compute_nll(&text, w, s).await.unwrap();
        assert!((out.total_nll - bigram_nll(&text)).abs() < 1e-9, "{w}/{s}");
        assert_eq!(out.segments.iter().map(|s| s.scored_tokens).sum::<usize>(), 301);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn window_plans_partition_the_text(n in 1usize..5000, window in 1usize..1500, stride_frac in 0.0f64..1.0) {
        let stride = 1 + ((window - 1) as f64 * stride_frac) as usize;
        let plan = plan_nll_windows(n, window, stride).unwrap();
        let mut next = 0;
        for s in &plan.segments {
            prop_assert_eq!(s.scored_from, next);
            prop_assert!(s.start <= s.scored_from && s.scored_from <= s.end && s.end - s.start <= window);
            next = s.end;
        }
        prop_assert_eq!(next, n);
    }
}

#[test]
fn invalid_strides_are_rejected() {
    assert!(matches!(plan_nll_windows(10, 4, 0), Err(InferenceError::InvalidStride { .. })));
    assert!(matches!(plan_nll_windows(10, 4, 5), Err(InferenceError::InvalidStride { .. })));
    assert!(matches!(plan_nll_windows(0, 4, 2), Err(InferenceError::EmptyText)));
}

#[tokio::test]
async fn server_errors_are_not_retried() {
    let faults = StubFaults { status: Some(500), ..Default::default() };
    let stub = StubServer::spawn_with(StubSpec::Echo, faults, "127.0.0.1:0").await.unwrap();
    let err = client(&stub.url()).generate("hi", 4, &[]).await.unwrap_err();
    assert_eq!(err, InferenceError::Server(500));
    assert_eq!(stub.requests().len(), 1);
}

#[tokio::test]
async fn malformed_bodies_are_protocol_errors() {
    let faults = StubFaults { malformed: true, ..Default::default() };
    let stub = StubServer::spawn_with(StubSpec::Echo, faults, "127.0.0.1:0").await.unwrap();
    let err = client(&stub.url()).generate("hi", 4, &[]).await.unwrap_err();
    assert!(matches!(err, InferenceError::Protocol(_)), "{err}");
}

#[tokio::test]
async fn timeouts_retry_and_count_tokens_once() {
    let faults = StubFaults { stall_first: 1, stall: Duration::from_millis(600), ..Default::default() };
    let stub = StubServer::spawn_with(StubSpec::Echo, faults, "127.0.0.1:0").await.unwrap();
    let mut cfg = ClientConfig::new(&stub.url());
    cfg.timeout = Duration::from_millis(200);
    cfg.backoff = Duration::from_millis(10);
    cfg.clock = Clock::Virtual { per_request_ms: 20, per_token_ms: 5 };
    let g = InferenceClient::new(cfg).unwrap().generate("one two three", 8, &[]).await.unwrap();
    assert_eq!(g.attempts, 2);
    assert_eq!(g.output_text, "one two three");
    assert_eq!(g.generated_token_count, 3);
    assert_eq!(g.wall_time, Duration::from_millis(35));
    assert_eq!(stub.requests().len(), 2);
}

#[tokio::test]
async fn dead_backend_fails_health() {
    let url = {
        let stub = StubServer::spawn(StubSpec::Echo).await.unwrap();
        stub.url()
    };
    tokio::time::sleep(Duration::from_millis(50)).await;
    let mut cfg = ClientConfig::new(&url);
    cfg.retries = 0;
    assert!(InferenceClient::new(cfg).unwrap().health().await.is_err());
}

#[tokio::test]
async fn fixed_logits_pick_the_highest_label() {
    let spec = StubSpec::parse(r#"fixed:{"sports": 1.5, "science": 2.5, "politics": -1}"#).unwrap();
    let stub = StubServer::spawn(spec).await.unwrap();
    let labels = common::strings(&["sports", "science", "politics"]);
    let r = client(&stub.url()).rank_labels("p", &labels).await.unwrap();
    assert_eq!(r.chosen_index, 1);
    let dup = common::strings(&["a", "a"]);
    assert!(matches!(client(&stub.url()).rank_labels("p", &dup).await, Err(InferenceError::DuplicateLabel(_))));
}

#[tokio::test]
async fn parallel_requests_keep_submission_order() {
    let stub = StubServer::spawn(StubSpec::Echo).await.unwrap();
    let c = client(&stub.url());
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let prompts: Vec<String> = (0..40).map(|i| format!("p{i} {}", rng.gen_range(0..1000))).collect();
    let out = run_ordered(prompts.clone(), 8, |p| {
        let c = c.clone();
        async move { c.generate(&p, 16, &[]).await.unwrap().output_text }
    })
    .await;
    assert_eq!(out, prompts);
    assert_eq!(stub.requests().len(), 40);
    assert!(stub.requests().iter().all(|r| matches!(r, WireRequest::Generate { .. })));
}

#[tokio::test]
async fn stub_passes_the_conformance_suite() {
    for spec in [StubSpec::Echo, StubSpec::UniformVocab { vocab_size: 7 }] {
        let stub = StubServer::spawn(spec).await.unwrap();
        for c in check_backend(&stub.url()).await {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}

#[tokio::test]
async fn conformance_flags_a_broken_backend() {
    let faults = StubFaults { status: Some(503), ..Default::default() };
    let stub = StubServer::spawn_with(StubSpec::Echo, faults, "127.0.0.1:0").await.unwrap();
    let checks = check_backend(&stub.url()).await;
    assert!(checks.iter().find(|c| c.name == "health").unwrap().passed);
    assert!(!checks.iter().find(|c| c.name == "generate").unwrap().passed);
}

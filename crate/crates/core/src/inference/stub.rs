//! In-process reference server for the wire protocol, backed by toy models.
//!
//! Tokens are whitespace-separated words. Modes:
//!
//! * `Echo`: generation returns the prompt's final line; choice scores and
//!   token log-probs come from the hashed bigram model below.
//! * `UniformVocab(V)`: every token has log-probability `-ln V`; generation
//!   echoes as above.
//! * `FixedLogits(table)`: choice logits (and sums) are looked up in the
//!   table; everything else behaves like `Echo`.
//!
//! The bigram model gives token `t` after `p` the log-probability
//! `-(1 + (fnv1a64(p + "\0" + t) mod 4096) / 1024)`, with `p = "<s>"` for the
//! first token of a scored span. A choice's first-token logit is
//! `-(fnv1a64(prompt + "\0" + first_token) mod 1000) / 100` and its sum adds
//! the bigram log-probs of its remaining tokens.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tokio::net::TcpListener;
use tokio::sync::oneshot;
use tokio::task::JoinHandle;

use super::wire::{GenerateResponse, HealthResponse, ScoreChoicesResponse, TokenNllResponse, WireRequest};

pub const BOS: &str = "<s>";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum StubSpec {
    Echo,
    UniformVocab { vocab_size: u64 },
    FixedLogits { table: BTreeMap<String, f64> },
}

impl StubSpec {
    /// Parses `echo`, `uniform:<V>` or `fixed:<json object>`.
    pub fn parse(s: &str) -> Result<Self, String> {
        if s == "echo" {
            return Ok(StubSpec::Echo);
        }
        if let Some(v) = s.strip_prefix("uniform:") {
            let vocab_size: u64 = v.parse().map_err(|_| format!("bad vocab size {v:?}"))?;
            if vocab_size < 2 {
                return Err("vocab size must be at least 2".into());
            }
            return Ok(StubSpec::UniformVocab { vocab_size });
        }
        if let Some(j) = s.strip_prefix("fixed:") {
            let table = serde_json::from_str(j).map_err(|e| format!("bad logit table: {e}"))?;
            return Ok(StubSpec::FixedLogits { table });
        }
        Err(format!("unknown stub mode {s:?}"))
    }
}

/// Failure injection for client tests.
#[derive(Debug, Clone, Default)]
pub struct StubFaults {
    /// Every POST answers with this status.
    pub status: Option<u16>,
    /// The first `stall_first` POSTs sleep for `stall` before answering.
    pub stall_first: usize,
    pub stall: Duration,
    /// POST bodies are not valid JSON.
    pub malformed: bool,
}

pub fn fnv1a64(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

pub fn tokens(text: &str) -> Vec<&str> {
    text.split_whitespace().collect()
}

pub fn bigram_logprob(prev: &str, tok: &str) -> f64 {
    -(1.0 + (fnv1a64(&format!("{prev}\0{tok}")) % 4096) as f64 / 1024.0)
}

/// Per-token log-probs of `toks`, the first conditioned on [`BOS`].
pub fn span_logprobs(spec: &StubSpec, toks: &[&str]) -> Vec<f64> {
    match spec {
        StubSpec::UniformVocab { vocab_size } => vec![-(*vocab_size as f64).ln(); toks.len()],
        _ => toks
            .iter()
            .enumerate()
            .map(|(i, t)| bigram_logprob(if i == 0 { BOS } else { toks[i - 1] }, t))
            .collect(),
    }
}

pub fn echo_output(prompt: &str, max_new_tokens: usize, stop: &[String]) -> String {
    let mut out = prompt.rsplit('\n').next().unwrap_or("").to_string();
    if let Some(cut) = stop.iter().filter(|s| !s.is_empty()).filter_map(|s| out.find(s.as_str())).min() {
        out.truncate(cut);
    }
    if tokens(&out).len() > max_new_tokens {
        out = tokens(&out)[..max_new_tokens].join(" ");
    }
    out
}

pub fn choice_scores(spec: &StubSpec, prompt: &str, choices: &[String]) -> Result<ScoreChoicesResponse, String> {
    let mut logits = Vec::with_capacity(choices.len());
    let mut sums = Vec::with_capacity(choices.len());
    for c in choices {
        let toks = tokens(c);
        match spec {
            StubSpec::FixedLogits { table } => {
                let v = *table.get(c).ok_or_else(|| format!("no logit for choice {c:?}"))?;
                logits.push(v);
                sums.push(v);
            }
            StubSpec::UniformVocab { vocab_size } => {
                let lp = -(*vocab_size as f64).ln();
                logits.push(lp);
                sums.push(lp * toks.len().max(1) as f64);
            }
            StubSpec::Echo => {
                let first = toks.first().copied().unwrap_or("");
                let logit = -((fnv1a64(&format!("{prompt}\0{first}")) % 1000) as f64) / 100.0;
                let rest: f64 = toks.windows(2).map(|w| bigram_logprob(w[0], w[1])).sum();
                logits.push(logit);
                sums.push(logit + rest);
            }
        }
    }
    Ok(ScoreChoicesResponse { choice_logits: logits, choice_logprob_sums: sums })
}

pub fn token_nll_response(
    spec: &StubSpec,
    text: &str,
    start: Option<usize>,
    end: Option<usize>,
) -> Result<TokenNllResponse, String> {
    let toks = tokens(text);
    if toks.is_empty() {
        return Err("text has no tokens".into());
    }
    let end = end.unwrap_or(toks.len()).min(toks.len());
    let start = start.unwrap_or(0);
    if start >= end {
        return Err(format!("empty span [{start}, {end})"));
    }
    let token_logprobs = span_logprobs(spec, &toks[start..end]);
    Ok(TokenNllResponse { token_count: token_logprobs.len(), token_logprobs, total_tokens: toks.len() })
}

struct StubState {
    spec: StubSpec,
    faults: StubFaults,
    posts: AtomicUsize,
    log: Mutex<Vec<WireRequest>>,
}

fn unprocessable(msg: String) -> Response {
    (StatusCode::UNPROCESSABLE_ENTITY, msg).into_response()
}

async fn handle(state: Arc<StubState>, req: WireRequest, endpoint: &'static str) -> Response {
    let n = state.posts.fetch_add(1, Ordering::SeqCst);
    state.log.lock().expect("log lock").push(req.clone());
    if n < state.faults.stall_first {
        tokio::time::sleep(state.faults.stall).await;
    }
    if let Some(code) = state.faults.status {
        return StatusCode::from_u16(code).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR).into_response();
    }
    if state.faults.malformed {
        return (StatusCode::OK, "{\"output_text\": ").into_response();
    }
    if req.endpoint() != endpoint {
        return unprocessable(format!("request kind does not belong on {endpoint}"));
    }
    let spec = &state.spec;
    match req {
        WireRequest::Generate { prompt, max_new_tokens, stop } => {
            let output_text = echo_output(&prompt, max_new_tokens, &stop);
            let generated_token_count = tokens(&output_text).len();
            Json(GenerateResponse { output_text, generated_token_count }).into_response()
        }
        WireRequest::ScoreChoices { prompt, choices } => match choice_scores(spec, &prompt, &choices) {
            Ok(r) => Json(r).into_response(),
            Err(e) => unprocessable(e),
        },
        WireRequest::TokenNll { text, start, end } => match token_nll_response(spec, &text, start, end) {
            Ok(r) => Json(r).into_response(),
            Err(e) => unprocessable(e),
        },
    }
}

fn router(state: Arc<StubState>) -> Router {
    Router::new()
        .route("/v1/health", get(|| async { Json(HealthResponse { status: "ok".into() }) }))
        .route(
            "/v1/generate",
            post(|State(s): State<Arc<StubState>>, Json(r): Json<WireRequest>| handle(s, r, "/v1/generate")),
        )
        .route(
            "/v1/score_choices",
            post(|State(s): State<Arc<StubState>>, Json(r): Json<WireRequest>| handle(s, r, "/v1/score_choices")),
        )
        .route(
            "/v1/token_nll",
            post(|State(s): State<Arc<StubState>>, Json(r): Json<WireRequest>| handle(s, r, "/v1/token_nll")),
        )
        .with_state(state)
}

/// A running stub bound to a local port; shuts down when dropped.
pub struct StubServer {
    addr: SocketAddr,
    state: Arc<StubState>,
    shutdown: Option<oneshot::Sender<()>>,
    task: Option<JoinHandle<()>>,
}

impl StubServer {
    pub async fn spawn(spec: StubSpec) -> std::io::Result<Self> {
        Self::spawn_with(spec, StubFaults::default(), "127.0.0.1:0").await
    }

    pub async fn spawn_with(spec: StubSpec, faults: StubFaults, bind: &str) -> std::io::Result<Self> {
        let listener = TcpListener::bind(bind).await?;
        let addr = listener.local_addr()?;
        let state = Arc::new(StubState { spec, faults, posts: AtomicUsize::new(0), log: Mutex::new(Vec::new()) });
        let (tx, rx) = oneshot::channel::<()>();
        let app = router(state.clone());
        let task = tokio::spawn(async move {
            let _ = axum::serve(listener, app)
                .with_graceful_shutdown(async {
                    let _ = rx.await;
                })
                .await;
        });
        Ok(Self { addr, state, shutdown: Some(tx), task: Some(task) })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Requests received so far, in arrival order.
    pub fn requests(&self) -> Vec<WireRequest> {
        self.state.log.lock().expect("log lock").clone()
    }

    /// Serves until the task is cancelled or the process exits.
    pub async fn wait(mut self) {
        if let Some(task) = self.task.take() {
            let _ = task.await;
        }
    }
}

impl Drop for StubServer {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
    }
}

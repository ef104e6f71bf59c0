use std::future::Future;
use std::time::{Duration, Instant};

use futures::stream::{self, StreamExt};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::nll::{plan_nll_windows, NllWindowPlan, Segment};
use super::wire::{GenerateResponse, HealthResponse, ScoreChoicesResponse, TokenNllResponse, WireRequest};
use super::InferenceError;

pub const BACKEND_URL_ENV: &str = "POLYEVAL_BACKEND_URL";

/// Source of the wall times reported for generations. `Virtual` charges a
/// fixed cost per request plus per generated token, which makes reports
/// reproducible byte for byte.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Clock {
    Wall,
    Virtual { per_request_ms: u64, per_token_ms: u64 },
}

impl Clock {
    pub const DEFAULT_VIRTUAL: Clock = Clock::Virtual { per_request_ms: 20, per_token_ms: 5 };

    fn charge(&self, measured: Duration, tokens: usize) -> Duration {
        match *self {
            Clock::Wall => measured,
            Clock::Virtual { per_request_ms, per_token_ms } => {
                Duration::from_millis(per_request_ms + per_token_ms * tokens as u64)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct ClientConfig {
    pub base_url: String,
    pub timeout: Duration,
    pub retries: u32,
    pub backoff: Duration,
    pub clock: Clock,
}

impl ClientConfig {
    pub fn new(base_url: &str) -> Self {
        Self {
            base_url: base_url.trim_end_matches('/').to_string(),
            timeout: Duration::from_secs(120),
            retries: 2,
            backoff: Duration::from_millis(500),
            clock: Clock::Wall,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generation {
    pub output_text: String,
    pub generated_token_count: usize,
    /// Time of the successful attempt only.
    pub wall_time: Duration,
    pub attempts: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    None,
    LogprobSum,
    LowestIndex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    pub chosen_index: usize,
    pub choice_logits: Vec<f64>,
    pub choice_logprob_sums: Vec<f64>,
    pub tie_break: TieBreak,
}

/// Highest first-token logit wins. Labels sharing a first token receive the
/// same logit, so exact ties are settled by the full-sequence log-prob sum,
/// then by the lowest index.
pub fn choose_label(scores: &ScoreChoicesResponse) -> (usize, TieBreak) {
    let logits = &scores.choice_logits;
    let best = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tied: Vec<usize> = (0..logits.len()).filter(|&i| logits[i] == best).collect();
    if tied.len() == 1 {
        return (tied[0], TieBreak::None);
    }
    let sums = &scores.choice_logprob_sums;
    let best_sum = tied.iter().map(|&i| sums[i]).fold(f64::NEG_INFINITY, f64::max);
    let finalists: Vec<usize> = tied.into_iter().filter(|&i| sums[i] == best_sum).collect();
    if finalists.len() == 1 {
        (finalists[0], TieBreak::LogprobSum)
    } else {
        (finalists[0], TieBreak::LowestIndex)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentNll {
    pub segment: Segment,
    pub nll: f64,
    pub scored_tokens: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NllOutcome {
    pub total_nll: f64,
    pub n_tokens: usize,
    pub plan: NllWindowPlan,
    pub segments: Vec<SegmentNll>,
}

#[derive(Debug, Clone)]
pub struct InferenceClient {
    config: ClientConfig,
    http: reqwest::Client,
}

fn transport_error(e: reqwest::Error) -> InferenceError {
    if e.is_timeout() {
        InferenceError::Timeout
    } else if e.is_decode() {
        InferenceError::Protocol(e.to_string())
    } else {
        InferenceError::Connect(e.to_string())
    }
}

impl InferenceClient {
    pub fn new(config: ClientConfig) -> Result<Self, InferenceError> {
        let http = reqwest::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| InferenceError::Connect(e.to_string()))?;
        Ok(Self { config, http })
    }

    pub fn config(&self) -> &ClientConfig {
        &self.config
    }

    pub async fn health(&self) -> Result<(), InferenceError> {
        let url = format!("{}/v1/health", self.config.base_url);
        let resp = self.http.get(url).send().await.map_err(transport_error)?;
        if !resp.status().is_success() {
            return Err(InferenceError::Server(resp.status().as_u16()));
        }
        let body: HealthResponse = decode(resp).await?;
        if body.status != "ok" {
            return Err(InferenceError::Protocol(format!("health status {:?}", body.status)));
        }
        Ok(())
    }

    /// Posts once, retrying only timeouts and connection failures with
    /// exponential backoff. Returns the body, the duration of the successful
    /// attempt and the number of attempts made.
    async fn post<T: DeserializeOwned>(&self, req: &WireRequest) -> Result<(T, Duration, u32), InferenceError> {
        let url = format!("{}{}", self.config.base_url, req.endpoint());
        let mut attempt = 0;
        loop {
            attempt += 1;
            let started = Instant::now();
            let result = async {
                let resp = self.http.post(&url).json(req).send().await.map_err(transport_error)?;
                if !resp.status().is_success() {
                    return Err(InferenceError::Server(resp.status().as_u16()));
                }
                decode::<T>(resp).await
            }
            .await;
            match result {
                Ok(body) => return Ok((body, started.elapsed(), attempt)),
                Err(e) if e.is_retryable() && attempt <= self.config.retries => {
                    log::warn!("{} attempt {attempt} failed: {e}; retrying", req.endpoint());
                    tokio::time::sleep(self.config.backoff * 2u32.pow(attempt - 1)).await;
                }
                Err(e) => return Err(e),
            }
        }
    }

    pub async fn generate(
        &self,
        prompt: &str,
        max_new_tokens: usize,
        stop: &[String],
    ) -> Result<Generation, InferenceError> {
        let req = WireRequest::Generate { prompt: prompt.to_string(), max_new_tokens, stop: stop.to_vec() };
        let (resp, elapsed, attempts): (GenerateResponse, _, _) = self.post(&req).await?;
        let mut output_text = resp.output_text;
        // the server should already have cut at stop strings
        if let Some(cut) = stop.iter().filter(|s| !s.is_empty()).filter_map(|s| output_text.find(s.as_str())).min() {
            output_text.truncate(cut);
        }
        Ok(Generation {
            output_text,
            generated_token_count: resp.generated_token_count,
            wall_time: self.config.clock.charge(elapsed, resp.generated_token_count),
            attempts,
        })
    }

    pub async fn score_choices(&self, prompt: &str, choices: &[String]) -> Result<ScoreChoicesResponse, InferenceError> {
        let req = WireRequest::ScoreChoices { prompt: prompt.to_string(), choices: choices.to_vec() };
        let (resp, _, _): (ScoreChoicesResponse, _, _) = self.post(&req).await?;
        resp.check(choices.len())?;
        Ok(resp)
    }

    pub async fn rank_labels(&self, prompt: &str, labels: &[String]) -> Result<Ranking, InferenceError> {
        if labels.is_empty() {
            return Err(InferenceError::EmptyLabelSet);
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(InferenceError::DuplicateLabel(l.clone()));
            }
        }
        let scores = self.score_choices(prompt, labels).await?;
        let (chosen_index, tie_break) = choose_label(&scores);
        Ok(Ranking {
            chosen_index,
            choice_logits: scores.choice_logits,
            choice_logprob_sums: scores.choice_logprob_sums,
            tie_break,
        })
    }

    pub async fn token_nll(&self, text: &str, start: Option<usize>, end: Option<usize>) -> Result<TokenNllResponse, InferenceError> {
        let req = WireRequest::TokenNll { text: text.to_string(), start, end };
        let (resp, _, _): (TokenNllResponse, _, _) = self.post(&req).await?;
        resp.check()?;
        if let (Some(s), Some(e)) = (start, end) {
            let expect = e.min(resp.total_tokens).saturating_sub(s);
            if resp.token_count != expect {
                return Err(InferenceError::Protocol(format!(
                    "asked for tokens [{s}, {e}), got {} log-probs",
                    resp.token_count
                )));
            }
        }
        Ok(resp)
    }

    /// Total negative log-likelihood of `text` under strided windows. The
    /// first window's response reveals the token count, from which the rest
    /// of the plan follows. Not length-normalized.
    pub async fn compute_nll(&self, text: &str, window: usize, stride: usize) -> Result<NllOutcome, InferenceError> {
        if text.is_empty() {
            return Err(InferenceError::EmptyText);
        }
        plan_nll_windows(1, window, stride)?;
        let first = self.token_nll(text, Some(0), Some(window)).await?;
        let plan = plan_nll_windows(first.total_tokens, window, stride)?;
        let mut segments = Vec::with_capacity(plan.segments.len());
        let mut total = 0.0;
        for (i, seg) in plan.segments.iter().enumerate() {
            let resp = if i == 0 {
                first.clone()
            } else {
                self.token_nll(text, Some(seg.start), Some(seg.end)).await?
            };
            let offset = seg.scored_from - seg.start;
            let nll: f64 = -resp.token_logprobs[offset..].iter().sum::<f64>();
            total += nll;
            segments.push(SegmentNll { segment: *seg, nll, scored_tokens: seg.end - seg.scored_from });
        }
        Ok(NllOutcome { total_nll: total, n_tokens: first.total_tokens, plan, segments })
    }
}

async fn decode<T: DeserializeOwned>(resp: reqwest::Response) -> Result<T, InferenceError> {
    let bytes = resp.bytes().await.map_err(transport_error)?;
    serde_json::from_slice(&bytes).map_err(|e| InferenceError::Protocol(e.to_string()))
}

/// Runs `f` over `items` with at most `parallelism` futures in flight and
/// returns results in submission order.
pub async fn run_ordered<I, F, Fut, T>(items: I, parallelism: usize, f: F) -> Vec<T>
where
    I: IntoIterator,
    F: FnMut(I::Item) -> Fut,
    Fut: Future<Output = T>,
{
    stream::iter(items).map(f).buffered(parallelism.max(1)).collect().await
}

//! Behavioral checks any backend must pass to be driven by the orchestrator.

use serde::Serialize;
use serde_json::{json, Value};

use super::wire::{GenerateResponse, HealthResponse, ScoreChoicesResponse, TokenNllResponse};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConformanceCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

async fn post(http: &reqwest::Client, base: &str, path: &str, body: &Value) -> Result<(u16, Value), String> {
    let resp = http.post(format!("{base}{path}")).json(body).send().await.map_err(|e| e.to_string())?;
    let status = resp.status().as_u16();
    let bytes = resp.bytes().await.map_err(|e| e.to_string())?;
    let value = serde_json::from_slice(&bytes).unwrap_or(Value::Null);
    Ok((status, value))
}

async fn post_ok<T: serde::de::DeserializeOwned>(
    http: &reqwest::Client,
    base: &str,
    path: &str,
    body: &Value,
) -> Result<(T, Value), String> {
    let (status, value) = post(http, base, path, body).await?;
    if status != 200 {
        return Err(format!("status {status}"));
    }
    let typed = serde_json::from_value(value.clone()).map_err(|e| format!("bad response shape: {e}"))?;
    Ok((typed, value))
}

/// Runs the conformance checks against `base_url`, in a fixed order.
pub async fn check_backend(base_url: &str) -> Vec<ConformanceCheck> {
    let base = base_url.trim_end_matches('/');
    let http = reqwest::Client::new();
    let mut out = Vec::new();
    let mut record = |name: &'static str, r: Result<String, String>| {
        let (passed, detail) = match r {
            Ok(d) => (true, d),
            Err(d) => (false, d),
        };
        out.push(ConformanceCheck { name, passed, detail });
    };

    let health = async {
        let resp = http.get(format!("{base}/v1/health")).send().await.map_err(|e| e.to_string())?;
        let h: HealthResponse = resp.json().await.map_err(|e| e.to_string())?;
        if h.status == "ok" { Ok("status ok".to_string()) } else { Err(format!("status {:?}", h.status)) }
    };
    record("health", health.await);

    let gen_body = json!({"kind": "generate", "prompt": "first line\nsecond line", "max_new_tokens": 16, "stop": ["\n\n"]});
    let generate = async {
        let (a, _): (GenerateResponse, _) = post_ok(&http, base, "/v1/generate", &gen_body).await?;
        let (b, _): (GenerateResponse, _) = post_ok(&http, base, "/v1/generate", &gen_body).await?;
        if a != b {
            return Err("repeated request gave a different response".into());
        }
        if a.output_text.contains("\n\n") {
            return Err("output contains a stop string".into());
        }
        Ok(format!("{:?}, {} tokens", a.output_text, a.generated_token_count))
    };
    record("generate", generate.await);

    let choices = json!({"kind": "score_choices", "prompt": "The answer is", "choices": ["yes", "no", "maybe so"]});
    let score = async {
        let (a, _): (ScoreChoicesResponse, _) = post_ok(&http, base, "/v1/score_choices", &choices).await?;
        a.check(3).map_err(|e| e.to_string())?;
        let (b, _): (ScoreChoicesResponse, _) = post_ok(&http, base, "/v1/score_choices", &choices).await?;
        if a != b {
            return Err("repeated request gave a different response".into());
        }
        Ok(format!("logits {:?}", a.choice_logits))
    };
    record("score_choices", score.await);

    let text = "one two three four five six";
    let nll = async {
        let (whole, _): (TokenNllResponse, _) =
            post_ok(&http, base, "/v1/token_nll", &json!({"kind": "token_nll", "text": text})).await?;
        whole.check().map_err(|e| e.to_string())?;
        if whole.token_count != whole.total_tokens {
            return Err("whole-text request must score every token".into());
        }
        if whole.total_tokens < 3 {
            return Ok(format!("{} tokens; span check skipped", whole.total_tokens));
        }
        let span = json!({"kind": "token_nll", "text": text, "start": 1, "end": 3});
        let (part, _): (TokenNllResponse, _) = post_ok(&http, base, "/v1/token_nll", &span).await?;
        part.check().map_err(|e| e.to_string())?;
        if part.token_count != 2 || part.total_tokens != whole.total_tokens {
            return Err(format!("span [1, 3) gave {} tokens of {}", part.token_count, part.total_tokens));
        }
        Ok(format!("{} tokens", whole.total_tokens))
    };
    record("token_nll", nll.await);

    let invalid = async {
        let (status, _) = post(&http, base, "/v1/generate", &json!({"kind": "generate", "prompt": "x"})).await?;
        if (400..500).contains(&status) { Ok(format!("status {status}")) } else { Err(format!("status {status}")) }
    };
    record("rejects_invalid_request", invalid.await);
    out
}

use serde::{Deserialize, Serialize};

use super::InferenceError;

/// Request bodies. Each is posted to its own endpoint; the `kind` tag is
/// included so a body is self-describing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WireRequest {
    Generate {
        prompt: String,
        max_new_tokens: usize,
        stop: Vec<String>,
    },
    ScoreChoices {
        prompt: String,
        choices: Vec<String>,
    },
    /// Scores the server-side tokens `[start, end)` of `text`, with the
    /// first token of the span conditioned only on the start of sequence.
    /// Both bounds are optional and default to the whole text.
    TokenNll {
        text: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        start: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        end: Option<usize>,
    },
}

impl WireRequest {
    pub fn endpoint(&self) -> &'static str {
        match self {
            WireRequest::Generate { .. } => "/v1/generate",
            WireRequest::ScoreChoices { .. } => "/v1/score_choices",
            WireRequest::TokenNll { .. } => "/v1/token_nll",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateResponse {
    pub output_text: String,
    pub generated_token_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreChoicesResponse {
    /// Logit of each choice's first token.
    pub choice_logits: Vec<f64>,
    /// Summed log-probability of each full choice.
    pub choice_logprob_sums: Vec<f64>,
}

impl ScoreChoicesResponse {
    pub fn check(&self, n_choices: usize) -> Result<(), InferenceError> {
        if self.choice_logits.len() != n_choices || self.choice_logprob_sums.len() != n_choices {
            return Err(InferenceError::Protocol(format!(
                "expected {n_choices} choice scores, got {} logits and {} sums",
                self.choice_logits.len(),
                self.choice_logprob_sums.len()
            )));
        }
        if self.choice_logits.iter().chain(&self.choice_logprob_sums).any(|x| !x.is_finite()) {
            return Err(InferenceError::Protocol("non-finite choice score".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenNllResponse {
    pub token_logprobs: Vec<f64>,
    pub token_count: usize,
    /// Token count of the whole text, regardless of the requested span.
    pub total_tokens: usize,
}

impl TokenNllResponse {
    pub fn check(&self) -> Result<(), InferenceError> {
        if self.token_count != self.token_logprobs.len() {
            return Err(InferenceError::Protocol(format!(
                "token_count {} but {} log-probs",
                self.token_count,
                self.token_logprobs.len()
            )));
        }
        if self.token_count > self.total_tokens {
            return Err(InferenceError::Protocol("span longer than the text".into()));
        }
        if self.token_logprobs.iter().any(|x| !x.is_finite() || *x > 0.0) {
            return Err(InferenceError::Protocol("log-probs must be finite and <= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HealthResponse {
    pub status: String,
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn request_shapes() {
        let r = WireRequest::Generate { prompt: "p".into(), max_new_tokens: 4, stop: vec!["\n\n".into()] };
        assert_eq!(
            serde_json::to_value(&r).unwrap(),
            json!({"kind": "generate", "prompt": "p", "max_new_tokens": 4, "stop": ["\n\n"]})
        );
        let r = WireRequest::TokenNll { text: "a b".into(), start: None, end: None };
        assert_eq!(serde_json::to_value(&r).unwrap(), json!({"kind": "token_nll", "text": "a b"}));
        let bad: Result<WireRequest, _> =
            serde_json::from_value(json!({"kind": "score_choices", "prompt": "p", "choices": [], "stop": []}));
        assert!(bad.is_err());
    }

    #[test]
    fn response_checks() {
        let r = ScoreChoicesResponse { choice_logits: vec![1.0], choice_logprob_sums: vec![] };
        assert!(r.check(1).is_err());
        let r = TokenNllResponse { token_logprobs: vec![-1.0], token_count: 2, total_tokens: 2 };
        assert!(r.check().is_err());
    }
}

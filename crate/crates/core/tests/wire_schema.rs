//! Bodies produced by the client and the stub validate against the published
//! wire-protocol schema, and malformed bodies do not.

mod common;

use polyeval::inference::stub::{choice_scores, echo_output, token_nll_response, StubSpec};
use polyeval::inference::wire::{GenerateResponse, HealthResponse, WireRequest};
use serde_json::{json, Value};

fn validator(definition: &str) -> jsonschema::Validator {
    let path = common::fixtures().join("../schemas/wire-protocol.schema.json");
    let mut schema: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    schema["$ref"] = json!(format!("#/definitions/{definition}"));
    jsonschema::validator_for(&schema).unwrap()
}

fn assert_valid(definition: &str, v: &Value) {
    let errors: Vec<String> = validator(definition).iter_errors(v).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{definition}: {v} -> {errors:?}");
}

fn assert_invalid(definition: &str, v: &Value) {
    assert!(!validator(definition).is_valid(v), "{definition} accepted {v}");
}

#[test]
fn requests_conform() {
    let reqs = [
        ("generate_request", WireRequest::Generate { prompt: "p".into(), max_new_tokens: 8, stop: vec!["\n\n".into()] }),
        ("score_choices_request", WireRequest::ScoreChoices { prompt: "p".into(), choices: vec!["a".into(), "b".into()] }),
        ("token_nll_request", WireRequest::TokenNll { text: "a b c".into(), start: Some(1), end: Some(3) }),
        ("token_nll_request", WireRequest::TokenNll { text: "a b c".into(), start: None, end: None }),
    ];
    for (def, r) in reqs {
        assert_valid(def, &serde_json::to_value(&r).unwrap());
    }
}

#[test]
fn stub_responses_conform() {
    let gen = GenerateResponse { output_text: echo_output("x\ny z", 4, &[]), generated_token_count: 2 };
    assert_valid("generate_response", &serde_json::to_value(gen).unwrap());
    let choices: Vec<String> = common::strings(&["yes", "no"]);
    for spec in [StubSpec::Echo, StubSpec::UniformVocab { vocab_size: 9 }] {
        assert_valid("score_choices_response", &serde_json::to_value(choice_scores(&spec, "q", &choices).unwrap()).unwrap());
        let nll = token_nll_response(&spec, "one two three", Some(1), None).unwrap();
        assert_valid("token_nll_response", &serde_json::to_value(nll).unwrap());
    }
    assert_valid("health_response", &serde_json::to_value(HealthResponse { status: "ok".into() }).unwrap());
}

#[test]
fn malformed_bodies_are_rejected() {
    assert_invalid("generate_request", &json!({"kind": "generate", "prompt": "x"}));
    assert_invalid("generate_request", &json!({"kind": "token_nll", "prompt": "x", "max_new_tokens": 1, "stop": []}));
    assert_invalid("generate_request", &json!({"kind": "generate", "prompt": "x", "max_new_tokens": -1, "stop": []}));
    assert_invalid("score_choices_request", &json!({"kind": "score_choices", "prompt": "x", "choices": "a"}));
    assert_invalid("token_nll_response", &json!({"token_logprobs": [0.5], "token_count": 1, "total_tokens": 1}));
    assert_invalid("generate_response", &json!({"output_text": 3, "generated_token_count": 1}));
}

mod common;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::State;
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::post;
use axum::{Json, Router};
use common::{dead_url, serve, viggo, write_experiment};
use darank::generators::{
    request_key, write_fixture, Fixture, RecordingGenerator, RemoteGenerator, RemoteSettings, ReplayGenerator,
};
use darank::retry::RetryPolicy;
use darank::{run_pipeline, ExitCode, GeneratorKind};
use darank_core::generation::{completion_request, overgenerate, GenerationConfig, GenerationError, Generator};
use darank_core::mock::MockGenerator;
use darank_core::{parse_mr, render_prompt, MockPolicy, PromptSpec, PromptStyle};
use serde_json::{json, Value};

#[derive(Clone, Default)]
struct Llm {
    bodies: Arc<Mutex<Vec<Value>>>,
    auth: Arc<Mutex<Vec<Option<String>>>>,
    /// Answer this many requests with `fail_status` first.
    failures_left: Arc<AtomicUsize>,
    fail_status: u16,
    /// Fail every request after this many successes.
    succeed_only: Option<usize>,
    successes: Arc<AtomicUsize>,
    tokens_per_call: u64,
}

async fn completions(State(s): State<Llm>, headers: HeaderMap, Json(body): Json<Value>) -> Response {
    s.bodies.lock().unwrap().push(body.clone());
    s.auth.lock().unwrap().push(headers.get("authorization").map(|v| v.to_str().unwrap().to_string()));
    let left = s.failures_left.load(Ordering::SeqCst);
    if left > 0 {
        s.failures_left.store(left - 1, Ordering::SeqCst);
        return (StatusCode::from_u16(s.fail_status).unwrap(), "try later").into_response();
    }
    if s.succeed_only.is_some_and(|n| s.successes.load(Ordering::SeqCst) >= n) {
        return (StatusCode::INTERNAL_SERVER_ERROR, "gone").into_response();
    }
    let call = s.successes.fetch_add(1, Ordering::SeqCst);
    let n = body["n"].as_u64().unwrap() as usize;
    // Out of order on purpose: the client sorts by index.
    let choices: Vec<Value> =
        (0..n).rev().map(|i| json!({"text": format!(" Call {call} choice {i}.\" more"), "index": i})).collect();
    Json(json!({"choices": choices, "usage": {"total_tokens": s.tokens_per_call}})).into_response()
}

fn start(llm: Llm) -> String {
    serve(Router::new().route("/v1/completions", post(completions)).with_state(llm))
}

fn settings(url: String) -> RemoteSettings {
    RemoteSettings {
        url: format!("{url}/v1"),
        model: Some("test-model".into()),
        api_key: Some("secret".into()),
        supports_n: true,
        retry: RetryPolicy { retries: 2, base_delay_ms: 1, max_delay_ms: 2 },
        max_requests: None,
        max_total_tokens: None,
        timeout: Duration::from_secs(5),
    }
}

fn prompt() -> PromptSpec {
    let o = viggo();
    render_prompt(PromptStyle::TstVanilla, &[], &parse_mr("suggest(name[Portal 2])", &o).unwrap(), &o).unwrap()
}

fn gen_cfg(k: usize) -> GenerationConfig {
    GenerationConfig { k, ..GenerationConfig::default() }
}

#[test]
fn one_request_when_n_is_supported() {
    let llm = Llm::default();
    let url = start(llm.clone());
    let g = RemoteGenerator::new(settings(url));
    let cands = overgenerate(&prompt(), "p", &gen_cfg(4), &g).unwrap();
    assert_eq!(cands.iter().map(|c| c.text.as_str()).collect::<Vec<_>>(), [
        "Call 0 choice 0.",
        "Call 0 choice 1.",
        "Call 0 choice 2.",
        "Call 0 choice 3."
    ]);
    let bodies = llm.bodies.lock().unwrap();
    assert_eq!(bodies.len(), 1);
    assert_eq!(bodies[0]["n"], 4);
    assert_eq!(bodies[0]["model"], "test-model");
    assert_eq!(bodies[0]["stop"], json!(["\""]));
    assert_eq!(bodies[0]["prompt"], prompt().rendered);
    assert_eq!(llm.auth.lock().unwrap()[0].as_deref(), Some("Bearer secret"));
}

#[test]
fn k_single_requests_without_n() {
    let llm = Llm::default();
    let url = start(llm.clone());
    let g = RemoteGenerator::new(RemoteSettings { supports_n: false, ..settings(url) });
    let cands = overgenerate(&prompt(), "p", &gen_cfg(3), &g).unwrap();
    assert_eq!(cands.iter().map(|c| c.text.as_str()).collect::<Vec<_>>(), [
        "Call 0 choice 0.",
        "Call 1 choice 0.",
        "Call 2 choice 0."
    ]);
    assert!(llm.bodies.lock().unwrap().iter().all(|b| b["n"] == 1));
    assert_eq!(g.requests_made(), 3);
}

#[test]
fn rate_limits_are_retried() {
    let llm = Llm { fail_status: 429, ..Llm::default() };
    llm.failures_left.store(2, Ordering::SeqCst);
    let url = start(llm.clone());
    let g = RemoteGenerator::new(settings(url));
    assert_eq!(overgenerate(&prompt(), "p", &gen_cfg(2), &g).unwrap().len(), 2);
    assert_eq!(llm.bodies.lock().unwrap().len(), 3);
}

#[test]
fn client_errors_are_not_retried() {
    let llm = Llm { fail_status: 400, ..Llm::default() };
    llm.failures_left.store(1, Ordering::SeqCst);
    let url = start(llm.clone());
    let g = RemoteGenerator::new(settings(url));
    let err = overgenerate(&prompt(), "p", &gen_cfg(2), &g).unwrap_err();
    assert!(matches!(err, GenerationError::Endpoint { retryable: false, .. }), "{err}");
    assert_eq!(llm.bodies.lock().unwrap().len(), 1);
}

#[test]
fn exhausted_retries_surface_the_error() {
    let llm = Llm { fail_status: 503, ..Llm::default() };
    llm.failures_left.store(10, Ordering::SeqCst);
    let url = start(llm.clone());
    let g = RemoteGenerator::new(settings(url));
    assert!(matches!(
        overgenerate(&prompt(), "p", &gen_cfg(2), &g),
        Err(GenerationError::Endpoint { retryable: true, .. })
    ));
    assert_eq!(llm.bodies.lock().unwrap().len(), 3);
}

#[test]
fn partial_k_fold_is_padded() {
    let llm = Llm { succeed_only: Some(2), ..Llm::default() };
    let url = start(llm);
    let g = RemoteGenerator::new(RemoteSettings { supports_n: false, ..settings(url) });
    let cands = overgenerate(&prompt(), "p", &gen_cfg(5), &g).unwrap();
    assert_eq!(cands.len(), 5);
    assert_eq!(cands.iter().map(|c| c.padded).collect::<Vec<_>>(), [false, false, true, true, true]);
    assert!(cands[2..].iter().all(|c| c.text.is_empty()));
}

#[test]
fn request_budget_is_enforced() {
    let llm = Llm::default();
    let url = start(llm.clone());
    let g = RemoteGenerator::new(RemoteSettings { supports_n: false, max_requests: Some(4), ..settings(url) });
    assert!(overgenerate(&prompt(), "p", &gen_cfg(3), &g).is_ok());
    assert!(matches!(overgenerate(&prompt(), "p", &gen_cfg(3), &g), Err(GenerationError::BudgetExceeded(_))));
    assert_eq!(llm.bodies.lock().unwrap().len(), 4);
}

#[test]
fn token_budget_is_enforced() {
    let llm = Llm { tokens_per_call: 60, ..Llm::default() };
    let url = start(llm);
    let g = RemoteGenerator::new(RemoteSettings { max_total_tokens: Some(100), ..settings(url) });
    assert!(overgenerate(&prompt(), "p", &gen_cfg(2), &g).is_ok());
    assert!(overgenerate(&prompt(), "p", &gen_cfg(2), &g).is_ok());
    assert_eq!(g.tokens_used(), 120);
    assert!(matches!(overgenerate(&prompt(), "p", &gen_cfg(2), &g), Err(GenerationError::BudgetExceeded(_))));
}

#[test]
fn unreachable_endpoint_is_retryable() {
    let g = RemoteGenerator::new(settings(dead_url()));
    assert!(matches!(
        overgenerate(&prompt(), "p", &gen_cfg(1), &g),
        Err(GenerationError::Endpoint { retryable: true, .. })
    ));
}

#[test]
fn record_then_replay() {
    let dir = tempfile::tempdir().unwrap();
    let mock = MockGenerator { ontology: viggo(), policy: MockPolicy::OnePerfect, seed: 3 };
    let recorder = RecordingGenerator { inner: &mock, dir: dir.path().to_path_buf() };
    let p = prompt();
    let cfg = gen_cfg(6);
    let recorded = overgenerate(&p, "p", &cfg, &recorder).unwrap();

    let key = request_key(&completion_request(&p, &cfg));
    assert!(dir.path().join(format!("{key}.json")).exists());
    let replay = ReplayGenerator::new(dir.path());
    assert_eq!(overgenerate(&p, "p", &cfg, &replay).unwrap(), recorded);
    assert_eq!(replay.consulted().keys().collect::<Vec<_>>(), [&format!("{key}.json")]);

    let other = GenerationConfig { temperature: 0.25, ..cfg };
    assert!(matches!(overgenerate(&p, "p", &other, &replay), Err(GenerationError::FixtureMiss(_))));
}

#[test]
fn replay_rejects_a_fixture_for_another_request() {
    let dir = tempfile::tempdir().unwrap();
    let p = prompt();
    let cfg = gen_cfg(2);
    let request = completion_request(&p, &cfg);
    let key = request_key(&request);
    let mut changed = request.clone();
    changed.prompt.push('!');
    write_fixture(dir.path(), &Fixture { request: changed, completions: vec!["x".into()] }).unwrap();
    // Stored under the changed request's key; move it under ours.
    let only = std::fs::read_dir(dir.path()).unwrap().next().unwrap().unwrap().path();
    std::fs::rename(only, dir.path().join(format!("{key}.json"))).unwrap();
    let replay = ReplayGenerator::new(dir.path());
    assert!(matches!(replay.generate(&p, &request), Err(GenerationError::FixtureMiss(k)) if k == key));
}

#[test]
fn missing_fixture_fails_the_run_with_generation_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = write_experiment(dir.path(), 3, 1, "");
    cfg.generator.kind = GeneratorKind::Replay;
    cfg.generator.fixtures = Some("fixtures".into());
    std::fs::create_dir(dir.path().join("fixtures")).unwrap();
    let err = run_pipeline(&cfg).err().unwrap();
    assert_eq!(err.exit_code(), ExitCode::Generation);
}

#[test]
fn remote_generator_drives_a_run() {
    let llm = Llm::default();
    let url = start(llm.clone());
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = write_experiment(dir.path(), 3, 1, "");
    cfg.generation.k = 3;
    cfg.generator.kind = GeneratorKind::Remote;
    cfg.generator.url = Some(format!("{url}/v1"));
    let out = run_pipeline(&cfg).unwrap();
    assert_eq!(out.artifact.items.len(), 9);
    assert_eq!(llm.bodies.lock().unwrap().len(), 9);
    assert!(out.artifact.items.iter().all(|i| i.pool.entries.len() == 3));
}

mod common;

use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use common::{batch_scores, fixture, samples};
use http_body_util::BodyExt;
use jawprint_core::evaluation::{model_file_name, write_thresholds, THRESHOLD_FILE};
use jawprint_core::signal::SensorLocation;
use jawprint_core::verifiers::save_model;
use jawprint_service::http::{router, IngestResult, SessionCreated};
use jawprint_service::{Registry, ServiceConfig, SessionManager, SessionState, Status, WarningEvent, WarningPolicy};
use serde_json::{json, Value};
use tower::ServiceExt;

fn app() -> (Router, Arc<SessionManager>) {
    let registry = Registry::new([(*fixture().enrollment).clone()]);
    let m = Arc::new(SessionManager::new(registry, WarningPolicy::default()).unwrap());
    (router(m.clone()), m)
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri).header("content-type", "application/json");
    let req = req.body(body.map(|b| Body::from(b.to_string())).unwrap_or_default()).unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

fn user() -> String {
    fixture().enrollment.verifier.user_id.clone()
}

async fn open(app: &Router) -> String {
    let (code, body) = call(app, "POST", "/sessions", Some(json!({ "user_id": user() }))).await;
    assert_eq!(code, StatusCode::CREATED);
    serde_json::from_value::<SessionCreated>(body).unwrap().session_id
}

/// Sends the range in 1 s chunks, locations interleaved as a live client would.
async fn feed(app: &Router, id: &str, range: std::ops::Range<usize>) -> Vec<WarningEvent> {
    let mut out = Vec::new();
    for start in range.clone().step_by(100) {
        let end = (start + 100).min(range.end);
        for loc in SensorLocation::ALL {
            let batch = json!({ "location": loc.to_string(), "samples": &samples(&fixture().genuine, loc)[start..end] });
            let (code, body) = call(app, "POST", &format!("/sessions/{id}/samples"), Some(batch)).await;
            assert_eq!(code, StatusCode::OK, "{body}");
            out.extend(serde_json::from_value::<IngestResult>(body).unwrap().events);
        }
    }
    out
}

/// Reads SSE messages until `n` events arrived.
async fn read_events(body: Body, n: usize) -> Vec<WarningEvent> {
    let mut body = body;
    let mut text = String::new();
    let mut out = Vec::new();
    while out.len() < n {
        let frame = body.frame().await.expect("stream ended early").unwrap();
        if let Ok(data) = frame.into_data() {
            text.push_str(std::str::from_utf8(&data).unwrap());
        }
        while let Some(end) = text.find("\n\n") {
            let msg: String = text.drain(..end + 2).collect();
            for line in msg.lines() {
                if let Some(d) = line.strip_prefix("data: ").or_else(|| line.strip_prefix("data:")) {
                    out.push(serde_json::from_str(d).unwrap());
                }
            }
        }
    }
    out
}

async fn subscribe(app: &Router, id: &str, from: u64) -> Body {
    let req = Request::get(format!("/sessions/{id}/events?from={from}")).body(Body::empty()).unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    assert_eq!(resp.status(), StatusCode::OK);
    assert_eq!(resp.headers()["content-type"], "text/event-stream");
    resp.into_body()
}

#[tokio::test]
async fn session_lifecycle_over_http() {
    let (app, _) = app();
    let (code, _) = call(&app, "POST", "/sessions", Some(json!({ "user_id": "nobody" }))).await;
    assert_eq!(code, StatusCode::NOT_FOUND);
    let a = open(&app).await;
    let b = open(&app).await;
    assert_ne!(a, b);

    let (code, body) = call(&app, "GET", &format!("/sessions/{a}/status"), None).await;
    assert_eq!(code, StatusCode::OK);
    let state: SessionState = serde_json::from_value(body.clone()).unwrap();
    assert_eq!((state.window_count, state.failure_count, state.status), (0, 0, Status::Active));
    assert_eq!(body["status"], "active");

    assert!(feed(&app, &a, 0..249).await.is_empty());
    let events = feed(&app, &a, 249..750).await;
    assert_eq!(events.iter().filter(|e| e.score.is_some()).count(), 3);

    let (code, body) = call(&app, "POST", &format!("/sessions/{a}/actions"), Some(json!({ "action": "request_stepup" }))).await;
    assert_eq!(code, StatusCode::OK);
    assert_eq!(body["status"], "verified-pending-stepup");
    let (code, _) = call(&app, "POST", &format!("/sessions/{a}/actions"), Some(json!({ "action": "request_stepup" }))).await;
    assert_eq!(code, StatusCode::CONFLICT);
    let (_, body) = call(&app, "POST", &format!("/sessions/{a}/actions"), Some(json!({ "action": "terminate" }))).await;
    assert_eq!(body["status"], "terminated");

    let batch = json!({ "location": "chin", "samples": &samples(&fixture().genuine, SensorLocation::BelowChin)[750..760] });
    let (code, _) = call(&app, "POST", &format!("/sessions/{a}/samples"), Some(batch)).await;
    assert_eq!(code, StatusCode::CONFLICT);
    let batch = json!({ "location": "forehead", "samples": [] });
    let (code, _) = call(&app, "POST", &format!("/sessions/{b}/samples"), Some(batch)).await;
    assert_eq!(code, StatusCode::UNPROCESSABLE_ENTITY);
    let (code, _) = call(&app, "GET", "/sessions/s999999/status", None).await;
    assert_eq!(code, StatusCode::NOT_FOUND);

    let (_, list) = call(&app, "GET", "/sessions", None).await;
    assert_eq!(list.as_array().unwrap().len(), 2);
}

#[tokio::test]
async fn event_stream_replays_then_follows() {
    let (app, m) = app();
    let id = open(&app).await;
    feed(&app, &id, 0..1000).await;
    let log = m.events(&id).unwrap();
    assert!(log.len() >= 4);

    let all = read_events(subscribe(&app, &id, 0).await, log.len()).await;
    assert_eq!(all, log);
    let wire: Vec<u64> = all.iter().filter_map(|e| e.score).map(f64::to_bits).collect();
    let offline: Vec<u64> = batch_scores(&fixture().genuine).iter().take(wire.len()).map(|s| s.to_bits()).collect();
    assert_eq!(wire, offline);
    let tail = read_events(subscribe(&app, &id, 2).await, log.len() - 2).await;
    assert_eq!(tail, log[2..]);

    // Two live subscribers see the same sequence, in emission order.
    let s1 = subscribe(&app, &id, log.len() as u64).await;
    let s2 = subscribe(&app, &id, log.len() as u64).await;
    let new = feed(&app, &id, 1000..1500).await;
    call(&app, "POST", &format!("/sessions/{id}/actions"), Some(json!({ "action": "terminate" }))).await;
    let n = new.len() + 1;
    let (a, b) = (read_events(s1, n).await, read_events(s2, n).await);
    assert_eq!(a, b);
    assert_eq!(a[..new.len()], new[..]);
    assert!(a.iter().enumerate().all(|(i, e)| e.seq == (log.len() + i) as u64));

    // Folding what a subscriber saw reproduces the status endpoint.
    let full = read_events(subscribe(&app, &id, 0).await, log.len() + n).await;
    let (_, status) = call(&app, "GET", &format!("/sessions/{id}/status"), None).await;
    let folded = SessionState::fold(&id, &user(), &full, m.policy());
    assert_eq!(folded, serde_json::from_value::<SessionState>(status).unwrap());
}

#[test]
fn registry_loads_a_model_directory() {
    let dir = tempfile::tempdir().unwrap();
    let e = &fixture().enrollment;
    save_model(&e.verifier, &dir.path().join(model_file_name(&e.threshold.user_id))).unwrap();
    write_thresholds(&dir.path().join(THRESHOLD_FILE), std::slice::from_ref(&e.threshold)).unwrap();
    let reg = Registry::load(dir.path()).unwrap();
    let loaded = reg.get(&e.threshold.user_id).unwrap();
    assert_eq!(loaded.verifier, e.verifier);
    assert_eq!(loaded.threshold, e.threshold);
    assert!(reg.get("nobody").is_none());
    assert!(Registry::load(&dir.path().join("missing")).is_err());
}

#[test]
fn config_file_then_environment() {
    let cfg = ServiceConfig::from_toml("port = 9000\n[policy]\nconsecutive_window_failures = 5\n").unwrap();
    assert_eq!(cfg.port, 9000);
    assert_eq!(cfg.policy.consecutive_window_failures, 5);
    assert_eq!(cfg.policy.failure_rate_window, 20);
    let mut cfg = cfg;
    cfg.apply_env(|k| match k {
        "JAWPRINT_PORT" => Some("9100".into()),
        "JAWPRINT_WARN_RATE" => Some("0.5".into()),
        _ => None,
    })
    .unwrap();
    assert_eq!((cfg.port, cfg.policy.failure_rate_threshold), (9100, 0.5));
    assert!(cfg.clone().apply_env(|k| (k == "JAWPRINT_WARN_CONSECUTIVE").then(|| "0".into())).is_err());
    assert!(ServiceConfig::from_toml("port = \"x\"").is_err());
    assert_eq!(ServiceConfig::default().policy, WarningPolicy::default());
}

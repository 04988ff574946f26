use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use darkwatch_core::score::Hyperparams;
use darkwatch_core::{DocId, KeywordLexicon, RawDocument, Source, Store, Triage, VirtualClock};
use darkwatch_service::{router, AppState};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

const TEXTS: [&str; 10] = [
    "botnet rental with exploit kit bundles for iot device takeovers",
    "mirai botnet loader and exploit kit spreads over telnet",
    "hacker for hire with botnet access and exploit kit",
    "webcam shells sold per device from a mirai botnet",
    "ddos botnet rental and exploit kit subscription",
    "volunteer study group for certification exams and guidance",
    "patch summary and mitigation guidance for administrators",
    "certification study notes and defensive guidance",
    "career guidance for analysts and certification advice",
    "study group mitigation guidance for small offices",
];

struct Fixture {
    _dir: tempfile::TempDir,
    reports: std::path::PathBuf,
    app: Router,
    ids: Vec<DocId>,
}

fn fixture() -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let mut store = Store::open(dir.path().join("store")).unwrap();
    let ids = TEXTS
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let url = format!("http://doc{i:02}.fixture.onion/");
            let raw = RawDocument::new(&url, t.as_bytes().to_vec(), Source::SeedCrawl, 1_719_792_000, t.to_string()).unwrap();
            store.put_document(&raw).unwrap()
        })
        .collect();
    let reports = dir.path().join("run");
    std::fs::create_dir_all(&reports).unwrap();
    let ui = dir.path().join("ui");
    std::fs::create_dir_all(&ui).unwrap();
    std::fs::write(ui.join("index.html"), "<!doctype html><title>triage</title>").unwrap();
    let hp = Hyperparams { epochs: 200, ..Hyperparams::default() };
    let state = AppState::new(
        Triage::new(store, KeywordLexicon::bundled()),
        &reports,
        hp,
        Arc::new(VirtualClock::starting_at(1_719_792_000_000)),
    );
    Fixture {
        app: router(state, Some(&ui)),
        reports,
        ids,
        _dir: dir,
    }
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let mut req = Request::builder().method(method).uri(uri).header("x-analyst", "tester");
    let body = match body {
        Some(v) => {
            req = req.header("content-type", "application/json");
            Body::from(v.to_string())
        }
        None => Body::empty(),
    };
    let resp = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap_or(Value::Null) };
    (status, value)
}

async fn label(app: &Router, id: &DocId, label: &str) -> (StatusCode, Value) {
    call(app, "POST", "/api/label", Some(json!({"doc_id": id, "label": label}))).await
}

fn queue_ids(body: &Value) -> Vec<String> {
    body["items"].as_array().unwrap().iter().map(|i| i["doc_id"].as_str().unwrap().to_owned()).collect()
}

#[tokio::test]
async fn triage_loop_end_to_end() {
    let f = fixture();
    let (status, body) = call(&f.app, "GET", "/api/queue", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, json!({"items": [], "model_version": null}));

    for id in &f.ids[..3] {
        assert_eq!(label(&f.app, id, "relevant").await.0, StatusCode::OK);
    }
    let (status, body) = call(&f.app, "POST", "/api/retrain", None).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["error"], "degenerate-labels");

    for id in &f.ids[5..8] {
        assert_eq!(label(&f.app, id, "irrelevant").await.0, StatusCode::OK);
    }
    let (status, body) = call(&f.app, "POST", "/api/retrain", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, json!({"model_version": 1, "train_size": 6}));

    let (_, q) = call(&f.app, "GET", "/api/queue?limit=10", None).await;
    assert_eq!(q["model_version"], 1);
    let items = q["items"].as_array().unwrap();
    assert_eq!(items.len(), 4);
    assert!(items.iter().all(|i| i["score_model_version"] == 1));
    let scores: Vec<f64> = items.iter().map(|i| i["score"].as_f64().unwrap()).collect();
    assert!(scores.windows(2).all(|w| w[0] >= w[1]));
    let labeled: Vec<String> = f.ids[..3].iter().chain(&f.ids[5..8]).map(|d| d.as_str().to_owned()).collect();
    assert!(queue_ids(&q).iter().all(|id| !labeled.contains(id)));
    let threat = items.iter().position(|i| i["doc_id"] == f.ids[4].as_str()).unwrap();
    let benign = items.iter().position(|i| i["doc_id"] == f.ids[8].as_str()).unwrap();
    assert!(threat < benign, "threat doc should outrank benign doc");

    let (_, top) = call(&f.app, "GET", "/api/queue?limit=1", None).await;
    assert_eq!(queue_ids(&top), queue_ids(&q)[..1]);

    // labelling is reflected in the very next read
    let first = DocId::from(queue_ids(&q)[0].clone());
    label(&f.app, &first, "relevant").await;
    let (_, after) = call(&f.app, "GET", "/api/queue", None).await;
    assert!(!queue_ids(&after).contains(&first.as_str().to_owned()));

    let (_, second) = call(&f.app, "POST", "/api/retrain", None).await;
    assert_eq!(second, json!({"model_version": 2, "train_size": 7}));
    let (_, third) = call(&f.app, "POST", "/api/retrain", None).await;
    assert_eq!(third["model_version"], 3);
    let (_, q3) = call(&f.app, "GET", "/api/queue", None).await;
    assert!(q3["items"].as_array().unwrap().iter().all(|i| i["score_model_version"] == 3));
}

#[tokio::test]
async fn retrain_without_new_labels_repeats_weights() {
    let f = fixture();
    label(&f.app, &f.ids[0], "relevant").await;
    label(&f.app, &f.ids[9], "irrelevant").await;
    call(&f.app, "POST", "/api/retrain", None).await;
    let (_, a) = call(&f.app, "GET", "/api/queue", None).await;
    call(&f.app, "POST", "/api/retrain", None).await;
    let (_, b) = call(&f.app, "GET", "/api/queue", None).await;
    let scores = |v: &Value| v["items"].as_array().unwrap().iter().map(|i| i["score"].clone()).collect::<Vec<_>>();
    assert_eq!(scores(&a), scores(&b));
    assert_eq!(b["model_version"], 2);
}

#[tokio::test]
async fn label_errors_and_idempotence() {
    let f = fixture();
    let (status, body) = label(&f.app, &DocId::from("f".repeat(64)), "relevant").await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["error"], "unknown-doc");
    assert!(body["message"].is_string());

    let (status, body) = call(&f.app, "POST", "/api/label", Some(json!({"doc_id": f.ids[0], "label": "maybe"}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["error"], "bad-request");

    let (status, ack) = label(&f.app, &f.ids[0], "relevant").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(ack["analyst"], "tester");
    assert_eq!(label(&f.app, &f.ids[0], "relevant").await, (status, ack));
}

#[tokio::test]
async fn document_lookup() {
    let f = fixture();
    let (status, body) = call(&f.app, "GET", &format!("/api/doc/{}", f.ids[1].as_str()), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["document"]["url"], "http://doc01.fixture.onion/");
    assert_eq!(body["keyword_tags"]["iot-exploit"], 2);
    assert_eq!(body["label"], Value::Null);

    let (status, body) = call(&f.app, "GET", "/api/doc/nope", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["error"], "unknown-doc");

    let (status, body) = call(&f.app, "GET", "/api/nothing", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["error"], "not-found");
}

#[tokio::test]
async fn reports_track_computed_stages() {
    let f = fixture();
    let (status, body) = call(&f.app, "GET", "/api/reports", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["error"], "not-computed");

    let stats = json!([{"forum": "HackerWeb", "total_posts": 1000, "matching_posts": 33, "share": 0.033}]);
    std::fs::write(f.reports.join("forum_stats.json"), stats.to_string()).unwrap();
    let (status, body) = call(&f.app, "GET", "/api/reports", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["forum_stats"], stats);
    assert_eq!(body["risk_reports"], Value::Null);
    assert_eq!(body["not_computed"], json!(["cluster_report", "exposure_summary", "risk_reports"]));

    for file in ["clusters.json", "exposure.json", "risk.json"] {
        std::fs::write(f.reports.join(file), "{}").unwrap();
    }
    let (_, body) = call(&f.app, "GET", "/api/reports", None).await;
    assert_eq!(body["not_computed"], json!([]));
}

#[tokio::test]
async fn ui_assets_are_served() {
    let f = fixture();
    let req = Request::builder().uri("/ui/index.html").body(Body::empty()).unwrap();
    let resp = f.app.clone().oneshot(req).await.unwrap();
    assert_eq!(resp.status(), StatusCode::OK);
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    assert!(bytes.starts_with(b"<!doctype html>"));
}

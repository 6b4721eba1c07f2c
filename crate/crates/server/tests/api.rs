use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use braglab_core::annotation::{AnnotationStore, StoreOptions};
use braglab_core::corpus::{Post, Source};
use braglab_server::router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

fn posts(n: usize) -> Vec<Post> {
    (0..n).map(|i| Post::new(format!("p{i}"), format!("post number {i}"), Source::Random)).collect()
}

fn app(n: usize) -> (Router, Arc<AnnotationStore>) {
    let store = Arc::new(AnnotationStore::in_memory(posts(n), StoreOptions::default()).unwrap());
    (router(store.clone(), None), store)
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Vec<u8>) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req.header("content-type", "application/json").body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    (status, res.into_body().collect().await.unwrap().to_bytes().to_vec())
}

fn record(post: &str, who: &str, label: &str, round: u32) -> Value {
    json!({"post_id": post, "annotator_id": who, "label": label, "round": round, "submitted_at": "2021-05-01T12:00:00Z"})
}

async fn register(app: &Router, who: &str) {
    let (s, _) = call(app, "POST", "/api/annotators", Some(json!({"id": who}))).await;
    assert_eq!(s, StatusCode::CREATED);
}

#[tokio::test]
async fn next_task_flow() {
    let (app, _) = app(2);
    let (s, _) = call(&app, "GET", "/api/tasks/next?annotator=a", None).await;
    assert_eq!(s, StatusCode::FORBIDDEN);
    register(&app, "a").await;
    let (s, _) = call(&app, "POST", "/api/annotators", Some(json!({"id": "a"}))).await;
    assert_eq!(s, StatusCode::OK);
    let (s, body) = call(&app, "GET", "/api/tasks/next?annotator=a", None).await;
    assert_eq!(s, StatusCode::OK);
    let post: Value = serde_json::from_slice(&body).unwrap();
    assert_eq!(post["id"], "p0");

    for p in ["p0", "p1"] {
        let (s, _) = call(&app, "POST", "/api/labels", Some(record(p, "a", "ACHIEVEMENT", 1))).await;
        assert_eq!(s, StatusCode::CREATED);
    }
    let (s, _) = call(&app, "GET", "/api/tasks/next?annotator=a", None).await;
    assert_eq!(s, StatusCode::NO_CONTENT);
    let (s, _) = call(&app, "GET", "/api/tasks/next", None).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn annotator_header_is_accepted() {
    let (app, _) = app(1);
    register(&app, "h").await;
    let req = Request::get("/api/tasks/next").header("x-annotator-id", "h").body(Body::empty()).unwrap();
    assert_eq!(app.clone().oneshot(req).await.unwrap().status(), StatusCode::OK);
}

#[tokio::test]
async fn submission_errors() {
    let (app, _) = app(1);
    register(&app, "a").await;
    let (s, _) = call(&app, "POST", "/api/labels", Some(record("p0", "a", "FEELING", 1))).await;
    assert_eq!(s, StatusCode::CREATED);
    let (s, _) = call(&app, "POST", "/api/labels", Some(record("p0", "a", "FEELING", 1))).await;
    assert_eq!(s, StatusCode::CONFLICT);
    let (s, _) = call(&app, "POST", "/api/labels", Some(record("nope", "a", "FEELING", 1))).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    let (s, _) = call(&app, "POST", "/api/labels", Some(record("p0", "a", "HUMBLEBRAG", 2))).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    let (s, _) = call(&app, "POST", "/api/labels", Some(record("p0", "zed", "FEELING", 1))).await;
    assert_eq!(s, StatusCode::FORBIDDEN);
}

#[tokio::test]
async fn stored_records_read_back_identically() {
    let (app, store) = app(1);
    register(&app, "a").await;
    let rec = record("p0", "a", "NOT_AVAILABLE", 1);
    let (s, body) = call(&app, "POST", "/api/labels", Some(rec.clone())).await;
    assert_eq!(s, StatusCode::CREATED);
    assert_eq!(serde_json::from_slice::<Value>(&body).unwrap(), rec);
    let (_, body) = call(&app, "GET", "/api/labels?post_id=p0", None).await;
    assert_eq!(serde_json::from_slice::<Value>(&body).unwrap(), json!([rec]));
    assert_eq!(store.records().len(), 1);
}

#[tokio::test]
async fn agreement_and_aggregation_endpoints() {
    let (app, store) = app(4);
    for who in ["a", "b"] {
        store.register_annotator(who).unwrap();
    }
    for (i, (x, y)) in [("ACHIEVEMENT", "ACHIEVEMENT"), ("ACTION", "ACTION"), ("TRAIT", "TRAIT"), ("NOT_BRAGGING", "FEELING")]
        .into_iter()
        .enumerate()
    {
        let p = format!("p{i}");
        call(&app, "POST", "/api/labels", Some(record(&p, "a", x, 1))).await;
        call(&app, "POST", "/api/labels", Some(record(&p, "b", y, 1))).await;
    }
    let (s, body) = call(&app, "GET", "/api/stats/agreement", None).await;
    assert_eq!(s, StatusCode::OK);
    let rep: Value = serde_json::from_slice(&body).unwrap();
    assert_eq!(rep["percent_agreement"], json!(75.0));
    assert_eq!(rep["n_items"], json!(4));

    let (_, body) = call(&app, "GET", "/api/adjudication", None).await;
    let adj: Vec<Value> = serde_json::from_slice(&body).unwrap();
    assert_eq!(adj.len(), 1);
    assert_eq!(adj[0]["post_id"], "p3");

    let (_, body) = call(&app, "GET", "/api/labels/aggregated", None).await;
    let agg: Vec<Value> = serde_json::from_slice(&body).unwrap();
    assert_eq!(agg.len(), 4);
    let (_, body) = call(&app, "GET", "/api/stats/labels", None).await;
    let st: Value = serde_json::from_slice(&body).unwrap();
    assert_eq!(st["adjudication_queue"], json!(1));
}

#[tokio::test]
async fn guidelines_and_ui_are_served() {
    let (app, _) = app(1);
    let (s, body) = call(&app, "GET", "/api/guidelines", None).await;
    assert_eq!(s, StatusCode::OK);
    let text = String::from_utf8(body).unwrap();
    assert!(text.contains("Achievement") && text.contains("Not available"));
    let (s, body) = call(&app, "GET", "/ui/", None).await;
    assert_eq!(s, StatusCode::OK);
    assert!(String::from_utf8(body).unwrap().contains("app.js"));
    let (s, _) = call(&app, "GET", "/ui/app.js", None).await;
    assert_eq!(s, StatusCode::OK);
    let (s, _) = call(&app, "GET", "/ui/../Cargo.toml", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn ui_directory_override() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("index.html"), "<p>custom</p>").unwrap();
    let store = Arc::new(AnnotationStore::in_memory(posts(1), StoreOptions::default()).unwrap());
    let app = router(store, Some(dir.path().to_path_buf()));
    let (s, body) = call(&app, "GET", "/ui/", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(body, b"<p>custom</p>");
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_submissions_are_all_stored_once() {
    let dir = tempfile::tempdir().unwrap();
    let store = Arc::new(AnnotationStore::open(posts(20), dir.path(), StoreOptions::default()).unwrap());
    let app = router(store.clone(), None);
    for w in 0..4 {
        store.register_annotator(&format!("w{w}")).unwrap();
    }
    let mut handles = Vec::new();
    for w in 0..4 {
        for p in 0..20 {
            let app = app.clone();
            handles.push(tokio::spawn(async move {
                // Every record is sent twice; exactly one copy may be stored.
                let rec = record(&format!("p{p}"), &format!("w{w}"), "ACTION", 1);
                let a = call(&app, "POST", "/api/labels", Some(rec.clone())).await.0;
                let b = call(&app, "POST", "/api/labels", Some(rec)).await.0;
                (a, b)
            }));
        }
    }
    for h in handles {
        let (a, b) = h.await.unwrap();
        assert_eq!((a, b), (StatusCode::CREATED, StatusCode::CONFLICT));
    }
    assert_eq!(store.records().len(), 80);
    let reopened = AnnotationStore::open(posts(20), dir.path(), StoreOptions::default()).unwrap();
    assert_eq!(reopened.records().len(), 80);
}

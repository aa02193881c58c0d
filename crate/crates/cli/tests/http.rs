use std::sync::Arc;

use axum::body::{to_bytes, Body};
use axum::http::{header, Method, Request, StatusCode};
use axum::Router;
use ewqbaf_cli::server::{router, AppState};
use ewqbaf_cli::store::Store;
use serde_json::{json, Value};
use tower::ServiceExt;

const MOVIE: &[u8] = include_bytes!("../../core/fixtures/movie.json");

fn app() -> Router {
    router(Arc::new(AppState { store: Store::in_memory() }), None)
}

async fn send(app: &Router, method: Method, uri: &str, body: Vec<u8>, accept: Option<&str>) -> (StatusCode, String) {
    let mut req = Request::builder().method(method).uri(uri).header(header::CONTENT_TYPE, "application/json");
    if let Some(a) = accept {
        req = req.header(header::ACCEPT, a);
    }
    let resp = app.clone().oneshot(req.body(Body::from(body)).unwrap()).await.unwrap();
    let status = resp.status();
    let bytes = to_bytes(resp.into_body(), usize::MAX).await.unwrap();
    (status, String::from_utf8(bytes.to_vec()).unwrap())
}

async fn get(app: &Router, uri: &str) -> (StatusCode, Value) {
    let (status, body) = send(app, Method::GET, uri, Vec::new(), None).await;
    (status, serde_json::from_str(&body).unwrap())
}

async fn create(app: &Router, doc: &[u8]) -> String {
    let (status, body) = send(app, Method::POST, "/qbafs", doc.to_vec(), None).await;
    assert_eq!(status, StatusCode::CREATED, "{body}");
    let v: Value = serde_json::from_str(&body).unwrap();
    v["id"].as_str().unwrap().to_string()
}

fn cyclic() -> Vec<u8> {
    serde_json::to_vec(&json!({
        "arguments": [{"id": "a", "base_score": 0.5}, {"id": "b", "base_score": 0.5}],
        "edges": [
            {"source": "a", "target": "b", "polarity": "attack", "weight": 0.5},
            {"source": "b", "target": "a", "polarity": "support", "weight": 0.5}
        ]
    }))
    .unwrap()
}

#[tokio::test]
async fn create_and_fetch() {
    let app = app();
    let id = create(&app, MOVIE).await;
    let (status, v) = get(&app, &format!("/qbafs/{id}")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["id"], id.as_str());
    assert_eq!(v["qbaf"]["arguments"].as_array().unwrap().len(), 8);
    assert_eq!(v["qbaf"]["edges"].as_array().unwrap().len(), 7);
}

#[tokio::test]
async fn rejects_bad_documents() {
    let app = app();
    let (status, body) = send(&app, Method::POST, "/qbafs", b"{not json".to_vec(), None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(serde_json::from_str::<Value>(&body).unwrap()["error"].is_string());

    let bad = json!({"arguments": [{"id": "a", "base_score": 2.0}], "edges": []});
    let (status, body) = send(&app, Method::POST, "/qbafs", serde_json::to_vec(&bad).unwrap(), None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let v: Value = serde_json::from_str(&body).unwrap();
    assert_eq!(v["violations"].as_array().unwrap().len(), 1);
}

#[tokio::test]
async fn strengths_default_to_mlp() {
    let app = app();
    let id = create(&app, MOVIE).await;
    let (status, v) = get(&app, &format!("/qbafs/{id}/strengths")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["semantics"], "mlp");
    let movie = v["strengths"].as_array().unwrap().iter().find(|e| e["id"] == "Movie").unwrap();
    assert!((movie["strength"].as_f64().unwrap() - 0.827).abs() <= 1e-3);

    let (status, _) = get(&app, &format!("/qbafs/{id}/strengths?semantics=nope")).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn graes_are_ranked() {
    let app = app();
    let id = create(&app, MOVIE).await;
    for exact in ["false", "true"] {
        let (status, v) = get(&app, &format!("/qbafs/{id}/graes?topic=Movie&exact={exact}")).await;
        assert_eq!(status, StatusCode::OK);
        let first = &v["graes"][0];
        assert_eq!((first["source"].as_str(), first["target"].as_str()), (Some("Acting"), Some("Movie")));
        assert_eq!(v["graes"].as_array().unwrap().len(), 7);
    }
    let (status, _) = get(&app, &format!("/qbafs/{id}/graes?topic=Nobody")).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = get(&app, &format!("/qbafs/{id}/graes")).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn unknown_handle_is_404() {
    let app = app();
    for uri in ["/qbafs/missing", "/qbafs/missing/strengths", "/qbafs/missing/attainability?topic=a"] {
        let (status, v) = get(&app, uri).await;
        assert_eq!(status, StatusCode::NOT_FOUND, "{uri}");
        assert!(v["error"].is_string());
    }
}

#[tokio::test]
async fn cyclic_graphs_conflict() {
    let app = app();
    let id = create(&app, &cyclic()).await;
    let (status, v) = get(&app, &format!("/qbafs/{id}/strengths")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["strengths"].as_array().unwrap().len(), 2);
    let (status, _) = get(&app, &format!("/qbafs/{id}/graes?topic=a")).await;
    assert_eq!(status, StatusCode::CONFLICT);
    let body = serde_json::to_vec(&json!({"topic": "a", "desired_strength": 0.5})).unwrap();
    let (status, _) = send(&app, Method::POST, &format!("/qbafs/{id}/contest"), body, None).await;
    assert_eq!(status, StatusCode::CONFLICT);
}

#[tokio::test]
async fn attainability_interval() {
    let app = app();
    let id = create(&app, MOVIE).await;
    let (status, v) = get(&app, &format!("/qbafs/{id}/attainability?topic=Movie")).await;
    assert_eq!(status, StatusCode::OK);
    let (min, max) = (v["min"].as_f64().unwrap(), v["max"].as_f64().unwrap());
    assert!(min < 0.827 && 0.827 < max);
}

#[tokio::test]
async fn contest_solves_and_rejects() {
    let app = app();
    let id = create(&app, MOVIE).await;
    let uri = format!("/qbafs/{id}/contest");

    let body = serde_json::to_vec(&json!({"topic": "Movie", "desired_strength": 0.8})).unwrap();
    let (status, text) = send(&app, Method::POST, &uri, body, None).await;
    assert_eq!(status, StatusCode::OK, "{text}");
    let v: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["status"], "solved");
    assert!((v["final_strength"].as_f64().unwrap() - 0.8).abs() <= 0.01);

    let body = serde_json::to_vec(&json!({"topic": "Movie", "desired_strength": 0.3})).unwrap();
    let (status, text) = send(&app, Method::POST, &uri, body, None).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let v: Value = serde_json::from_str(&text).unwrap();
    assert!(v["interval"]["min"].as_f64().unwrap() > 0.3);
    assert!(v["interval"]["max"].is_number());

    for bad in [
        json!({"topic": "Movie", "desired_strength": 1.5}),
        json!({"topic": "Movie", "desired_strength": 0.8, "max_iterations": 1_000_000}),
        json!({"topic": "Movie"}),
    ] {
        let (status, _) = send(&app, Method::POST, &uri, serde_json::to_vec(&bad).unwrap(), None).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{bad}");
    }
    let body = serde_json::to_vec(&json!({"topic": "Nobody", "desired_strength": 0.5})).unwrap();
    let (status, _) = send(&app, Method::POST, &uri, body, None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn weights_update_partially() {
    let app = app();
    let id = create(&app, MOVIE).await;
    let uri = format!("/qbafs/{id}/weights");
    let body = serde_json::to_vec(&json!({"weights": [{"source": "Acting", "target": "Movie", "weight": 0.1}]})).unwrap();
    let (status, text) = send(&app, Method::PUT, &uri, body, None).await;
    assert_eq!(status, StatusCode::OK, "{text}");

    let (_, v) = get(&app, &format!("/qbafs/{id}")).await;
    let edges = v["qbaf"]["edges"].as_array().unwrap();
    let weight = |s: &str, t: &str| edges.iter().find(|e| e["source"] == s && e["target"] == t).unwrap()["weight"].as_f64();
    assert_eq!(weight("Acting", "Movie"), Some(0.1));
    assert_eq!(weight("Themes", "Movie"), Some(0.7));

    let (_, after) = get(&app, &format!("/qbafs/{id}/strengths")).await;
    let movie = after["strengths"].as_array().unwrap().iter().find(|e| e["id"] == "Movie").unwrap()["strength"]
        .as_f64()
        .unwrap();
    assert!(movie < 0.827);

    let body = serde_json::to_vec(&json!({"weights": [{"source": "Movie", "target": "Acting", "weight": 0.1}]})).unwrap();
    assert_eq!(send(&app, Method::PUT, &uri, body, None).await.0, StatusCode::NOT_FOUND);
    let body = serde_json::to_vec(&json!({"weights": [{"source": "Acting", "target": "Movie", "weight": 1.1}]})).unwrap();
    assert_eq!(send(&app, Method::PUT, &uri, body, None).await.0, StatusCode::BAD_REQUEST);
}

fn parse_sse(text: &str) -> Vec<(String, Value)> {
    text.split("\n\n")
        .filter_map(|block| {
            let mut event = None;
            let mut data = String::new();
            for line in block.lines() {
                if let Some(e) = line.strip_prefix("event: ") {
                    event = Some(e.to_string());
                } else if let Some(d) = line.strip_prefix("data: ") {
                    data.push_str(d);
                }
            }
            Some((event?, serde_json::from_str(&data).unwrap()))
        })
        .collect()
}

#[tokio::test]
async fn contest_streams_progress_then_outcome() {
    let app = app();
    let id = create(&app, MOVIE).await;
    let uri = format!("/qbafs/{id}/contest?semantics=mlp");
    let body = serde_json::to_vec(&json!({"topic": "Movie", "desired_strength": 0.79, "error_threshold": 0.001})).unwrap();
    let (status, text) = send(&app, Method::POST, &uri, body, Some("text/event-stream")).await;
    assert_eq!(status, StatusCode::OK);
    let events = parse_sse(&text);
    let (last, rest) = events.split_last().unwrap();
    assert_eq!(last.0, "outcome");
    assert_eq!(last.1["status"], "solved");
    assert!(!rest.is_empty());
    let mut previous = (0, 0);
    for (name, data) in rest {
        assert_eq!(name, "progress");
        let key = (data["attempt"].as_u64().unwrap(), data["iteration"].as_u64().unwrap());
        assert!(key > previous, "{key:?} after {previous:?}");
        previous = key;
        assert!((0.0..=1.0).contains(&data["strength"].as_f64().unwrap()));
    }
    assert_eq!(last.1["iterations_used"].as_u64(), Some(previous.1));
}

#[tokio::test]
async fn streamed_unattainable_is_422() {
    let app = app();
    let id = create(&app, MOVIE).await;
    let body = serde_json::to_vec(&json!({"topic": "Movie", "desired_strength": 0.3})).unwrap();
    let (status, text) =
        send(&app, Method::POST, &format!("/qbafs/{id}/contest"), body, Some("text/event-stream")).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert!(serde_json::from_str::<Value>(&text).unwrap()["interval"].is_object());
}

#[tokio::test]
async fn store_survives_restart() {
    let dir = tempfile::tempdir().unwrap();
    let first = router(Arc::new(AppState { store: Store::open(dir.path()).unwrap() }), None);
    let id = create(&first, MOVIE).await;
    let body = serde_json::to_vec(&json!({"weights": [{"source": "Writing", "target": "Movie", "weight": 0.25}]})).unwrap();
    assert_eq!(send(&first, Method::PUT, &format!("/qbafs/{id}/weights"), body, None).await.0, StatusCode::OK);
    drop(first);

    let store = Store::open(dir.path()).unwrap();
    assert_eq!(store.len(), 1);
    let second = router(Arc::new(AppState { store }), None);
    let (status, v) = get(&second, &format!("/qbafs/{id}")).await;
    assert_eq!(status, StatusCode::OK);
    let edges = v["qbaf"]["edges"].as_array().unwrap();
    let writing = edges.iter().find(|e| e["source"] == "Writing").unwrap();
    assert_eq!(writing["weight"].as_f64(), Some(0.25));
}

#[tokio::test]
async fn serves_ui_files() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("index.html"), "<html></html>").unwrap();
    let app = router(Arc::new(AppState { store: Store::in_memory() }), Some(dir.path().to_path_buf()));
    let (status, body) = send(&app, Method::GET, "/index.html", Vec::new(), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, "<html></html>");
}

use std::fs;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{header, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;

use nestgraph_core::decomposition::FixtureBackend;
use nestgraph_core::review::{EntityRank, Neighborhood};
use nestgraph_core::timeline::Timeline;
use nestgraph_service::http::{router, AppState};
use nestgraph_service::{IngestConfig, Store};

const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/climate");

fn app(dir: &std::path::Path) -> Router {
    let backend = Arc::new(FixtureBackend::from_dir(FIXTURES).unwrap());
    router(AppState::new(Store::open(dir).unwrap(), backend, IngestConfig::default()))
}

fn passage() -> String {
    fs::read_to_string(format!("{FIXTURES}/passage.txt")).unwrap()
}

async fn call(app: &Router, method: &str, uri: &str, body: String) -> (StatusCode, String, Vec<u8>) {
    let request = Request::builder().method(method).uri(uri).body(Body::from(body)).unwrap();
    let response = app.clone().oneshot(request).await.unwrap();
    let status = response.status();
    let kind = response
        .headers()
        .get(header::CONTENT_TYPE)
        .map(|v| v.to_str().unwrap().to_string())
        .unwrap_or_default();
    let bytes = response.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, kind, bytes)
}

async fn get(app: &Router, uri: &str) -> (StatusCode, String, Vec<u8>) {
    call(app, "GET", uri, String::new()).await
}

async fn create(app: &Router, text: &str) -> (StatusCode, Value) {
    let (status, _, body) = call(app, "POST", "/documents", text.to_string()).await;
    (status, serde_json::from_slice(&body).unwrap())
}

#[tokio::test]
async fn post_then_read_everything() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let (status, created) = create(&app, &passage()).await;
    assert_eq!(status, StatusCode::CREATED);
    let id = created["id"].as_str().unwrap().to_string();
    assert_eq!(created["sentences"], 4);

    let (status, _, body) = get(&app, &format!("/documents/{id}/timeline")).await;
    assert_eq!(status, StatusCode::OK);
    let timeline: Timeline = serde_json::from_slice(&body).unwrap();
    assert_eq!(timeline.blocks.len(), 4);

    let (status, _, body) = get(&app, &format!("/documents/{id}")).await;
    assert_eq!(status, StatusCode::OK);
    let bundle: Value = serde_json::from_slice(&body).unwrap();
    assert_eq!(bundle["id"], id.as_str());
    assert_eq!(bundle["document"]["sentences"].as_array().unwrap().len(), 4);

    let (_, _, body) = get(&app, &format!("/documents/{id}/entities")).await;
    let ranks: Vec<EntityRank> = serde_json::from_slice(&body).unwrap();
    assert!(!ranks.is_empty());
    assert!(ranks.windows(2).all(|w| w[0].score >= w[1].score));

    let (status, kind, body) = get(&app, &format!("/documents/{id}/svg?prefix=2")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(kind, "image/svg+xml");
    assert!(String::from_utf8(body).unwrap().starts_with("<svg"));
    let (status, _, _) = get(&app, &format!("/documents/{id}/svg")).await;
    assert_eq!(status, StatusCode::OK);
    let (status, _, body) = get(&app, &format!("/documents/{id}/svg?prefix=9")).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let err: Value = serde_json::from_slice(&body).unwrap();
    assert!(err["error"].as_str().unwrap().contains("out of range"));
}

#[tokio::test]
async fn hover_queries_agree() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let (_, created) = create(&app, &passage()).await;
    let id = created["id"].as_str().unwrap();

    // "Carbon dioxide" opens the second sentence.
    let (status, _, body) = get(&app, &format!("/documents/{id}/span?sentence=s0001&offset=3")).await;
    assert_eq!(status, StatusCode::OK);
    let hit: Value = serde_json::from_slice(&body).unwrap();
    let node = hit["node_id"].as_str().unwrap().to_string();
    let (_, _, same) = get(&app, &format!("/documents/{id}/span?sentence=1&offset=3")).await;
    assert_eq!(body, same);

    let (status, _, body) = get(&app, &format!("/documents/{id}/neighborhood/{node}")).await;
    assert_eq!(status, StatusCode::OK);
    let hood: Neighborhood = serde_json::from_slice(&body).unwrap();
    assert_eq!(hood.nodes[0].as_str(), node);
    // Linked to buildup, air, heat and the oceans; mentioned in two sentences.
    assert_eq!(hood.nodes.len(), 5);
    let sentences: Vec<&str> = hood
        .spans
        .iter()
        .filter(|s| s.node_id.as_str() == node)
        .map(|s| s.span.sentence_id.as_str())
        .collect();
    assert_eq!(sentences, vec!["s0000", "s0001"]);

    let (_, _, body) = get(&app, &format!("/documents/{id}/span?sentence=s0001&offset=200")).await;
    assert_eq!(serde_json::from_slice::<Value>(&body).unwrap()["node_id"], Value::Null);
}

#[tokio::test]
async fn unknown_things_are_404_with_a_body() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    for uri in [
        "/documents/ffffffffffffffff",
        "/documents/ffffffffffffffff/timeline",
        "/documents/ffffffffffffffff/entities",
        "/documents/ffffffffffffffff/svg?prefix=0",
        "/documents/ffffffffffffffff/neighborhood/n00000",
        "/documents/..%2F..%2Fetc/timeline",
    ] {
        let (status, kind, body) = get(&app, uri).await;
        assert_eq!(status, StatusCode::NOT_FOUND, "{uri}");
        assert_eq!(kind, "application/json", "{uri}");
        let err: Value = serde_json::from_slice(&body).unwrap();
        assert!(err["error"].is_string());
    }
    let (_, created) = create(&app, &passage()).await;
    let id = created["id"].as_str().unwrap();
    let (status, _, _) = get(&app, &format!("/documents/{id}/neighborhood/n99999")).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _, _) = get(&app, &format!("/documents/{id}/span?sentence=s0042&offset=0")).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn bad_input_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let (status, body) = create(&app, "   ").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(body["error"].as_str().unwrap().contains("empty"));
    // No fixture for this sentence.
    let (status, body) = create(&app, "Volcanoes cool the planet.").await;
    assert_eq!(status, StatusCode::BAD_GATEWAY);
    assert!(body["error"].as_str().unwrap().starts_with("sentence 0"));
}

#[tokio::test]
async fn reposting_returns_the_stored_document() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let posts = (0..4).map(|_| {
        let app = app.clone();
        tokio::spawn(async move { create(&app, &passage()).await })
    });
    let mut statuses = Vec::new();
    let mut ids = Vec::new();
    for p in posts {
        let (status, body) = p.await.unwrap();
        statuses.push(status);
        ids.push(body["id"].as_str().unwrap().to_string());
    }
    statuses.sort();
    assert_eq!(statuses, vec![StatusCode::OK, StatusCode::OK, StatusCode::OK, StatusCode::CREATED]);
    assert!(ids.windows(2).all(|w| w[0] == w[1]));
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);

    // A fresh server over the same directory serves the stored bundle.
    let again = self::app(dir.path());
    let (status, _, _) = get(&again, &format!("/documents/{}/timeline", ids[0])).await;
    assert_eq!(status, StatusCode::OK);
}

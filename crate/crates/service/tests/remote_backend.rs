use std::collections::HashMap;
use std::fs;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::State;
use axum::http::{HeaderMap, StatusCode};
use axum::routing::post;
use axum::Router;

use nestgraph_core::decomposition::{BackendError, BackendRequest, ExtractionBackend, FixtureBackend, FixtureEntry};
use nestgraph_service::remote::RemoteBackend;
use nestgraph_service::{ingest, IngestConfig};

const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/climate");

#[derive(Default)]
struct Model {
    answers: HashMap<String, String>,
    seen_auth: Mutex<Vec<String>>,
}

async fn answer(State(model): State<Arc<Model>>, headers: HeaderMap, prompt: String) -> (StatusCode, String) {
    let auth = headers
        .get("authorization")
        .map(|v| v.to_str().unwrap().to_string())
        .unwrap_or_default();
    model.seen_auth.lock().unwrap().push(auth);
    match model.answers.get(&prompt) {
        Some(json) => (StatusCode::OK, format!("Here you go:\n{json}\n")),
        None => (StatusCode::NOT_FOUND, "unknown prompt".into()),
    }
}

/// Serves recorded answers keyed by the full prompt text.
fn spawn_model(model: Arc<Model>) -> SocketAddr {
    let (tx, rx) = std::sync::mpsc::channel();
    std::thread::spawn(move || {
        let runtime = tokio::runtime::Runtime::new().unwrap();
        runtime.block_on(async move {
            let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
            tx.send(listener.local_addr().unwrap()).unwrap();
            let app = Router::new().route("/v1/complete", post(answer)).with_state(model);
            axum::serve(listener, app).await.unwrap();
        });
    });
    rx.recv().unwrap()
}

fn recorded_model() -> Model {
    let mut answers = HashMap::new();
    for name in ["extract", "correct", "refine"] {
        let json = fs::read_to_string(format!("{FIXTURES}/{name}.json")).unwrap();
        for entry in serde_json::from_str::<Vec<FixtureEntry>>(&json).unwrap() {
            let prompt = entry.request().render_prompt().unwrap();
            answers.insert(prompt, serde_json::to_string(&entry.response).unwrap());
        }
    }
    Model {
        answers,
        ..Model::default()
    }
}

#[test]
fn remote_ingest_matches_fixture_replay() {
    let model = Arc::new(recorded_model());
    let addr = spawn_model(model.clone());
    let remote = RemoteBackend::new(
        format!("http://{addr}/v1/complete"),
        Some("secret".into()),
        Duration::from_secs(10),
    );
    assert_eq!(remote.mode_name(), "remote");
    let text = fs::read_to_string(format!("{FIXTURES}/passage.txt")).unwrap();
    let over_http = ingest(&text, &IngestConfig::default(), &remote).unwrap();
    let replayed = ingest(&text, &IngestConfig::default(), &FixtureBackend::from_dir(FIXTURES).unwrap()).unwrap();
    assert_eq!(over_http.document, replayed.document);
    assert_eq!(over_http.timeline, replayed.timeline);
    assert_eq!(over_http.provenance.requests, replayed.provenance.requests);
    assert_eq!(over_http.provenance.backend, "remote");
    let auth = model.seen_auth.lock().unwrap();
    assert_eq!(auth.len(), over_http.provenance.requests.len());
    assert!(auth.iter().all(|a| a == "Bearer secret"));
}

#[test]
fn http_errors_and_dead_endpoints_are_unreachable() {
    let addr = spawn_model(Arc::new(Model::default()));
    let remote = RemoteBackend::new(format!("http://{addr}/v1/complete"), None, Duration::from_secs(10));
    let err = remote.complete(&BackendRequest::extract("Anything at all.")).unwrap_err();
    assert!(matches!(err, BackendError::Unreachable(_)), "{err}");

    let closed = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap();
    let remote = RemoteBackend::new(format!("http://{closed}/"), None, Duration::from_secs(2));
    let err = remote.complete(&BackendRequest::extract("Anything at all.")).unwrap_err();
    assert!(matches!(err, BackendError::Unreachable(_)), "{err}");
}

mod common;

use std::collections::HashSet;
use std::sync::Arc;
use std::time::Duration;

use apr_core::service::{AnswerPayload, AppState, Health, SessionCreated, SECRET_HEADER};
use reqwest::StatusCode;
use serde_json::{json, Value};

const TTL: Duration = Duration::from_secs(3600);

async fn stub_api() -> (String, Arc<AppState>) {
    let state = Arc::new(AppState::with_engine(common::stub_engine().await, TTL));
    (common::spawn_api(state.clone()).await, state)
}

async fn new_session(client: &reqwest::Client, base: &str) -> String {
    let created: SessionCreated = client
        .post(format!("{base}/api/sessions"))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    created.session_id
}

async fn chat(client: &reqwest::Client, base: &str, session: &str, message: &str) -> reqwest::Response {
    client
        .post(format!("{base}/api/chat"))
        .json(&json!({ "session_id": session, "message": message }))
        .send()
        .await
        .unwrap()
}

async fn error_code(resp: reqwest::Response) -> String {
    let body: Value = resp.json().await.unwrap();
    body["error"]["code"].as_str().unwrap().to_string()
}

#[tokio::test]
async fn health_reports_chunks_and_stub_providers() {
    let (base, _) = stub_api().await;
    let health: Health = reqwest::get(format!("{base}/api/health")).await.unwrap().json().await.unwrap();
    assert_eq!(health.status, "ok");
    assert_eq!(health.kb_chunks, 30);
    assert!(health.provider_names.iter().any(|n| n == "hashing-stub"));
    assert!(health.provider_names.iter().any(|n| n == "rule-based-stub"));
}

#[tokio::test]
async fn session_ids_are_unique() {
    let (base, _) = stub_api().await;
    let client = reqwest::Client::new();
    let mut ids = HashSet::new();
    for _ in 0..1000 {
        let id = new_session(&client, &base).await;
        assert_eq!(id.len(), 22);
        assert!(ids.insert(id));
    }
}

#[tokio::test]
async fn table_input_answers_with_two_sections_that_resolve() {
    let (base, state) = stub_api().await;
    let client = reqwest::Client::new();
    let session = new_session(&client, &base).await;
    let resp = chat(&client, &base, &session, common::TABLE2_INPUT).await;
    assert_eq!(resp.status(), StatusCode::OK);
    let payload: AnswerPayload = resp.json().await.unwrap();
    assert_eq!(payload.sections.len(), 2);
    assert!(!payload.no_results);

    let kb = common::kb_chunks();
    for p in payload.sections.iter().flat_map(|s| &s.passages) {
        let chunk: apr_core::corpus::Chunk = client
            .get(format!("{base}/api/chunks/{}", p.chunk_id))
            .send()
            .await
            .unwrap()
            .json()
            .await
            .unwrap();
        assert_eq!(chunk.text, p.text);
        assert!(kb.iter().any(|c| c.text == p.text && c.doc_url == p.doc_url));
        assert_eq!(p.score, (p.score * 1e4).round() / 1e4);
    }

    let session = state.sessions().get(&session).await.unwrap();
    assert_eq!(session.lock().await.turns.len(), 2);
}

#[tokio::test]
async fn error_statuses() {
    let (base, _) = stub_api().await;
    let client = reqwest::Client::new();
    let session = new_session(&client, &base).await;

    let resp = chat(&client, &base, &session, "   ").await;
    assert_eq!(resp.status(), StatusCode::BAD_REQUEST);
    assert_eq!(error_code(resp).await, "empty_message");

    let resp = chat(&client, &base, "no-such-session", "hello").await;
    assert_eq!(resp.status(), StatusCode::NOT_FOUND);
    assert_eq!(error_code(resp).await, "unknown_session");

    let resp = client
        .post(format!("{base}/api/chat"))
        .header("content-type", "application/json")
        .body("{not json")
        .send()
        .await
        .unwrap();
    assert_eq!(resp.status(), StatusCode::BAD_REQUEST);

    let resp = client.get(format!("{base}/api/chunks/ffff")).send().await.unwrap();
    assert_eq!(resp.status(), StatusCode::NOT_FOUND);
    assert_eq!(error_code(resp).await, "unknown_chunk");
}

#[tokio::test]
async fn gateway_failure_is_502_without_content() {
    let state = Arc::new(AppState::with_engine(common::failing_engine().await, TTL));
    let base = common::spawn_api(state.clone()).await;
    let client = reqwest::Client::new();
    let session = new_session(&client, &base).await;
    let resp = chat(&client, &base, &session, common::TABLE2_INPUT).await;
    assert_eq!(resp.status(), StatusCode::BAD_GATEWAY);
    let body: Value = resp.json().await.unwrap();
    assert_eq!(body["error"]["code"], "gateway_failure");
    assert!(body.get("sections").is_none());
    let session = state.sessions().get(&session).await.unwrap();
    assert!(session.lock().await.turns.is_empty());
}

#[tokio::test]
async fn not_loaded_is_503_and_health_says_starting() {
    let state = Arc::new(AppState::new(vec!["hashing-stub".into()], TTL, None));
    let base = common::spawn_api(state.clone()).await;
    let client = reqwest::Client::new();
    let health: Health = client.get(format!("{base}/api/health")).send().await.unwrap().json().await.unwrap();
    assert_eq!(health.status, "starting");
    assert_eq!(health.kb_chunks, 0);

    let session = new_session(&client, &base).await;
    let resp = chat(&client, &base, &session, "hello").await;
    assert_eq!(resp.status(), StatusCode::SERVICE_UNAVAILABLE);
    let resp = client.get(format!("{base}/api/chunks/abc")).send().await.unwrap();
    assert_eq!(resp.status(), StatusCode::SERVICE_UNAVAILABLE);

    state.set_engine(common::stub_engine().await);
    let resp = chat(&client, &base, &session, common::TABLE2_INPUT).await;
    assert_eq!(resp.status(), StatusCode::OK);
}

#[tokio::test]
async fn shared_secret_guards_everything_but_health() {
    let state = Arc::new(AppState::new(vec![], TTL, Some("s3cret".into())));
    state.set_engine(common::stub_engine().await);
    let base = common::spawn_api(state).await;
    let client = reqwest::Client::new();
    assert_eq!(
        client.get(format!("{base}/api/health")).send().await.unwrap().status(),
        StatusCode::OK
    );
    let resp = client.post(format!("{base}/api/sessions")).send().await.unwrap();
    assert_eq!(resp.status(), StatusCode::UNAUTHORIZED);
    let resp = client
        .post(format!("{base}/api/sessions"))
        .header(SECRET_HEADER, "s3cret")
        .send()
        .await
        .unwrap();
    assert_eq!(resp.status(), StatusCode::OK);
}

#[tokio::test]
async fn concurrent_sessions_do_not_share_history() {
    let (base, state) = stub_api().await;
    let client = reqwest::Client::new();
    let a = new_session(&client, &base).await;
    let b = new_session(&client, &base).await;

    let run = |session: String, topic: &'static str| {
        let client = client.clone();
        let base = base.clone();
        async move {
            for i in 0..10 {
                let resp = chat(&client, &base, &session, &format!("{topic} question number {i}")).await;
                assert_eq!(resp.status(), StatusCode::OK);
            }
        }
    };
    tokio::join!(run(a.clone(), "airline"), run(b.clone(), "baggage"));

    for (id, own, other) in [(&a, "airline", "baggage"), (&b, "baggage", "airline")] {
        let session = state.sessions().get(id).await.unwrap();
        let session = session.lock().await;
        assert_eq!(session.turns.len(), 20);
        for t in &session.turns {
            assert!(!t.content.contains(other), "{id} leaked: {}", t.content);
        }
        let users: Vec<_> = session.turns.iter().step_by(2).map(|t| t.content.clone()).collect();
        let expected: Vec<_> = (0..10).map(|i| format!("{own} question number {i}")).collect();
        assert_eq!(users, expected);
    }
}

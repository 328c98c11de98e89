// Remote providers against an OpenAI-compatible API. A tiny mock server
// stands in for the real endpoint; it fails the first chat call with a 503
// to show the gateway's retry.
//
// cargo run --example openai_compatible

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use apr_core::embedding::{embed, EmbeddingProvider, HashingEmbedder, OpenAiEmbeddings};
use apr_core::llm::{Gateway, GatewayConfig, OpenAiChat};
use apr_core::retry::RetryPolicy;
use axum::extract::State;
use axum::http::StatusCode;
use axum::routing::post;
use axum::{Json, Router};
use serde_json::{json, Value};

async fn chat(State(calls): State<Arc<AtomicUsize>>, Json(body): Json<Value>) -> (StatusCode, Json<Value>) {
    if calls.fetch_add(1, Ordering::SeqCst) == 0 {
        return (StatusCode::SERVICE_UNAVAILABLE, Json(json!({ "error": { "message": "warming up" } })));
    }
    let prompt = body["messages"][0]["content"].as_str().unwrap_or_default();
    let reply = format!("1. You asked {} characters worth of question?", prompt.len());
    (StatusCode::OK, Json(json!({ "choices": [{ "message": { "role": "assistant", "content": reply } }] })))
}

async fn embeddings(Json(body): Json<Value>) -> Json<Value> {
    let inputs: Vec<String> = serde_json::from_value(body["input"].clone()).unwrap_or_default();
    // hand back in reverse order; clients must sort by index
    let data: Vec<Value> = inputs
        .iter()
        .enumerate()
        .rev()
        .map(|(i, t)| json!({ "index": i, "embedding": HashingEmbedder::vector(t) }))
        .collect();
    Json(json!({ "data": data }))
}

pub async fn run() -> anyhow::Result<()> {
    let calls = Arc::new(AtomicUsize::new(0));
    let app = Router::new()
        .route("/v1/chat/completions", post(chat))
        .route("/v1/embeddings", post(embeddings))
        .with_state(calls.clone());
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await?;
    let base = format!("http://{}/v1", listener.local_addr()?);
    let server = tokio::spawn(async move { axum::serve(listener, app).await });

    let config = GatewayConfig {
        retry: RetryPolicy {
            initial: Duration::from_millis(10),
            ..RetryPolicy::default()
        },
        ..GatewayConfig::default()
    };
    let gateway = Gateway::new(Arc::new(OpenAiChat::new(&base, Some("sk-demo".into()), Duration::from_secs(5))), config);
    let result = gateway.complete_prompt("Where is my suitcase?").await?;
    println!("{} answered after {} calls: {}", result.provider_name, calls.load(Ordering::SeqCst), result.text);

    let embedder = OpenAiEmbeddings::connect(&base, None, "text-embedding-3-small", Duration::from_secs(5)).await?;
    let vectors = embed(&["lost bag".to_string(), "cancelled flight".to_string()], &embedder).await?;
    println!("{} reports {} dimensions; first vector norm {:.3}", embedder.name(), embedder.dim(), vectors[0].norm());
    server.abort();
    Ok(())
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    run().await
}

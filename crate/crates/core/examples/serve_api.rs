// Run the HTTP API in-process and talk to it the way the browser client does.
//
// cargo run --example serve_api

use std::sync::Arc;
use std::time::Duration;

use apr_core::service::{build_engine, router, AnswerPayload, AppState, Health, ServiceConfig};
use serde_json::{json, Value};

pub async fn run() -> anyhow::Result<()> {
    let config = ServiceConfig::new(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/kb.jsonl"));
    config.validate()?;
    let state = Arc::new(AppState::new(config.providers.provider_names(), config.session_ttl, None));

    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await?;
    let base = format!("http://{}", listener.local_addr()?);
    let (stop, stopped) = tokio::sync::oneshot::channel::<()>();
    let app = router(state.clone());
    let server = tokio::spawn(async move {
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = stopped.await;
            })
            .await
    });

    let client = reqwest::Client::new();
    let health: Health = client.get(format!("{base}/api/health")).send().await?.json().await?;
    println!("before loading: {health:?}");
    state.set_engine(build_engine(&config).await?);
    let health: Health = client.get(format!("{base}/api/health")).send().await?.json().await?;
    println!("after loading: {health:?}");

    let session: Value = client.post(format!("{base}/api/sessions")).send().await?.json().await?;
    let session_id = session["session_id"].as_str().unwrap_or_default();
    let answer: AnswerPayload = client
        .post(format!("{base}/api/chat"))
        .json(&json!({
            "session_id": session_id,
            "message": "My flight was cancelled and they lost my bag. What are my compensation options?"
        }))
        .send()
        .await?
        .json()
        .await?;
    for s in &answer.sections {
        println!("{}", s.sub_query);
        for p in &s.passages {
            println!("  {} {}", p.score, p.chunk_id);
        }
    }

    // the cited chunk resolves to the full record
    let first = &answer.sections[0].passages[0];
    let chunk: Value = client.get(format!("{base}/api/chunks/{}", first.chunk_id)).send().await?.json().await?;
    println!("{}", serde_json::to_string_pretty(&chunk)?);

    let resp = client
        .post(format!("{base}/api/chat"))
        .json(&json!({ "session_id": "nope", "message": "hello" }))
        .send()
        .await?;
    println!("unknown session: {} {}", resp.status(), resp.text().await?);

    let _ = stop.send(());
    tokio::time::timeout(Duration::from_secs(5), server).await???;
    Ok(())
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    run().await
}

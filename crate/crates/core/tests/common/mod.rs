#![allow(dead_code)]

pub mod oracles;

use std::path::PathBuf;
use std::sync::Arc;

use apr_core::answer::AnswerEngine;
use apr_core::corpus::{chunk_documents, read_kb, read_manifest, Chunk, DocumentRecord, SourceEntry, SplitOptions};
use apr_core::embedding::{build_index, HashingEmbedder, RetrievalConfig};
use apr_core::llm::{Gateway, PromptTemplates};
use apr_core::understanding::QueryUnderstanding;
use chrono::{TimeZone, Utc};

pub const TABLE2_INPUT: &str = "My flight was cancelled and they lost my bag. What are my compensation options?";

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn kb_path() -> PathBuf {
    fixtures_dir().join("kb.jsonl")
}

pub fn manifest() -> Vec<SourceEntry> {
    read_manifest(&fixtures_dir().join("manifest.jsonl")).expect("fixture manifest")
}

/// Local copy of the page behind a manifest url.
pub fn page_path(url: &str) -> PathBuf {
    let name = url.rsplit('/').next().expect("url has a path");
    fixtures_dir().join("pages").join(name)
}

pub fn page_html(url: &str) -> String {
    std::fs::read_to_string(page_path(url)).expect("fixture page")
}

pub fn fixture_docs() -> Vec<DocumentRecord> {
    let fetched_at = Utc.with_ymd_and_hms(2024, 3, 1, 12, 0, 0).unwrap();
    manifest()
        .iter()
        .map(|e| DocumentRecord::from_html(e, page_html(&e.url), fetched_at))
        .collect()
}

/// Chunks of the fixture pages under the default split options, in KB order.
pub fn fixture_chunks() -> Vec<Chunk> {
    let (chunks, failures) = chunk_documents(&fixture_docs(), &SplitOptions::default());
    assert!(failures.is_empty(), "{failures:?}");
    chunks
}

pub fn kb_chunks() -> Vec<Chunk> {
    read_kb(&kb_path()).expect("fixture kb")
}

pub async fn stub_engine_over(chunks: Vec<Chunk>, cfg: RetrievalConfig) -> AnswerEngine {
    let embedder = Arc::new(HashingEmbedder);
    let index = build_index(chunks, embedder.as_ref()).await.expect("index");
    let understanding = QueryUnderstanding::new(Arc::new(Gateway::stub()), PromptTemplates::default());
    AnswerEngine::new(Arc::new(index), embedder, understanding, cfg).expect("engine")
}

pub async fn stub_engine() -> AnswerEngine {
    stub_engine_over(kb_chunks(), RetrievalConfig::default()).await
}

/// Completion provider that always answers with an upstream error.
pub struct FailingLlm;

#[async_trait::async_trait]
impl apr_core::llm::CompletionProvider for FailingLlm {
    fn name(&self) -> &str {
        "failing"
    }

    async fn complete(&self, _req: &apr_core::llm::CompletionRequest) -> Result<String, apr_core::llm::LlmError> {
        Err(apr_core::llm::LlmError::Api {
            provider: "failing".into(),
            status: 500,
            message: "upstream exploded".into(),
        })
    }
}

pub async fn failing_engine() -> AnswerEngine {
    let embedder = Arc::new(HashingEmbedder);
    let index = build_index(kb_chunks(), embedder.as_ref()).await.expect("index");
    let config = apr_core::llm::GatewayConfig {
        retry: apr_core::retry::RetryPolicy::none(),
        ..Default::default()
    };
    let gateway = Arc::new(Gateway::new(Arc::new(FailingLlm), config));
    let understanding = QueryUnderstanding::new(gateway, PromptTemplates::default());
    AnswerEngine::new(Arc::new(index), embedder, understanding, RetrievalConfig::default()).expect("engine")
}

/// Serves the API on an ephemeral local port and returns its base url.
pub async fn spawn_api(state: Arc<apr_core::service::AppState>) -> String {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move {
        axum::serve(listener, apr_core::service::router(state)).await.unwrap();
    });
    format!("http://{addr}")
}

/// Serves the fixture pages at `/{file name}`, plus `/logo.png` as an image.
/// Unknown paths answer 404.
pub async fn spawn_page_server() -> String {
    use axum::extract::Path;
    use axum::http::{header, StatusCode};
    use axum::response::IntoResponse;

    async fn page(Path(name): Path<String>) -> axum::response::Response {
        if name == "logo.png" {
            return ([(header::CONTENT_TYPE, "image/png")], vec![0x89u8, b'P', b'N', b'G']).into_response();
        }
        match std::fs::read_to_string(fixtures_dir().join("pages").join(&name)) {
            Ok(html) if !name.contains("..") => axum::response::Html(html).into_response(),
            _ => StatusCode::NOT_FOUND.into_response(),
        }
    }

    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let app = axum::Router::new().route("/{name}", axum::routing::get(page));
    tokio::spawn(async move {
        axum::serve(listener, app).await.unwrap();
    });
    format!("http://{addr}")
}

/// The fixture manifest with urls pointing at a local page server.
pub fn local_manifest(base: &str) -> Vec<SourceEntry> {
    manifest()
        .into_iter()
        .map(|mut e| {
            let name = e.url.rsplit('/').next().unwrap().to_string();
            e.url = format!("{base}/{name}");
            e
        })
        .collect()
}

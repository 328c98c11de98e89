// Build a knowledge base file from web pages.
//
// The fixture pages are served from a local HTTP server so the example works
// offline; point a manifest at real urls and use `apr ingest` for the same
// thing against the web.
//
// cargo run --example ingest_pages

use std::path::PathBuf;

use apr_core::corpus::{build_kb, read_kb, read_manifest, IngestOptions};
use axum::extract::Path;
use axum::http::StatusCode;
use axum::response::{Html, IntoResponse, Response};
use axum::routing::get;
use axum::Router;

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

async fn page(Path(name): Path<String>) -> Response {
    match std::fs::read_to_string(fixtures().join("pages").join(&name)) {
        Ok(html) => Html(html).into_response(),
        Err(_) => StatusCode::NOT_FOUND.into_response(),
    }
}

pub async fn run() -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await?;
    let base = format!("http://{}", listener.local_addr()?);
    let server = tokio::spawn(async move { axum::serve(listener, Router::new().route("/{name}", get(page))).await });

    // same manifest, rehosted locally, plus one page that does not exist
    let mut entries = read_manifest(&fixtures().join("manifest.jsonl"))?;
    for e in &mut entries {
        let name = e.url.rsplit('/').next().unwrap_or_default().to_string();
        e.url = format!("{base}/{name}");
    }
    entries.push(apr_core::corpus::SourceEntry::new(
        format!("{base}/retired-page.html"),
        apr_core::corpus::DocKind::Regular,
    ));

    let dir = tempfile::tempdir()?;
    let out = dir.path().join("kb.jsonl");
    let report = build_kb(&entries, &out, &IngestOptions::default()).await?;
    println!("{} pages, {} chunks", report.pages, report.chunks);
    for f in &report.failures {
        println!("skipped {}: {}", f.url, f.error);
    }
    let chunks = read_kb(&out)?;
    println!("first chunk: {:?} {:?}", chunks[0].header_path, chunks[0].text);
    server.abort();
    Ok(())
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    run().await
}

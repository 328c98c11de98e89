mod common;

use apr_core::corpus::{build_kb, fetch_document, http_client, read_kb, CorpusError, DocKind, IngestOptions, SourceEntry};
use std::time::Duration;

#[tokio::test]
async fn fetch_reports_title_status_and_content_type() {
    let base = common::spawn_page_server().await;
    let client = http_client(Duration::from_secs(5));

    let doc = fetch_document(&client, &SourceEntry::new(format!("{base}/lost-baggage-principles.html"), DocKind::Regular))
        .await
        .unwrap();
    assert_eq!(doc.title, "Lost Baggage | General Principles");
    assert!(doc.body_html.contains("Montreal Convention"));

    let url = format!("{base}/missing.html");
    match fetch_document(&client, &SourceEntry::new(&url, DocKind::Regular)).await {
        Err(CorpusError::HttpStatus { url: u, status }) => {
            assert_eq!(u, url);
            assert_eq!(status, 404);
        }
        other => panic!("expected 404, got {other:?}"),
    }

    let url = format!("{base}/logo.png");
    match fetch_document(&client, &SourceEntry::new(&url, DocKind::Regular)).await {
        Err(CorpusError::UnsupportedContent { url: u, content_type }) => {
            assert_eq!(u, url);
            assert!(content_type.starts_with("image/png"));
        }
        other => panic!("expected unsupported content, got {other:?}"),
    }
}

#[tokio::test]
async fn ingest_counts_failures_and_is_deterministic() {
    let base = common::spawn_page_server().await;
    let mut entries = common::local_manifest(&base);
    entries.insert(2, SourceEntry::new(format!("{base}/missing.html"), DocKind::Regular));
    entries.push(SourceEntry::new(format!("{base}/logo.png"), DocKind::Regular));

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("kb.jsonl");
    let report = build_kb(&entries, &out, &IngestOptions::default()).await.unwrap();
    assert_eq!(report.pages, 10);
    assert_eq!(report.chunks, 30);
    assert_eq!(report.failures.len(), 2);
    assert!(report.failures.iter().any(|f| f.url.ends_with("/missing.html")));
    assert!(report.failures.iter().any(|f| f.url.ends_with("/logo.png")));

    let chunks = read_kb(&out).unwrap();
    assert_eq!(chunks.len(), 30);
    let expected: Vec<_> = common::kb_chunks().into_iter().map(|c| (c.header_path, c.text)).collect();
    let got: Vec<_> = chunks.into_iter().map(|c| (c.header_path, c.text)).collect();
    assert_eq!(got, expected);

    let first = std::fs::read(&out).unwrap();
    build_kb(&entries, &out, &IngestOptions::default()).await.unwrap();
    assert_eq!(std::fs::read(&out).unwrap(), first);
}

#[tokio::test]
async fn three_pages_one_missing() {
    let base = common::spawn_page_server().await;
    let entries = vec![
        SourceEntry::new(format!("{base}/denied-boarding.html"), DocKind::Regular),
        SourceEntry::new(format!("{base}/gone.html"), DocKind::Regular),
        SourceEntry::new(format!("{base}/reduced-mobility.html"), DocKind::Regular),
    ];
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("kb.jsonl");
    let report = build_kb(&entries, &out, &IngestOptions::default()).await.unwrap();
    assert_eq!((report.pages, report.failures.len()), (2, 1));
    let urls: std::collections::BTreeSet<_> = read_kb(&out).unwrap().into_iter().map(|c| c.doc_url).collect();
    assert_eq!(urls.len(), 2);
}

#[tokio::test]
async fn nothing_fetched_is_an_error_and_writes_nothing() {
    let base = common::spawn_page_server().await;
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("kb.jsonl");
    let entries = vec![SourceEntry::new(format!("{base}/gone.html"), DocKind::Regular)];
    assert!(matches!(
        build_kb(&entries, &out, &IngestOptions::default()).await,
        Err(CorpusError::NoDocuments)
    ));
    assert!(!out.exists());
}

// Split one fixture page by its headers and show where each chunk sits.
//
// cargo run --example split_page

use std::path::Path;

use apr_core::corpus::{split_by_headers, DocKind, DocumentRecord, SourceEntry, SplitOptions};
use chrono::Utc;

pub async fn run() -> anyhow::Result<()> {
    let pages = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/pages");
    for (file, kind) in [
        ("flight-cancellation-principles.html", DocKind::Regular),
        ("how-to-complain-guide.html", DocKind::StepByStepGuide),
    ] {
        let html = std::fs::read_to_string(pages.join(file))?;
        let entry = SourceEntry::new(format!("https://passenger-rights.example.org/{file}"), kind);
        let doc = DocumentRecord::from_html(&entry, html, Utc::now());
        let chunks = split_by_headers(&doc, &SplitOptions::default())?;
        println!("{} ({}): {} chunks", doc.title, kind.as_str(), chunks.len());
        for c in &chunks {
            println!("  {:?}\n    {}", c.header_path, c.text);
        }
    }
    Ok(())
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    run().await
}

// Embed the fixture knowledge base and run similarity searches against it.
//
// cargo run --example search_index

use std::path::Path;

use apr_core::corpus::read_kb;
use apr_core::embedding::{build_index, embed, HashingEmbedder, RetrievalConfig};

pub async fn run() -> anyhow::Result<()> {
    let chunks = read_kb(&Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/kb.jsonl"))?;
    let embedder = HashingEmbedder;
    let index = build_index(chunks, &embedder).await?;
    println!("{} chunks, {} dimensions", index.len(), index.dim());

    for (query, cfg) in [
        ("They lost my bag?", RetrievalConfig::default()),
        ("Can I get a refund if my flight is delayed?", RetrievalConfig::default()),
        // a looser threshold shows what the strict default hides
        ("Can I get a refund if my flight is delayed?", RetrievalConfig::new(3, 0.3)?),
    ] {
        let vector = embed(&[query.to_string()], &embedder).await?.remove(0);
        let hits = index.search(&vector, &cfg)?;
        println!("\n{query} (top {}, score > {})", cfg.top_k, cfg.score_threshold);
        if hits.is_empty() {
            println!("  nothing above the threshold");
        }
        for h in hits {
            println!("  {:.4}  {} / {}", h.score, h.chunk.doc_title, h.chunk.header_path.join(" / "));
        }
    }
    Ok(())
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    run().await
}

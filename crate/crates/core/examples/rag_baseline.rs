// Generated answers for comparison studies. These never reach chat users;
// the output is flagged experimental and written for annotation.
//
// cargo run --example rag_baseline

use std::path::Path;
use std::sync::Arc;

use apr_core::answer::AnswerEngine;
use apr_core::corpus::read_kb;
use apr_core::embedding::{build_index, HashingEmbedder, RetrievalConfig};
use apr_core::eval::{read_judgments, run_rag_baseline};
use apr_core::llm::{Gateway, PromptTemplates};
use apr_core::understanding::QueryUnderstanding;

pub async fn run() -> anyhow::Result<()> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let embedder = Arc::new(HashingEmbedder);
    let index = build_index(read_kb(&fixtures.join("kb.jsonl"))?, embedder.as_ref()).await?;
    let qu = QueryUnderstanding::new(Arc::new(Gateway::stub()), PromptTemplates::default());
    let engine = AnswerEngine::new(Arc::new(index), embedder, qu, RetrievalConfig::default())?;

    let answer = engine
        .answer(&[], "My flight was cancelled and they lost my bag. What are my compensation options?")
        .await?;
    let rag = engine.rag_baseline(&answer).await?;
    println!("extractive passages: {}", answer.passages().count());
    println!("generated (experimental={}): {}", rag.flagged_experimental, rag.synthesized_text);

    let dir = tempfile::tempdir()?;
    let records = run_rag_baseline(&engine, &read_judgments(&fixtures.join("judgments.jsonl"))?, dir.path()).await?;
    let with_text = records.iter().filter(|r| r.synthesized_text.is_some()).count();
    println!("{} judged queries, {with_text} with retrieved context", records.len());
    Ok(())
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    run().await
}

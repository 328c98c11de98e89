// The full extractive pipeline over the fixture knowledge base, in a chat
// session: every passage in an answer is a verbatim knowledge base chunk.
//
// cargo run --example answer_pipeline

use std::path::Path;
use std::sync::Arc;

use apr_core::answer::{AnswerEngine, NO_RESULTS_MESSAGE};
use apr_core::corpus::read_kb;
use apr_core::embedding::{build_index, HashingEmbedder, RetrievalConfig};
use apr_core::llm::{Gateway, PromptTemplates};
use apr_core::session::ChatSession;
use apr_core::understanding::QueryUnderstanding;

pub async fn run() -> anyhow::Result<()> {
    let chunks = read_kb(&Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/kb.jsonl"))?;
    let embedder = Arc::new(HashingEmbedder);
    let index = Arc::new(build_index(chunks, embedder.as_ref()).await?);
    let understanding = QueryUnderstanding::new(Arc::new(Gateway::stub()), PromptTemplates::default());
    let engine = AnswerEngine::new(index, embedder, understanding, RetrievalConfig::default())?;

    let mut session = ChatSession::new();
    for input in [
        "My flight was cancelled and they lost my bag. What are my compensation options?",
        "Is there a zebra on board?",
    ] {
        println!("> {input}");
        let answer = engine.answer_in_session(&mut session, input).await?;
        if answer.no_results {
            println!("{NO_RESULTS_MESSAGE}");
        }
        for section in &answer.sections {
            println!("  {}", section.sub_query.text);
            for p in &section.passages {
                println!("    [{:.4}] {} <{}>", p.score, p.chunk.text, p.chunk.doc_url);
            }
        }
    }
    println!("session {} holds {} turns", session.session_id, session.turns.len());
    Ok(())
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    run().await
}

// Retrieval metrics (P@5, R@5, F1@5, MAP@5) against the fixture judgments.
//
// cargo run --example evaluate_retrieval

use std::path::Path;

use apr_core::corpus::read_kb;
use apr_core::eval::{evaluate, read_judgments, EvalOptions};

mod setup {
    use std::sync::Arc;

    use apr_core::answer::AnswerEngine;
    use apr_core::corpus::Chunk;
    use apr_core::embedding::{build_index, HashingEmbedder, RetrievalConfig};
    use apr_core::llm::{Gateway, PromptTemplates};
    use apr_core::understanding::QueryUnderstanding;

    pub async fn engine(chunks: Vec<Chunk>) -> anyhow::Result<AnswerEngine> {
        let embedder = Arc::new(HashingEmbedder);
        let index = build_index(chunks, embedder.as_ref()).await?;
        let qu = QueryUnderstanding::new(Arc::new(Gateway::stub()), PromptTemplates::default());
        Ok(AnswerEngine::new(Arc::new(index), embedder, qu, RetrievalConfig::default())?)
    }
}

pub async fn run() -> anyhow::Result<()> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let engine = setup::engine(read_kb(&fixtures.join("kb.jsonl"))?).await?;
    let judged = read_judgments(&fixtures.join("judgments.jsonl"))?;

    for threshold in [0.7, 0.2] {
        let opts = EvalOptions {
            score_threshold: threshold,
            ..EvalOptions::default()
        };
        let report = evaluate(&engine, &judged, &opts).await?;
        println!("threshold {threshold}\n{}", report.table());
    }

    let dir = tempfile::tempdir()?;
    let report = evaluate(&engine, &judged, &EvalOptions::default()).await?;
    report.write(dir.path())?;
    println!("per-query rows: {}", report.per_query.len());
    Ok(())
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    run().await
}

// Query understanding with the offline rule-based model: rewrite a follow-up
// into a standalone question, then split a compound question.
//
// cargo run --example decompose_query

use std::sync::Arc;

use apr_core::llm::{Gateway, PromptTemplates};
use apr_core::understanding::{ChatTurn, QueryUnderstanding};

pub async fn run() -> anyhow::Result<()> {
    let qu = QueryUnderstanding::new(Arc::new(Gateway::stub()), PromptTemplates::default());

    let history = vec![
        ChatTurn::user("I booked my flight with the airline last month."),
        ChatTurn::assistant("Which problem did you run into?"),
    ];
    let standalone = qu.decontextualize(&history, "Can they refuse my claim?").await?;
    println!("standalone: {} (rewritten: {})", standalone.text, standalone.was_rewritten);

    let compound = qu
        .decontextualize(&[], "My flight was cancelled and they lost my bag. What are my compensation options?")
        .await?;
    for sub in qu.decompose(&compound).await? {
        println!("{}. {}", sub.ordinal, sub.text);
    }

    // what the model is actually asked
    println!("\n{}", qu.templates().render_decomposition(&compound.text));
    Ok(())
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    run().await
}

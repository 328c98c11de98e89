//! Extractive question answering over an air passenger rights knowledge base.
//!
//! A user message is rewritten into a standalone question, split into at most
//! three simple sub-queries, and each sub-query is answered with knowledge
//! base passages quoted verbatim with their source links. Generated text is
//! only produced by the RAG baseline used for comparison studies.
//!
//! Modules, in pipeline order:
//!
//! - [`corpus`]: fetch pages, split them by headers into chunks, write the KB file
//! - [`embedding`]: embedding providers, the in-memory cosine index, vector cache
//! - [`llm`]: completion gateway, prompt templates, OpenAI-compatible client, offline stub
//! - [`understanding`]: decontextualization and decomposition
//! - [`answer`]: the extractive answer engine
//! - [`eval`]: P@k, R@k, F1@k, MAP@k and the RAG-baseline dump
//! - [`service`], [`session`]: the HTTP API and its chat sessions
//! - [`cli`]: the `apr` command
//!
//! Each capability has a runnable example:
//!
//! ```bash
//! cargo run --example split_page
//! cargo run --example ingest_pages
//! cargo run --example search_index
//! cargo run --example decompose_query
//! cargo run --example answer_pipeline
//! cargo run --example evaluate_retrieval
//! cargo run --example rag_baseline
//! cargo run --example serve_api
//! cargo run --example openai_compatible
//! ```

pub mod answer;
pub mod cli;
pub mod corpus;
pub mod embedding;
pub mod eval;
pub mod llm;
pub mod retry;
pub mod service;
pub mod session;
pub mod understanding;

//! Every runnable example also runs as a test.

#[allow(dead_code)]
mod split_page {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/split_page.rs"));
}

#[allow(dead_code)]
mod ingest_pages {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/ingest_pages.rs"));
}

#[allow(dead_code)]
mod search_index {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/search_index.rs"));
}

#[allow(dead_code)]
mod decompose_query {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/decompose_query.rs"));
}

#[allow(dead_code)]
mod answer_pipeline {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/answer_pipeline.rs"));
}

#[allow(dead_code)]
mod evaluate_retrieval {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/evaluate_retrieval.rs"));
}

#[allow(dead_code)]
mod rag_baseline {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/rag_baseline.rs"));
}

#[allow(dead_code)]
mod serve_api {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/serve_api.rs"));
}

#[allow(dead_code)]
mod openai_compatible {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/openai_compatible.rs"));
}

#[tokio::test]
async fn split_page_example_runs() {
    split_page::run().await.expect("split_page example should run");
}

#[tokio::test]
async fn ingest_pages_example_runs() {
    ingest_pages::run().await.expect("ingest_pages example should run");
}

#[tokio::test]
async fn search_index_example_runs() {
    search_index::run().await.expect("search_index example should run");
}

#[tokio::test]
async fn decompose_query_example_runs() {
    decompose_query::run().await.expect("decompose_query example should run");
}

#[tokio::test]
async fn answer_pipeline_example_runs() {
    answer_pipeline::run().await.expect("answer_pipeline example should run");
}

#[tokio::test]
async fn evaluate_retrieval_example_runs() {
    evaluate_retrieval::run().await.expect("evaluate_retrieval example should run");
}

#[tokio::test]
async fn rag_baseline_example_runs() {
    rag_baseline::run().await.expect("rag_baseline example should run");
}

#[tokio::test]
async fn serve_api_example_runs() {
    serve_api::run().await.expect("serve_api example should run");
}

#[tokio::test]
async fn openai_compatible_example_runs() {
    openai_compatible::run().await.expect("openai_compatible example should run");
}

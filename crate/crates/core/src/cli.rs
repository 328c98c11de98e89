//! Command line front end: `serve`, `ingest`, `ask` and `eval`.

use std::fmt::Write as _;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use tracing_subscriber::EnvFilter;

use crate::answer::{Answer, NO_RESULTS_MESSAGE};
use crate::corpus::{build_kb, parse_levels, read_manifest, IngestOptions, SplitOptions};
use crate::embedding::RetrievalConfig;
use crate::eval::{evaluate, read_judgments, run_rag_baseline, EvalOptions};
use crate::service::{build_engine, serve, ProviderSettings, ServiceConfig, ServiceError, DEFAULT_HISTORY_WINDOW};

#[derive(Debug, Parser)]
#[command(name = "apr", version, about = "Extractive question answering over an air passenger rights knowledge base")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the HTTP API.
    Serve(ServeArgs),
    /// Fetch the pages of a manifest and write the knowledge base file.
    Ingest(IngestArgs),
    /// Answer one question and print the passages.
    Ask(AskArgs),
    /// Score retrieval against relevance judgments.
    Eval(EvalArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ProviderArgs {
    /// Use the offline hashing embedder and rule-based language model.
    /// Defaults to true when no base url is given.
    #[arg(long = "stub", env = "APR_USE_STUB_PROVIDERS")]
    pub use_stub: Option<bool>,
    #[arg(long, env = "APR_LLM_BASE_URL")]
    pub llm_base_url: Option<String>,
    #[arg(long, env = "APR_LLM_MODEL", default_value = "gpt-4")]
    pub llm_model: String,
    #[arg(long, env = "APR_LLM_API_KEY", hide_env_values = true)]
    pub llm_api_key: Option<String>,
    #[arg(long, env = "APR_EMBED_MODEL", default_value = "text-embedding-3-small")]
    pub embed_model: String,
    /// Seconds allowed for one completion, retries included.
    #[arg(long, default_value_t = 30)]
    pub llm_deadline_secs: u64,
}

impl ProviderArgs {
    pub fn settings(&self) -> ProviderSettings {
        ProviderSettings {
            use_stub: self.use_stub.unwrap_or(self.llm_base_url.is_none()),
            llm_base_url: self.llm_base_url.clone(),
            llm_model: self.llm_model.clone(),
            api_key: self.llm_api_key.clone(),
            embed_model: self.embed_model.clone(),
            deadline: Duration::from_secs(self.llm_deadline_secs),
            ..ProviderSettings::default()
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct RetrievalArgs {
    #[arg(long, env = "APR_TOP_K", default_value_t = 5)]
    pub top_k: usize,
    /// Passages must score strictly above this cosine similarity.
    #[arg(long, env = "APR_SCORE_THRESHOLD", default_value_t = 0.7, allow_negative_numbers = true)]
    pub score_threshold: f64,
}

#[derive(Debug, Clone, Args)]
pub struct KbArgs {
    #[arg(long = "kb", env = "APR_KB_PATH")]
    pub kb_path: PathBuf,
    /// Reuse chunk embeddings stored in this file across runs.
    #[arg(long)]
    pub vector_cache: Option<PathBuf>,
    /// Directory with prompt template overrides.
    #[arg(long)]
    pub templates_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, env = "APR_BIND", default_value = "127.0.0.1:8080")]
    pub bind: SocketAddr,
    #[command(flatten)]
    pub kb: KbArgs,
    #[command(flatten)]
    pub providers: ProviderArgs,
    #[command(flatten)]
    pub retrieval: RetrievalArgs,
    #[arg(long, env = "APR_SESSION_TTL_SECS", default_value_t = 7200)]
    pub session_ttl_secs: u64,
    #[arg(long, default_value_t = DEFAULT_HISTORY_WINDOW)]
    pub history_window: usize,
    /// Require this value in the x-apr-secret header.
    #[arg(long, env = "APR_SHARED_SECRET", hide_env_values = true)]
    pub shared_secret: Option<String>,
    /// Persist sessions here on shutdown and restore them on start.
    #[arg(long)]
    pub session_snapshot: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// JSON lines file of source entries.
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Comma separated header levels that start a chunk.
    #[arg(long, default_value = "h1,h2,h3")]
    pub levels: String,
    /// Sections shorter than this are merged with a neighbour.
    #[arg(long, default_value_t = crate::corpus::DEFAULT_MIN_CHUNK_CHARS)]
    pub min_chunk_chars: usize,
    #[arg(long, default_value_t = 20)]
    pub timeout_secs: u64,
    #[arg(long, default_value_t = 4)]
    pub concurrency: usize,
}

#[derive(Debug, Args)]
pub struct AskArgs {
    #[command(flatten)]
    pub kb: KbArgs,
    #[command(flatten)]
    pub providers: ProviderArgs,
    #[command(flatten)]
    pub retrieval: RetrievalArgs,
    /// Print the answer as JSON instead of text.
    #[arg(long)]
    pub json: bool,
    pub question: String,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub kb: KbArgs,
    #[command(flatten)]
    pub providers: ProviderArgs,
    #[arg(long)]
    pub judgments: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    #[arg(long, default_value_t = 0.7, allow_negative_numbers = true)]
    pub threshold: f64,
    /// Retrieve with the full pipeline instead of the raw query text.
    #[arg(long)]
    pub with_understanding: bool,
    /// Also dump generated RAG-baseline answers for annotation.
    #[arg(long)]
    pub rag_baseline: bool,
    /// Where reports are written. Without it only the table is printed.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

fn service_config(kb: &KbArgs, providers: &ProviderArgs, retrieval: RetrievalConfig) -> ServiceConfig {
    ServiceConfig {
        providers: providers.settings(),
        retrieval,
        vector_cache: kb.vector_cache.clone(),
        templates_dir: kb.templates_dir.clone(),
        ..ServiceConfig::new(&kb.kb_path)
    }
}

fn retrieval_config(top_k: usize, threshold: f64) -> Result<RetrievalConfig, ServiceError> {
    RetrievalConfig::new(top_k, threshold).map_err(|e| ServiceError::Invalid(e.to_string()))
}

fn runtime(e: impl std::fmt::Display) -> ServiceError {
    ServiceError::Runtime(e.to_string())
}

/// Plain-text rendering of an answer, one block per sub-query.
pub fn render_answer(answer: &Answer) -> String {
    if answer.no_results {
        return format!("{NO_RESULTS_MESSAGE}\n");
    }
    let mut out = String::new();
    for section in &answer.sections {
        let _ = writeln!(out, "## {}", section.sub_query.text);
        for p in &section.passages {
            let mut source = p.chunk.doc_title.clone();
            let path = &p.chunk.header_path;
            // the outermost header usually repeats the page title
            let skip = usize::from(path.first() == Some(&p.chunk.doc_title));
            for h in &path[skip..] {
                source.push_str(" > ");
                source.push_str(h);
            }
            let _ = writeln!(out, "[{:.4}] {source}", p.score);
            let _ = writeln!(out, "{}", p.chunk.text);
            let _ = writeln!(out, "<{}>", p.chunk.doc_url);
            out.push('\n');
        }
    }
    out
}

async fn run(cli: Cli) -> Result<(), ServiceError> {
    match cli.command {
        Command::Serve(a) => {
            let retrieval = retrieval_config(a.retrieval.top_k, a.retrieval.score_threshold)?;
            let config = ServiceConfig {
                bind: a.bind,
                history_window: a.history_window,
                session_ttl: Duration::from_secs(a.session_ttl_secs),
                shared_secret: a.shared_secret,
                session_snapshot: a.session_snapshot,
                ..service_config(&a.kb, &a.providers, retrieval)
            };
            serve(config).await
        }
        Command::Ingest(a) => {
            let levels = parse_levels(&a.levels).map_err(|e| ServiceError::Invalid(e.to_string()))?;
            let entries = read_manifest(&a.manifest).map_err(|e| ServiceError::Invalid(e.to_string()))?;
            let opts = IngestOptions {
                split: SplitOptions {
                    levels,
                    min_chunk_chars: a.min_chunk_chars,
                },
                timeout: Duration::from_secs(a.timeout_secs),
                concurrency: a.concurrency,
            };
            let report = build_kb(&entries, &a.out, &opts).await.map_err(runtime)?;
            println!(
                "wrote {} chunks from {} pages to {}",
                report.chunks,
                report.pages,
                a.out.display()
            );
            for f in &report.failures {
                println!("failed: {} ({})", f.url, f.error);
            }
            Ok(())
        }
        Command::Ask(a) => {
            let retrieval = retrieval_config(a.retrieval.top_k, a.retrieval.score_threshold)?;
            let config = service_config(&a.kb, &a.providers, retrieval);
            config.validate()?;
            let engine = build_engine(&config).await?;
            let answer = engine.answer(&[], &a.question).await.map_err(runtime)?;
            if a.json {
                let payload = crate::service::AnswerPayload::from(&answer);
                println!("{}", serde_json::to_string_pretty(&payload).map_err(runtime)?);
            } else {
                print!("{}", render_answer(&answer));
            }
            Ok(())
        }
        Command::Eval(a) => {
            let retrieval = retrieval_config(a.k, a.threshold)?;
            let config = service_config(&a.kb, &a.providers, retrieval);
            config.validate()?;
            let judged = read_judgments(&a.judgments).map_err(|e| ServiceError::Invalid(e.to_string()))?;
            let engine = build_engine(&config).await?;
            let opts = EvalOptions {
                k: a.k,
                score_threshold: a.threshold,
                with_understanding: a.with_understanding,
                ..EvalOptions::default()
            };
            let report = evaluate(&engine, &judged, &opts).await.map_err(runtime)?;
            print!("{}", report.table());
            if let Some(dir) = &a.out_dir {
                report.write(dir).map_err(runtime)?;
                if a.rag_baseline {
                    let records = run_rag_baseline(&engine, &judged, dir).await.map_err(runtime)?;
                    println!("wrote {} RAG-baseline records to {}", records.len(), dir.display());
                }
            } else if a.rag_baseline {
                return Err(ServiceError::Invalid("--rag-baseline needs --out-dir".into()));
            }
            Ok(())
        }
    }
}

/// Parses arguments, runs the command and maps failures to exit codes
/// (1 configuration, 2 runtime).
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let _ = tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("warn,apr_core=info")))
        .with_writer(std::io::stderr)
        .try_init();
    let rt = match tokio::runtime::Runtime::new() {
        Ok(rt) => rt,
        Err(e) => {
            eprintln!("error: cannot start runtime: {e}");
            return ExitCode::from(2);
        }
    };
    match rt.block_on(run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

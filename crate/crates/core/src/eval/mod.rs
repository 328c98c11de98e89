//! Retrieval evaluation against relevance judgments (P@k, R@k, F1@k, MAP@k)
//! and batch dumps of RAG-baseline outputs for annotation.

mod metrics;

use std::collections::{BTreeSet, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use futures::stream::{self, StreamExt};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::answer::{AnswerEngine, AnswerError};
use crate::embedding::RetrievalConfig;

pub use metrics::{average_precision_at_k, f1, precision_at_k, recall_at_k};

pub const REPORT_JSON: &str = "retrieval_report.json";
pub const REPORT_TABLE: &str = "retrieval_report.txt";
pub const RAG_BASELINE_FILE: &str = "rag_baseline.jsonl";

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("k must be at least 1")]
    InvalidK,
    #[error("relevant set is empty")]
    EmptyRelevant,
    #[error("no judged queries")]
    NoJudgments,
    #[error("judged query {0} is invalid: {1}")]
    InvalidJudgment(String, String),
    #[error("judgments reference ids missing from the knowledge base: {}", .0.join(", "))]
    UnknownReferences(Vec<String>),
    #[error(transparent)]
    Pipeline(#[from] AnswerError),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
}

/// Whether judged ids are chunk ids or document urls.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    #[default]
    Chunk,
    Doc,
}

/// One line of the judgments file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgedQuery {
    pub query_id: String,
    pub query_text: String,
    pub relevant: BTreeSet<String>,
    #[serde(default)]
    pub granularity: Granularity,
}

impl JudgedQuery {
    fn validate(&self) -> Result<(), EvalError> {
        if self.query_text.trim().is_empty() {
            return Err(EvalError::InvalidJudgment(self.query_id.clone(), "empty query_text".into()));
        }
        if self.relevant.is_empty() {
            return Err(EvalError::InvalidJudgment(self.query_id.clone(), "empty relevant set".into()));
        }
        Ok(())
    }
}

pub fn read_judgments(path: &Path) -> Result<Vec<JudgedQuery>, EvalError> {
    crate::corpus::read_jsonl(path).map_err(|e| EvalError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    /// Metric cutoff, also used as the retrieval top-k.
    pub k: usize,
    pub score_threshold: f64,
    /// Run decontextualization and decomposition instead of searching the raw query text.
    pub with_understanding: bool,
    pub concurrency: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            k: 5,
            score_threshold: 0.7,
            with_understanding: false,
            concurrency: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryMetrics {
    pub query_id: String,
    pub retrieved: Vec<String>,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub average_precision: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub k: usize,
    pub precision_at_k: f64,
    pub recall_at_k: f64,
    /// Harmonic mean of the macro precision and recall.
    pub f1_at_k: f64,
    pub map_at_k: f64,
    pub per_query: Vec<QueryMetrics>,
}

impl MetricsReport {
    /// Macro-averages per-query rows, ordered by query id.
    pub fn from_rows(k: usize, mut rows: Vec<QueryMetrics>) -> Self {
        rows.sort_by(|a, b| a.query_id.cmp(&b.query_id));
        let n = rows.len().max(1) as f64;
        let mean = |f: fn(&QueryMetrics) -> f64| rows.iter().map(f).sum::<f64>() / n;
        let precision_at_k = mean(|r| r.precision);
        let recall_at_k = mean(|r| r.recall);
        Self {
            k,
            precision_at_k,
            recall_at_k,
            f1_at_k: f1(precision_at_k, recall_at_k),
            map_at_k: mean(|r| r.average_precision),
            per_query: rows,
        }
    }

    /// Plain-text table with one row of macro metrics.
    pub fn table(&self) -> String {
        let k = self.k;
        let mut out = String::new();
        let headers = [format!("P@{k}"), format!("R@{k}"), format!("F1@{k}"), format!("MAP@{k}")];
        let _ = writeln!(out, "{:<10}{:>8}{:>8}{:>8}{:>8}", "", headers[0], headers[1], headers[2], headers[3]);
        let _ = writeln!(
            out,
            "{:<10}{:>8.4}{:>8.4}{:>8.4}{:>8.4}",
            "Retrieval", self.precision_at_k, self.recall_at_k, self.f1_at_k, self.map_at_k
        );
        out
    }

    /// Writes the JSON report and the text table into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(), EvalError> {
        let io = |path: &Path, e: std::io::Error| EvalError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        };
        fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        let json_path = dir.join(REPORT_JSON);
        let mut json = serde_json::to_string_pretty(self).expect("report serializes");
        json.push('\n');
        fs::write(&json_path, json).map_err(|e| io(&json_path, e))?;
        let table_path = dir.join(REPORT_TABLE);
        fs::write(&table_path, self.table()).map_err(|e| io(&table_path, e))?;
        Ok(())
    }
}

/// Scores one ranking against one judged query.
pub fn score_query(query_id: &str, retrieved: Vec<String>, relevant: &HashSet<String>, k: usize) -> Result<QueryMetrics, EvalError> {
    let precision = precision_at_k(&retrieved, relevant, k)?;
    let recall = recall_at_k(&retrieved, relevant, k)?;
    Ok(QueryMetrics {
        query_id: query_id.to_string(),
        precision,
        recall,
        f1: f1(precision, recall),
        average_precision: average_precision_at_k(&retrieved, relevant, k)?,
        retrieved,
    })
}

fn check_references(engine: &AnswerEngine, judged: &[JudgedQuery]) -> Result<(), EvalError> {
    let doc_urls: HashSet<&str> = engine.index().chunks().iter().map(|c| c.doc_url.as_str()).collect();
    let mut missing = BTreeSet::new();
    for q in judged {
        q.validate()?;
        for id in &q.relevant {
            let known = match q.granularity {
                Granularity::Chunk => engine.index().chunk(id).is_some(),
                Granularity::Doc => doc_urls.contains(id.as_str()),
            };
            if !known {
                missing.insert(format!("{}:{id}", q.query_id));
            }
        }
    }
    if missing.is_empty() {
        Ok(())
    } else {
        Err(EvalError::UnknownReferences(missing.into_iter().collect()))
    }
}

/// Ranked ids retrieved for one judged query, at the query's granularity.
async fn ranking(engine: &AnswerEngine, q: &JudgedQuery, cfg: &RetrievalConfig, with_understanding: bool) -> Result<Vec<String>, EvalError> {
    let passages = if with_understanding {
        let answer = engine.answer(&[], &q.query_text).await?;
        answer.passages().cloned().collect()
    } else {
        engine.search_text(&q.query_text, cfg).await?
    };
    let ids = match q.granularity {
        Granularity::Chunk => passages.into_iter().map(|p| p.chunk.chunk_id).collect(),
        Granularity::Doc => {
            let mut seen = HashSet::new();
            passages
                .into_iter()
                .map(|p| p.chunk.doc_url)
                .filter(|u| seen.insert(u.clone()))
                .collect()
        }
    };
    Ok(ids)
}

pub async fn evaluate(engine: &AnswerEngine, judged: &[JudgedQuery], opts: &EvalOptions) -> Result<MetricsReport, EvalError> {
    if judged.is_empty() {
        return Err(EvalError::NoJudgments);
    }
    if opts.k == 0 {
        return Err(EvalError::InvalidK);
    }
    check_references(engine, judged)?;
    let cfg = RetrievalConfig::new(opts.k, opts.score_threshold).map_err(|e| EvalError::Pipeline(AnswerError::Config(e)))?;
    let cfg = &cfg;
    let jobs: Vec<_> = judged
        .iter()
        .map(|q| async move {
            let retrieved = ranking(engine, q, cfg, opts.with_understanding).await?;
            let relevant: HashSet<String> = q.relevant.iter().cloned().collect();
            score_query(&q.query_id, retrieved, &relevant, opts.k)
        })
        .collect();
    let rows: Vec<Result<QueryMetrics, EvalError>> = stream::iter(jobs)
        .buffer_unordered(opts.concurrency.max(1))
        .collect()
        .await;
    let rows = rows.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(MetricsReport::from_rows(opts.k, rows))
}

/// One line of the RAG-baseline dump.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RagBaselineRecord {
    pub query_id: String,
    pub query_text: String,
    pub standalone_query: String,
    /// Absent when retrieval found nothing to synthesize from.
    pub synthesized_text: Option<String>,
    pub context_chunk_ids: Vec<String>,
    pub flagged_experimental: bool,
}

/// Runs the full pipeline plus the generative baseline for every judged query
/// and writes the outputs, ordered by query id, to `out_dir`.
pub async fn run_rag_baseline(engine: &AnswerEngine, judged: &[JudgedQuery], out_dir: &Path) -> Result<Vec<RagBaselineRecord>, EvalError> {
    if judged.is_empty() {
        return Err(EvalError::NoJudgments);
    }
    let mut records = Vec::with_capacity(judged.len());
    for q in judged {
        let answer = engine.answer(&[], &q.query_text).await?;
        let (synthesized_text, context_chunk_ids) = if answer.no_results {
            (None, Vec::new())
        } else {
            let rag = engine.rag_baseline(&answer).await?;
            (Some(rag.synthesized_text), rag.context_chunk_ids)
        };
        records.push(RagBaselineRecord {
            query_id: q.query_id.clone(),
            query_text: q.query_text.clone(),
            standalone_query: answer.standalone_query.text,
            synthesized_text,
            context_chunk_ids,
            flagged_experimental: true,
        });
    }
    records.sort_by(|a, b| a.query_id.cmp(&b.query_id));

    let io = |path: &Path, e: std::io::Error| EvalError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    fs::create_dir_all(out_dir).map_err(|e| io(out_dir, e))?;
    let path = out_dir.join(RAG_BASELINE_FILE);
    let mut body = String::new();
    for r in &records {
        body.push_str(&serde_json::to_string(r).expect("record serializes"));
        body.push('\n');
    }
    fs::write(&path, body).map_err(|e| io(&path, e))?;
    Ok(records)
}

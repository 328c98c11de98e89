//! Knowledge-base construction: fetching source pages, splitting them into
//! header-delimited chunks and reading/writing the JSON Lines KB file.

mod fetch;
mod kb;
mod split;

use std::fmt;
use std::path::PathBuf;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use fetch::{fetch_document, http_client};
pub(crate) use kb::read_jsonl;
pub use kb::{
    build_kb, chunk_documents, read_kb, read_manifest, write_kb, IngestFailure, IngestOptions,
    IngestReport,
};
pub use split::{
    extract_body_text, extract_title, parse_levels, split_by_headers, split_sections, Section,
    SplitOptions, DEFAULT_MIN_CHUNK_CHARS,
};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("invalid source entry: {0}")]
    InvalidEntry(String),
    #[error("fetching {url} failed: {source}")]
    Fetch {
        url: String,
        #[source]
        source: reqwest::Error,
    },
    #[error("fetching {url} returned HTTP {status}")]
    HttpStatus { url: String, status: u16 },
    #[error("{url} has unsupported content type `{content_type}`")]
    UnsupportedContent { url: String, content_type: String },
    #[error("{url} has no extractable body text")]
    EmptyDocument { url: String },
    #[error("no document could be ingested")]
    NoDocuments,
    #[error("invalid header level `{0}` (expected h1..h6)")]
    InvalidLevel(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path} line {line}: {source}")]
    Json {
        path: PathBuf,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
}

/// Whether a source page is split by headers or kept whole.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DocKind {
    Regular,
    StepByStepGuide,
}

impl DocKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DocKind::Regular => "regular",
            DocKind::StepByStepGuide => "step_by_step_guide",
        }
    }
}

impl fmt::Display for DocKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One line of the source manifest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceEntry {
    pub url: String,
    pub kind: DocKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title_hint: Option<String>,
}

impl SourceEntry {
    pub fn new(url: impl Into<String>, kind: DocKind) -> Self {
        Self {
            url: url.into(),
            kind,
            title_hint: None,
        }
    }

    /// Checks that the url is an absolute http(s) URL.
    pub fn validate(&self) -> Result<(), CorpusError> {
        let parsed = url::Url::parse(&self.url)
            .map_err(|e| CorpusError::InvalidEntry(format!("{}: {e}", self.url)))?;
        match parsed.scheme() {
            "http" | "https" => Ok(()),
            other => Err(CorpusError::InvalidEntry(format!(
                "{}: unsupported scheme `{other}`",
                self.url
            ))),
        }
    }
}

/// A fetched page before splitting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocumentRecord {
    pub url: String,
    pub title: String,
    pub kind: DocKind,
    pub body_html: String,
    pub fetched_at: DateTime<Utc>,
}

impl DocumentRecord {
    /// Builds a record from raw HTML, taking the title from `<title>`, then
    /// `title_hint`, then the url.
    pub fn from_html(entry: &SourceEntry, html: impl Into<String>, fetched_at: DateTime<Utc>) -> Self {
        let body_html = html.into();
        let title = extract_title(&body_html)
            .or_else(|| {
                entry
                    .title_hint
                    .as_deref()
                    .map(str::trim)
                    .filter(|t| !t.is_empty())
                    .map(str::to_string)
            })
            .unwrap_or_else(|| entry.url.clone());
        Self {
            url: entry.url.clone(),
            title,
            kind: entry.kind,
            body_html,
            fetched_at,
        }
    }
}

/// A citable unit of knowledge-base text. Field order is the KB file's key order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub chunk_id: String,
    pub doc_url: String,
    pub doc_title: String,
    pub header_path: Vec<String>,
    pub text: String,
    pub kind: DocKind,
}

impl Chunk {
    pub fn new(
        doc_url: impl Into<String>,
        doc_title: impl Into<String>,
        header_path: Vec<String>,
        text: impl Into<String>,
        kind: DocKind,
    ) -> Self {
        let doc_url = doc_url.into();
        let text = text.into();
        let chunk_id = chunk_id(&doc_url, &header_path, &text);
        Self {
            chunk_id,
            doc_url,
            doc_title: doc_title.into(),
            header_path,
            text,
            kind,
        }
    }
}

/// Content hash of url, header path and text, as 32 lowercase hex digits.
pub fn chunk_id(doc_url: &str, header_path: &[String], text: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(doc_url.as_bytes());
    hasher.update([0x1f]);
    for header in header_path {
        hasher.update(header.as_bytes());
        hasher.update([0x1e]);
    }
    hasher.update([0x1f]);
    hasher.update(text.as_bytes());
    let digest = hasher.finalize();
    digest[..16].iter().map(|b| format!("{b:02x}")).collect()
}

/// Collapses every whitespace run to a single space and trims the ends.
pub fn normalize_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

use std::collections::HashSet;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use futures::stream::{self, StreamExt};
use serde::de::DeserializeOwned;
use serde::Serialize;
use tracing::{info, warn};

use super::{fetch_document, http_client, split_by_headers, Chunk, CorpusError, DocumentRecord, SourceEntry, SplitOptions};

#[derive(Debug, Clone)]
pub struct IngestOptions {
    pub split: SplitOptions,
    pub timeout: Duration,
    /// Maximum number of requests in flight.
    pub concurrency: usize,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self {
            split: SplitOptions::default(),
            timeout: Duration::from_secs(20),
            concurrency: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IngestFailure {
    pub url: String,
    pub error: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct IngestReport {
    pub pages: usize,
    pub chunks: usize,
    pub failures: Vec<IngestFailure>,
}

/// Fetches every entry, splits the pages and atomically writes the KB file.
pub async fn build_kb(
    entries: &[SourceEntry],
    out_path: &Path,
    opts: &IngestOptions,
) -> Result<IngestReport, CorpusError> {
    let client = http_client(opts.timeout);
    let fetched: Vec<_> = stream::iter(entries)
        .map(|entry| {
            let client = &client;
            async move { (entry, fetch_document(client, entry).await) }
        })
        .buffered(opts.concurrency.max(1))
        .collect()
        .await;

    let mut docs = Vec::new();
    let mut failures = Vec::new();
    for (entry, result) in fetched {
        match result {
            Ok(doc) => docs.push(doc),
            Err(e) => {
                warn!(url = %entry.url, error = %e, "skipping source page");
                failures.push(IngestFailure {
                    url: entry.url.clone(),
                    error: e.to_string(),
                });
            }
        }
    }

    let (chunks, split_failures) = chunk_documents(&docs, &opts.split);
    let pages = docs.len() - split_failures.len();
    failures.extend(split_failures);
    if pages == 0 {
        return Err(CorpusError::NoDocuments);
    }
    write_kb(out_path, &chunks)?;
    info!(pages, chunks = chunks.len(), failures = failures.len(), "knowledge base written");
    Ok(IngestReport {
        pages,
        chunks: chunks.len(),
        failures,
    })
}

/// Splits documents in order, dropping chunks whose id was already produced.
pub fn chunk_documents(docs: &[DocumentRecord], opts: &SplitOptions) -> (Vec<Chunk>, Vec<IngestFailure>) {
    let mut seen = HashSet::new();
    let mut chunks = Vec::new();
    let mut failures = Vec::new();
    for doc in docs {
        match split_by_headers(doc, opts) {
            Ok(doc_chunks) => chunks.extend(
                doc_chunks
                    .into_iter()
                    .filter(|c| seen.insert(c.chunk_id.clone())),
            ),
            Err(e) => failures.push(IngestFailure {
                url: doc.url.clone(),
                error: e.to_string(),
            }),
        }
    }
    (chunks, failures)
}

/// Writes chunks as JSON Lines via a temp file and rename.
pub fn write_kb(path: &Path, chunks: &[Chunk]) -> Result<(), CorpusError> {
    let io_err = |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(io_err)?;
    {
        let mut w = std::io::BufWriter::new(tmp.as_file_mut());
        for chunk in chunks {
            let line = serde_json::to_string(chunk).expect("chunk serializes");
            w.write_all(line.as_bytes()).map_err(io_err)?;
            w.write_all(b"\n").map_err(io_err)?;
        }
        w.flush().map_err(io_err)?;
    }
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

pub fn read_kb(path: &Path) -> Result<Vec<Chunk>, CorpusError> {
    read_jsonl(path)
}

pub fn read_manifest(path: &Path) -> Result<Vec<SourceEntry>, CorpusError> {
    let entries: Vec<SourceEntry> = read_jsonl(path)?;
    for entry in &entries {
        entry.validate()?;
    }
    Ok(entries)
}

pub(crate) fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, CorpusError> {
    let file = fs::File::open(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|source| CorpusError::Json {
            path: path.to_path_buf(),
            line: i + 1,
            source,
        })?);
    }
    Ok(out)
}

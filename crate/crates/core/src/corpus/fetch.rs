use std::time::Duration;

use chrono::Utc;
use reqwest::header::CONTENT_TYPE;

use super::{CorpusError, DocumentRecord, SourceEntry};

pub fn http_client(timeout: Duration) -> reqwest::Client {
    reqwest::Client::builder()
        .timeout(timeout)
        .user_agent(concat!("apr-ingest/", env!("CARGO_PKG_VERSION")))
        .build()
        .expect("static client configuration")
}

/// Downloads one source page. Responses without a content type are accepted.
pub async fn fetch_document(
    client: &reqwest::Client,
    entry: &SourceEntry,
) -> Result<DocumentRecord, CorpusError> {
    entry.validate()?;
    let fetch_err = |source| CorpusError::Fetch {
        url: entry.url.clone(),
        source,
    };
    let response = client.get(&entry.url).send().await.map_err(fetch_err)?;
    let status = response.status();
    if !status.is_success() {
        return Err(CorpusError::HttpStatus {
            url: entry.url.clone(),
            status: status.as_u16(),
        });
    }
    if let Some(ct) = response.headers().get(CONTENT_TYPE) {
        let ct = ct.to_str().unwrap_or_default().to_ascii_lowercase();
        if !(ct.starts_with("text/html") || ct.starts_with("application/xhtml+xml")) {
            return Err(CorpusError::UnsupportedContent {
                url: entry.url.clone(),
                content_type: ct,
            });
        }
    }
    let body = response.text().await.map_err(fetch_err)?;
    if body.trim().is_empty() {
        return Err(CorpusError::EmptyDocument {
            url: entry.url.clone(),
        });
    }
    Ok(DocumentRecord::from_html(entry, body, Utc::now()))
}

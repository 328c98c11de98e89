use std::time::Duration;

use async_trait::async_trait;
use serde::Deserialize;
use serde_json::json;

use super::{EmbedError, EmbeddingVector};
use crate::retry::RetryPolicy;

/// Dimension of [`HashingEmbedder`] vectors.
pub const STUB_DIM: usize = 256;

#[async_trait]
pub trait EmbeddingProvider: Send + Sync {
    fn name(&self) -> &str;

    /// Model identifier, used to key cached vectors.
    fn model(&self) -> &str {
        self.name()
    }

    fn dim(&self) -> usize;

    /// Largest number of texts sent in one call.
    fn max_batch(&self) -> usize {
        usize::MAX
    }

    async fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, EmbedError>;
}

/// Embeds `texts` in order, batching calls and validating every vector.
pub async fn embed(texts: &[String], provider: &dyn EmbeddingProvider) -> Result<Vec<EmbeddingVector>, EmbedError> {
    if let Some(index) = texts.iter().position(|t| t.trim().is_empty()) {
        return Err(EmbedError::EmptyText { index });
    }
    let mut out = Vec::with_capacity(texts.len());
    for batch in texts.chunks(provider.max_batch().max(1)) {
        let raw = provider.embed_batch(batch).await?;
        if raw.len() != batch.len() {
            return Err(EmbedError::CountMismatch {
                provider: provider.name().to_string(),
                expected: batch.len(),
                found: raw.len(),
            });
        }
        for values in raw {
            let vector = EmbeddingVector::new(values)?;
            if vector.dim() != provider.dim() {
                return Err(EmbedError::DimensionMismatch {
                    expected: provider.dim(),
                    found: vector.dim(),
                });
            }
            out.push(vector);
        }
    }
    Ok(out)
}

/// Deterministic offline embedder: hashed bag of words.
///
/// Text is split on non-alphanumeric characters and lowercased; each token
/// increments one of [`STUB_DIM`] buckets chosen by its FNV-1a hash, and the
/// count vector is L2-normalized. Text without tokens maps to the zero vector.
#[derive(Debug, Clone, Default)]
pub struct HashingEmbedder;

impl HashingEmbedder {
    pub const NAME: &'static str = "hashing-stub";

    pub fn vector(text: &str) -> Vec<f64> {
        let mut counts = vec![0.0; STUB_DIM];
        for token in text
            .split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
        {
            let token = token.to_lowercase();
            counts[(fnv1a(token.as_bytes()) % STUB_DIM as u64) as usize] += 1.0;
        }
        let norm = counts.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm > 0.0 {
            counts.iter_mut().for_each(|c| *c /= norm);
        }
        counts
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(*b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

#[async_trait]
impl EmbeddingProvider for HashingEmbedder {
    fn name(&self) -> &str {
        Self::NAME
    }

    fn dim(&self) -> usize {
        STUB_DIM
    }

    async fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, EmbedError> {
        Ok(texts.iter().map(|t| Self::vector(t)).collect())
    }
}

/// Client for an OpenAI-compatible `POST {base_url}/embeddings` endpoint.
#[derive(Debug, Clone)]
pub struct OpenAiEmbeddings {
    base_url: String,
    api_key: Option<String>,
    model: String,
    dim: usize,
    name: String,
    retry: RetryPolicy,
    client: reqwest::Client,
}

#[derive(Deserialize)]
struct EmbeddingResponse {
    data: Vec<EmbeddingDatum>,
}

#[derive(Deserialize)]
struct EmbeddingDatum {
    #[serde(default)]
    index: usize,
    embedding: Vec<f64>,
}

impl OpenAiEmbeddings {
    /// Creates a client for a model of known dimension.
    pub fn new(base_url: &str, api_key: Option<String>, model: &str, dim: usize, timeout: Duration) -> Self {
        Self {
            base_url: base_url.trim_end_matches('/').to_string(),
            api_key,
            model: model.to_string(),
            dim,
            name: format!("openai-embeddings:{model}"),
            retry: RetryPolicy::default(),
            client: reqwest::Client::builder()
                .timeout(timeout)
                .build()
                .expect("static client configuration"),
        }
    }

    /// Creates a client and learns the dimension from one probe request.
    pub async fn connect(
        base_url: &str,
        api_key: Option<String>,
        model: &str,
        timeout: Duration,
    ) -> Result<Self, EmbedError> {
        let mut this = Self::new(base_url, api_key, model, 0, timeout);
        let probe = this.request(&["dimension probe".to_string()]).await?;
        this.dim = probe.first().map(Vec::len).unwrap_or(0);
        if this.dim == 0 {
            return Err(EmbedError::EmptyVector);
        }
        Ok(this)
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    async fn request(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, EmbedError> {
        self.retry
            .run(EmbedError::is_transient, || self.request_once(texts))
            .await
    }

    async fn request_once(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, EmbedError> {
        let transport = |e: reqwest::Error| EmbedError::Transport {
            provider: self.name.clone(),
            message: e.to_string(),
        };
        let mut req = self
            .client
            .post(format!("{}/embeddings", self.base_url))
            .json(&json!({ "model": self.model, "input": texts }));
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().await.map_err(transport)?;
        let status = resp.status();
        if !status.is_success() {
            let message = resp.text().await.unwrap_or_default();
            return Err(EmbedError::Api {
                provider: self.name.clone(),
                status: status.as_u16(),
                message,
            });
        }
        let mut body: EmbeddingResponse = resp.json().await.map_err(transport)?;
        body.data.sort_by_key(|d| d.index);
        Ok(body.data.into_iter().map(|d| d.embedding).collect())
    }
}

#[async_trait]
impl EmbeddingProvider for OpenAiEmbeddings {
    fn name(&self) -> &str {
        &self.name
    }

    fn model(&self) -> &str {
        &self.model
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn max_batch(&self) -> usize {
        64
    }

    async fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, EmbedError> {
        self.request(texts).await
    }
}

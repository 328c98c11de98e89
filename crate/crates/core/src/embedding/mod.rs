//! Dense retrieval: embedding providers, cosine similarity and an exhaustive
//! top-k passage index.

mod cache;
mod index;
mod provider;

use thiserror::Error;

pub use cache::VectorCache;
pub use index::{build_index, build_index_cached, IndexEntry, PassageIndex, RetrievalConfig, ScoredPassage};
pub use provider::{embed, EmbeddingProvider, HashingEmbedder, OpenAiEmbeddings, STUB_DIM};

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("text #{index} is empty")]
    EmptyText { index: usize },
    #[error("vector has no components")]
    EmptyVector,
    #[error("vector component {index} is not finite")]
    NonFinite { index: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("zero-norm vector")]
    ZeroNorm,
    #[error("zero-norm embedding for chunk {0}")]
    ZeroNormChunk(String),
    #[error("duplicate chunk id {0}")]
    DuplicateChunk(String),
    #[error("cannot build an index from zero chunks")]
    EmptyIndex,
    #[error("provider {provider} returned {found} vectors for {expected} texts")]
    CountMismatch {
        provider: String,
        expected: usize,
        found: usize,
    },
    #[error("{provider}: transport error: {message}")]
    Transport { provider: String, message: String },
    #[error("{provider}: API error {status}: {message}")]
    Api {
        provider: String,
        status: u16,
        message: String,
    },
    #[error("invalid retrieval config: {0}")]
    InvalidConfig(String),
    #[error("vector cache: {0}")]
    Cache(String),
}

impl EmbedError {
    pub(crate) fn is_transient(&self) -> bool {
        match self {
            EmbedError::Transport { .. } => true,
            EmbedError::Api { status, .. } => *status == 429 || *status >= 500,
            _ => false,
        }
    }
}

/// A finite, non-empty vector of 64-bit components.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector(Vec<f64>);

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Result<Self, EmbedError> {
        if values.is_empty() {
            return Err(EmbedError::EmptyVector);
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(EmbedError::NonFinite { index });
        }
        Ok(Self(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }
}

impl TryFrom<Vec<f64>> for EmbeddingVector {
    type Error = EmbedError;

    fn try_from(values: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(values)
    }
}

/// Cosine similarity, clamped to [-1, 1].
pub fn cosine(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64, EmbedError> {
    if a.dim() != b.dim() {
        return Err(EmbedError::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return Err(EmbedError::ZeroNorm);
    }
    Ok(cosine_with_norms(a, na, b, nb))
}

pub(crate) fn cosine_with_norms(a: &EmbeddingVector, norm_a: f64, b: &EmbeddingVector, norm_b: f64) -> f64 {
    (a.dot(b) / (norm_a * norm_b)).clamp(-1.0, 1.0)
}

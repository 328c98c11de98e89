use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{cosine_with_norms, embed, EmbedError, EmbeddingProvider, EmbeddingVector, VectorCache};
use crate::corpus::Chunk;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetrievalConfig {
    pub top_k: usize,
    /// Results must score strictly above this value.
    pub score_threshold: f64,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        Self {
            top_k: 5,
            score_threshold: 0.7,
        }
    }
}

impl RetrievalConfig {
    pub fn new(top_k: usize, score_threshold: f64) -> Result<Self, EmbedError> {
        let cfg = Self {
            top_k,
            score_threshold,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), EmbedError> {
        if self.top_k == 0 {
            return Err(EmbedError::InvalidConfig("top_k must be at least 1".into()));
        }
        if !(-1.0..=1.0).contains(&self.score_threshold) {
            return Err(EmbedError::InvalidConfig(format!(
                "score_threshold {} outside [-1, 1]",
                self.score_threshold
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndexEntry {
    pub chunk_id: String,
    pub vector: EmbeddingVector,
    pub norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoredPassage {
    pub chunk: Chunk,
    pub score: f64,
}

/// Immutable in-memory index searched by exhaustive scan.
#[derive(Debug, Clone)]
pub struct PassageIndex {
    dim: usize,
    entries: Vec<IndexEntry>,
    chunks: Vec<Chunk>,
    by_id: HashMap<String, usize>,
}

/// Embeds every chunk's text and builds the index.
pub async fn build_index(chunks: Vec<Chunk>, provider: &dyn EmbeddingProvider) -> Result<PassageIndex, EmbedError> {
    check_ids(&chunks)?;
    let texts: Vec<String> = chunks.iter().map(|c| c.text.clone()).collect();
    let vectors = embed(&texts, provider).await?;
    PassageIndex::from_parts(chunks, vectors)
}

/// Like [`build_index`], reusing vectors from `cache` and adding new ones to it.
pub async fn build_index_cached(
    chunks: Vec<Chunk>,
    provider: &dyn EmbeddingProvider,
    cache: &mut VectorCache,
) -> Result<PassageIndex, EmbedError> {
    check_ids(&chunks)?;
    let missing: Vec<usize> = (0..chunks.len())
        .filter(|&i| cache.get(provider, &chunks[i].chunk_id).is_none())
        .collect();
    let texts: Vec<String> = missing.iter().map(|&i| chunks[i].text.clone()).collect();
    if !texts.is_empty() {
        let fresh = embed(&texts, provider).await?;
        for (&i, vector) in missing.iter().zip(fresh) {
            cache.insert(provider, &chunks[i].chunk_id, vector.values().to_vec());
        }
    }
    let vectors = chunks
        .iter()
        .map(|c| {
            let values = cache.get(provider, &c.chunk_id).expect("filled above").to_vec();
            let v = EmbeddingVector::new(values)?;
            if v.dim() != provider.dim() {
                return Err(EmbedError::DimensionMismatch {
                    expected: provider.dim(),
                    found: v.dim(),
                });
            }
            Ok(v)
        })
        .collect::<Result<Vec<_>, _>>()?;
    PassageIndex::from_parts(chunks, vectors)
}

fn check_ids(chunks: &[Chunk]) -> Result<(), EmbedError> {
    if chunks.is_empty() {
        return Err(EmbedError::EmptyIndex);
    }
    let mut seen = std::collections::HashSet::new();
    for c in chunks {
        if !seen.insert(c.chunk_id.as_str()) {
            return Err(EmbedError::DuplicateChunk(c.chunk_id.clone()));
        }
    }
    Ok(())
}

impl PassageIndex {
    /// Builds an index from precomputed vectors, one per chunk.
    pub fn from_parts(chunks: Vec<Chunk>, vectors: Vec<EmbeddingVector>) -> Result<Self, EmbedError> {
        check_ids(&chunks)?;
        if chunks.len() != vectors.len() {
            return Err(EmbedError::CountMismatch {
                provider: "index".into(),
                expected: chunks.len(),
                found: vectors.len(),
            });
        }
        let dim = vectors[0].dim();
        let mut entries = Vec::with_capacity(chunks.len());
        for (chunk, vector) in chunks.iter().zip(vectors) {
            if vector.dim() != dim {
                return Err(EmbedError::DimensionMismatch {
                    expected: dim,
                    found: vector.dim(),
                });
            }
            let norm = vector.norm();
            if norm == 0.0 {
                return Err(EmbedError::ZeroNormChunk(chunk.chunk_id.clone()));
            }
            entries.push(IndexEntry {
                chunk_id: chunk.chunk_id.clone(),
                vector,
                norm,
            });
        }
        let by_id = chunks
            .iter()
            .enumerate()
            .map(|(i, c)| (c.chunk_id.clone(), i))
            .collect();
        Ok(Self {
            dim,
            entries,
            chunks,
            by_id,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[IndexEntry] {
        &self.entries
    }

    pub fn chunks(&self) -> &[Chunk] {
        &self.chunks
    }

    pub fn chunk(&self, chunk_id: &str) -> Option<&Chunk> {
        self.by_id.get(chunk_id).map(|&i| &self.chunks[i])
    }

    /// Top `cfg.top_k` chunks scoring strictly above `cfg.score_threshold`,
    /// by descending score with ties broken by ascending chunk id.
    pub fn search(&self, query: &EmbeddingVector, cfg: &RetrievalConfig) -> Result<Vec<ScoredPassage>, EmbedError> {
        if query.dim() != self.dim {
            return Err(EmbedError::DimensionMismatch {
                expected: self.dim,
                found: query.dim(),
            });
        }
        let qnorm = query.norm();
        if qnorm == 0.0 {
            return Err(EmbedError::ZeroNorm);
        }
        let mut hits: Vec<(f64, usize)> = self
            .entries
            .iter()
            .enumerate()
            .map(|(i, e)| (cosine_with_norms(query, qnorm, &e.vector, e.norm), i))
            .filter(|(score, _)| *score > cfg.score_threshold)
            .collect();
        hits.sort_by(|a, b| {
            b.0.total_cmp(&a.0)
                .then_with(|| self.entries[a.1].chunk_id.cmp(&self.entries[b.1].chunk_id))
        });
        hits.truncate(cfg.top_k);
        Ok(hits
            .into_iter()
            .map(|(score, i)| ScoredPassage {
                chunk: self.chunks[i].clone(),
                score,
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::DocKind;
    use crate::embedding::HashingEmbedder;

    fn chunk(i: usize) -> Chunk {
        Chunk::new(format!("https://kb.example/{i}"), "T", vec![], format!("text {i}"), DocKind::Regular)
    }

    /// Index whose entries score exactly `scores` against the query (1, 0).
    fn scored_index(scores: &[f64]) -> (PassageIndex, EmbeddingVector) {
        let chunks: Vec<_> = (0..scores.len()).map(chunk).collect();
        let vectors = scores
            .iter()
            .map(|s| EmbeddingVector::new(vec![*s, (1.0 - s * s).sqrt()]).unwrap())
            .collect();
        (
            PassageIndex::from_parts(chunks, vectors).unwrap(),
            EmbeddingVector::new(vec![1.0, 0.0]).unwrap(),
        )
    }

    #[test]
    fn threshold_is_strict() {
        let (index, q) = scored_index(&[0.9, 0.8, 0.6]);
        let got: Vec<f64> = index.search(&q, &RetrievalConfig::default()).unwrap().iter().map(|p| p.score).collect();
        assert_eq!(got.len(), 2);
        assert!((got[0] - 0.9).abs() < 1e-12 && (got[1] - 0.8).abs() < 1e-12);

        let (index, q) = scored_index(&[0.75, 0.7, 0.6]);
        let cfg = RetrievalConfig::new(5, 0.75).unwrap();
        assert!(index.search(&q, &cfg).unwrap().is_empty());
    }

    #[test]
    fn top_k_caps_results() {
        let (index, q) = scored_index(&[0.99, 0.98, 0.97, 0.96, 0.95, 0.94, 0.93]);
        assert_eq!(index.search(&q, &RetrievalConfig::default()).unwrap().len(), 5);
    }

    #[test]
    fn nothing_above_threshold() {
        let (index, q) = scored_index(&[0.7, 0.5, 0.1]);
        assert!(index.search(&q, &RetrievalConfig::default()).unwrap().is_empty());
    }

    #[test]
    fn ties_break_by_chunk_id() {
        let (index, q) = scored_index(&[0.9, 0.9, 0.9]);
        let ids: Vec<_> = index
            .search(&q, &RetrievalConfig::default())
            .unwrap()
            .into_iter()
            .map(|p| p.chunk.chunk_id)
            .collect();
        let mut sorted = ids.clone();
        sorted.sort();
        assert_eq!(ids, sorted);
    }

    #[test]
    fn config_validation() {
        assert!(RetrievalConfig::new(0, 0.7).is_err());
        assert!(RetrievalConfig::new(5, 1.5).is_err());
        assert!(RetrievalConfig::new(1, -1.0).is_ok());
    }

    #[tokio::test]
    async fn build_and_lookup() {
        let chunks: Vec<_> = (0..30).map(chunk).collect();
        let index = build_index(chunks.clone(), &HashingEmbedder).await.unwrap();
        assert_eq!(index.len(), 30);
        assert_eq!(index.dim(), 256);
        assert_eq!(index.chunk(&chunks[7].chunk_id), Some(&chunks[7]));
        assert!(index.chunk("missing").is_none());
        for e in index.entries() {
            assert!((e.norm - e.vector.norm()).abs() <= 1e-12 * e.norm);
        }
        let again = build_index(chunks, &HashingEmbedder).await.unwrap();
        assert_eq!(index.entries(), again.entries());
    }

    #[tokio::test]
    async fn build_rejects_duplicates_and_empty() {
        let c = chunk(1);
        match build_index(vec![c.clone(), c.clone()], &HashingEmbedder).await {
            Err(EmbedError::DuplicateChunk(id)) => assert_eq!(id, c.chunk_id),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(build_index(vec![], &HashingEmbedder).await, Err(EmbedError::EmptyIndex)));
    }

    #[test]
    fn query_dimension_is_checked() {
        let (index, _) = scored_index(&[0.9]);
        let q = EmbeddingVector::new(vec![1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(
            index.search(&q, &RetrievalConfig::default()),
            Err(EmbedError::DimensionMismatch { expected: 2, found: 3 })
        ));
    }
}

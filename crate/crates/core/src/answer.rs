//! The extractive answer pipeline: decontextualize, decompose, retrieve per
//! sub-query, prune and deduplicate. Answers only ever contain KB passages.

use std::collections::HashMap;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::embedding::{embed, EmbedError, EmbeddingProvider, PassageIndex, RetrievalConfig, ScoredPassage};
use crate::llm::LlmError;
use crate::session::ChatSession;
use crate::understanding::{ChatTurn, QueryUnderstanding, StandaloneQuery, SubQuery, UnderstandingError};

/// Shown instead of passages when every sub-query was pruned.
pub const NO_RESULTS_MESSAGE: &str =
    "Sorry, I could not find any passage in the knowledge base that answers this question. Please try rephrasing it.";

#[derive(Debug, Error)]
pub enum AnswerError {
    #[error("user input is empty")]
    EmptyInput,
    #[error("language model failure: {0}")]
    Gateway(#[from] LlmError),
    #[error("retrieval configuration error: {0}")]
    Config(EmbedError),
    #[error("embedding provider failure: {0}")]
    Embedding(EmbedError),
    #[error("the RAG baseline needs at least one answer section")]
    NoContext,
}

impl From<UnderstandingError> for AnswerError {
    fn from(e: UnderstandingError) -> Self {
        match e {
            UnderstandingError::EmptyInput => AnswerError::EmptyInput,
            UnderstandingError::Gateway(g) => AnswerError::Gateway(g),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnswerSection {
    pub sub_query: SubQuery,
    pub passages: Vec<ScoredPassage>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Answer {
    pub sections: Vec<AnswerSection>,
    pub standalone_query: StandaloneQuery,
    pub no_results: bool,
}

impl Answer {
    /// What the conversation history records for this answer: the sub-query
    /// texts shown to the user, or the standalone query when nothing was found.
    pub fn history_text(&self) -> String {
        if self.no_results {
            self.standalone_query.text.clone()
        } else {
            self.sections
                .iter()
                .map(|s| s.sub_query.text.as_str())
                .collect::<Vec<_>>()
                .join("; ")
        }
    }

    pub fn passages(&self) -> impl Iterator<Item = &ScoredPassage> {
        self.sections.iter().flat_map(|s| s.passages.iter())
    }
}

/// Generated text for comparison experiments only; never served to chat users.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RagBaselineAnswer {
    pub synthesized_text: String,
    pub context_chunk_ids: Vec<String>,
    pub flagged_experimental: bool,
}

#[derive(Clone)]
pub struct AnswerEngine {
    index: Arc<PassageIndex>,
    embedder: Arc<dyn EmbeddingProvider>,
    understanding: QueryUnderstanding,
    retrieval: RetrievalConfig,
}

impl std::fmt::Debug for AnswerEngine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AnswerEngine")
            .field("chunks", &self.index.len())
            .field("embedder", &self.embedder.name())
            .field("retrieval", &self.retrieval)
            .finish()
    }
}

impl AnswerEngine {
    pub fn new(
        index: Arc<PassageIndex>,
        embedder: Arc<dyn EmbeddingProvider>,
        understanding: QueryUnderstanding,
        retrieval: RetrievalConfig,
    ) -> Result<Self, AnswerError> {
        retrieval.validate().map_err(AnswerError::Config)?;
        if embedder.dim() != index.dim() {
            return Err(AnswerError::Config(EmbedError::DimensionMismatch {
                expected: index.dim(),
                found: embedder.dim(),
            }));
        }
        Ok(Self {
            index,
            embedder,
            understanding,
            retrieval,
        })
    }

    pub fn index(&self) -> &Arc<PassageIndex> {
        &self.index
    }

    pub fn embedder(&self) -> &Arc<dyn EmbeddingProvider> {
        &self.embedder
    }

    pub fn understanding(&self) -> &QueryUnderstanding {
        &self.understanding
    }

    pub fn retrieval(&self) -> &RetrievalConfig {
        &self.retrieval
    }

    pub async fn answer(&self, history: &[ChatTurn], user_input: &str) -> Result<Answer, AnswerError> {
        if user_input.trim().is_empty() {
            return Err(AnswerError::EmptyInput);
        }
        let standalone = self.understanding.decontextualize(history, user_input).await?;
        let sub_queries = self.understanding.decompose(&standalone).await?;
        let sections = self.retrieve(sub_queries, &self.retrieval).await?;
        Ok(Answer {
            no_results: sections.is_empty(),
            sections,
            standalone_query: standalone,
        })
    }

    /// Answers against the session's history, then appends the user turn and
    /// the assistant turn. The session is left untouched on error.
    pub async fn answer_in_session(&self, session: &mut ChatSession, user_input: &str) -> Result<Answer, AnswerError> {
        let answer = self.answer(&session.turns, user_input).await?;
        session.push(ChatTurn::user(user_input));
        session.push(ChatTurn::assistant(answer.history_text()));
        Ok(answer)
    }

    /// Passages for one text, without query understanding.
    pub async fn search_text(&self, text: &str, cfg: &RetrievalConfig) -> Result<Vec<ScoredPassage>, AnswerError> {
        let vectors = embed(&[text.to_string()], self.embedder.as_ref())
            .await
            .map_err(AnswerError::Embedding)?;
        match self.index.search(&vectors[0], cfg) {
            Ok(hits) => Ok(hits),
            Err(EmbedError::ZeroNorm) => Ok(Vec::new()),
            Err(e) => Err(AnswerError::Config(e)),
        }
    }

    /// Retrieves passages for each sub-query. Sections with no passage are
    /// dropped, and a chunk found by several sub-queries stays only in the
    /// section where it scored highest (the earliest one on ties).
    pub async fn retrieve(&self, sub_queries: Vec<SubQuery>, cfg: &RetrievalConfig) -> Result<Vec<AnswerSection>, AnswerError> {
        if sub_queries.is_empty() {
            return Ok(Vec::new());
        }
        let texts: Vec<String> = sub_queries.iter().map(|q| q.text.clone()).collect();
        let vectors = embed(&texts, self.embedder.as_ref())
            .await
            .map_err(AnswerError::Embedding)?;

        let mut sections = Vec::with_capacity(sub_queries.len());
        for (sub_query, vector) in sub_queries.into_iter().zip(&vectors) {
            let passages = match self.index.search(vector, cfg) {
                Ok(hits) => hits,
                // a query without tokens cannot match anything
                Err(EmbedError::ZeroNorm) => Vec::new(),
                Err(e) => return Err(AnswerError::Config(e)),
            };
            sections.push(AnswerSection { sub_query, passages });
        }

        let mut best: HashMap<&str, (f64, usize)> = HashMap::new();
        for (si, section) in sections.iter().enumerate() {
            for p in &section.passages {
                let entry = best.entry(p.chunk.chunk_id.as_str()).or_insert((p.score, si));
                if p.score > entry.0 {
                    *entry = (p.score, si);
                }
            }
        }
        let keep: HashMap<String, usize> = best.into_iter().map(|(id, (_, si))| (id.to_string(), si)).collect();
        for (si, section) in sections.iter_mut().enumerate() {
            section.passages.retain(|p| keep[&p.chunk.chunk_id] == si);
        }
        sections.retain(|s| !s.passages.is_empty());
        Ok(sections)
    }

    /// Generates a synthesized answer from the passages of `answer`.
    pub async fn rag_baseline(&self, answer: &Answer) -> Result<RagBaselineAnswer, AnswerError> {
        if answer.sections.is_empty() {
            return Err(AnswerError::NoContext);
        }
        let passages: Vec<&ScoredPassage> = answer.passages().collect();
        let context = passages
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let flat = p.chunk.text.split_whitespace().collect::<Vec<_>>().join(" ");
                format!("[{}] {flat}", i + 1)
            })
            .collect::<Vec<_>>()
            .join("\n");
        let prompt = self
            .understanding
            .templates()
            .render_rag(&context, &answer.standalone_query.text);
        let out = self.understanding.gateway().complete_prompt(prompt).await?;
        Ok(RagBaselineAnswer {
            synthesized_text: out.text,
            context_chunk_ids: passages.iter().map(|p| p.chunk.chunk_id.clone()).collect(),
            flagged_experimental: true,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Chunk, DocKind};
    use crate::embedding::{EmbeddingVector, HashingEmbedder};
    use crate::llm::{Gateway, PromptTemplates};

    fn chunk(text: &str) -> Chunk {
        Chunk::new("https://kb.example/doc", "Doc", vec![], text, DocKind::Regular)
    }

    async fn engine(texts: &[&str]) -> AnswerEngine {
        let chunks = texts.iter().map(|t| chunk(t)).collect();
        let index = crate::embedding::build_index(chunks, &HashingEmbedder).await.unwrap();
        AnswerEngine::new(
            Arc::new(index),
            Arc::new(HashingEmbedder),
            QueryUnderstanding::new(Arc::new(Gateway::stub()), PromptTemplates::default()),
            RetrievalConfig::default(),
        )
        .unwrap()
    }

    fn sq(text: &str, ordinal: u8) -> SubQuery {
        SubQuery { text: text.into(), ordinal }
    }

    #[tokio::test]
    async fn shared_chunk_stays_in_best_section() {
        let e = engine(&["lost bag delayed flight", "weather"]).await;
        let cfg = RetrievalConfig::new(5, 0.1).unwrap();
        let sections = e
            .retrieve(vec![sq("lost bag", 1), sq("lost bag delayed flight", 2)], &cfg)
            .await
            .unwrap();
        // the exact match in section 2 wins, leaving section 1 empty and pruned
        assert_eq!(sections.len(), 1);
        assert_eq!(sections[0].sub_query.ordinal, 2);
        assert!((sections[0].passages[0].score - 1.0).abs() < 1e-12);
    }

    #[tokio::test]
    async fn tie_keeps_earliest_section() {
        let e = engine(&["lost bag"]).await;
        let sections = e
            .retrieve(vec![sq("lost bag", 1), sq("Lost BAG!", 2)], &RetrievalConfig::default())
            .await
            .unwrap();
        assert_eq!(sections.len(), 1);
        assert_eq!(sections[0].sub_query.ordinal, 1);
    }

    #[tokio::test]
    async fn punctuation_only_query_is_pruned() {
        let e = engine(&["lost bag"]).await;
        let sections = e.retrieve(vec![sq("???", 1)], &RetrievalConfig::default()).await.unwrap();
        assert!(sections.is_empty());
    }

    #[tokio::test]
    async fn no_match_gives_no_results() {
        let e = engine(&["lost bag"]).await;
        let a = e.answer(&[], "quantum chromodynamics").await.unwrap();
        assert!(a.no_results);
        assert!(a.sections.is_empty());
        assert_eq!(a.history_text(), "quantum chromodynamics");
    }

    #[tokio::test]
    async fn session_grows_by_two_turns() {
        let e = engine(&["lost bag"]).await;
        let mut s = ChatSession::new();
        e.answer_in_session(&mut s, "lost bag").await.unwrap();
        assert_eq!(s.turns.len(), 2);
        assert_eq!(s.turns[1].content, "Lost bag?");
        assert!(matches!(e.answer_in_session(&mut s, " ").await, Err(AnswerError::EmptyInput)));
        assert_eq!(s.turns.len(), 2);
    }

    #[tokio::test]
    async fn rag_baseline_needs_context() {
        let e = engine(&["lost bag"]).await;
        let empty = e.answer(&[], "nothing matches here").await.unwrap();
        assert!(matches!(e.rag_baseline(&empty).await, Err(AnswerError::NoContext)));
        let a = e.answer(&[], "lost bag").await.unwrap();
        let rag = e.rag_baseline(&a).await.unwrap();
        assert!(rag.flagged_experimental);
        assert_eq!(rag.synthesized_text, "lost bag");
        assert_eq!(rag.context_chunk_ids, vec![chunk("lost bag").chunk_id]);
    }

    #[tokio::test]
    async fn embedder_dimension_must_match_index() {
        let index = PassageIndex::from_parts(vec![chunk("x")], vec![EmbeddingVector::new(vec![1.0, 0.0]).unwrap()]).unwrap();
        let err = AnswerEngine::new(
            Arc::new(index),
            Arc::new(HashingEmbedder),
            QueryUnderstanding::new(Arc::new(Gateway::stub()), PromptTemplates::default()),
            RetrievalConfig::default(),
        );
        assert!(matches!(err, Err(AnswerError::Config(EmbedError::DimensionMismatch { .. }))));
    }
}

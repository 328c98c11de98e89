use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use thiserror::Error;

use crate::answer::AnswerEngine;
use crate::corpus::{read_kb, CorpusError};
use crate::embedding::{
    build_index, build_index_cached, EmbeddingProvider, HashingEmbedder, OpenAiEmbeddings, RetrievalConfig, VectorCache,
};
use crate::llm::{CompletionProvider, Gateway, GatewayConfig, OpenAiChat, PromptTemplates, RuleBasedLlm};
use crate::understanding::QueryUnderstanding;

pub const DEFAULT_SESSION_TTL: Duration = Duration::from_secs(2 * 60 * 60);
pub const DEFAULT_HISTORY_WINDOW: usize = 10;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("cannot load knowledge base: {0}")]
    Kb(#[from] CorpusError),
    #[error("cannot start providers or index: {0}")]
    Engine(String),
    #[error("{0}")]
    Runtime(String),
}

impl ServiceError {
    /// Process exit code: 1 for configuration problems, 2 for failures at run time.
    pub fn exit_code(&self) -> i32 {
        match self {
            ServiceError::Invalid(_) | ServiceError::Kb(_) => 1,
            ServiceError::Engine(_) | ServiceError::Runtime(_) => 2,
        }
    }
}

/// Which embedding and completion backends to use.
#[derive(Debug, Clone)]
pub struct ProviderSettings {
    pub use_stub: bool,
    pub llm_base_url: Option<String>,
    pub llm_model: String,
    pub api_key: Option<String>,
    pub embed_model: String,
    pub request_timeout: Duration,
    pub deadline: Duration,
}

impl Default for ProviderSettings {
    fn default() -> Self {
        Self {
            use_stub: true,
            llm_base_url: None,
            llm_model: "gpt-4".into(),
            api_key: None,
            embed_model: "text-embedding-3-small".into(),
            request_timeout: Duration::from_secs(20),
            deadline: Duration::from_secs(30),
        }
    }
}

impl ProviderSettings {
    pub fn stub() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<(), ServiceError> {
        if !self.use_stub && self.llm_base_url.as_deref().is_none_or(|u| u.trim().is_empty()) {
            return Err(ServiceError::Invalid(
                "remote providers need a base url (APR_LLM_BASE_URL) or stub mode (APR_USE_STUB_PROVIDERS=true)".into(),
            ));
        }
        if let Some(url) = &self.llm_base_url {
            url::Url::parse(url).map_err(|e| ServiceError::Invalid(format!("bad llm base url {url}: {e}")))?;
        }
        Ok(())
    }

    /// Names reported by the health endpoint, embedder first.
    pub fn provider_names(&self) -> Vec<String> {
        if self.use_stub {
            vec![HashingEmbedder::NAME.to_string(), RuleBasedLlm::NAME.to_string()]
        } else {
            vec![format!("openai-embeddings:{}", self.embed_model), "openai-chat".to_string()]
        }
    }

    pub fn gateway_config(&self) -> GatewayConfig {
        GatewayConfig {
            model: self.llm_model.clone(),
            deadline: self.deadline,
            ..GatewayConfig::default()
        }
    }

    pub async fn embedder(&self) -> Result<Arc<dyn EmbeddingProvider>, ServiceError> {
        if self.use_stub {
            return Ok(Arc::new(HashingEmbedder));
        }
        let base = self.llm_base_url.as_deref().unwrap_or_default();
        let client = OpenAiEmbeddings::connect(base, self.api_key.clone(), &self.embed_model, self.request_timeout)
            .await
            .map_err(|e| ServiceError::Engine(e.to_string()))?;
        Ok(Arc::new(client))
    }

    pub fn completion(&self) -> Arc<dyn CompletionProvider> {
        if self.use_stub {
            Arc::new(RuleBasedLlm)
        } else {
            let base = self.llm_base_url.as_deref().unwrap_or_default();
            Arc::new(OpenAiChat::new(base, self.api_key.clone(), self.request_timeout))
        }
    }
}

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub bind: SocketAddr,
    pub kb_path: PathBuf,
    pub providers: ProviderSettings,
    pub retrieval: RetrievalConfig,
    pub history_window: usize,
    pub session_ttl: Duration,
    /// When set, every endpoint except health requires this value in the
    /// `x-apr-secret` header.
    pub shared_secret: Option<String>,
    pub session_snapshot: Option<PathBuf>,
    pub vector_cache: Option<PathBuf>,
    pub templates_dir: Option<PathBuf>,
}

impl ServiceConfig {
    pub fn new(kb_path: impl Into<PathBuf>) -> Self {
        Self {
            bind: SocketAddr::from(([127, 0, 0, 1], 8080)),
            kb_path: kb_path.into(),
            providers: ProviderSettings::default(),
            retrieval: RetrievalConfig::default(),
            history_window: DEFAULT_HISTORY_WINDOW,
            session_ttl: DEFAULT_SESSION_TTL,
            shared_secret: None,
            session_snapshot: None,
            vector_cache: None,
            templates_dir: None,
        }
    }

    pub fn validate(&self) -> Result<(), ServiceError> {
        self.retrieval.validate().map_err(|e| ServiceError::Invalid(e.to_string()))?;
        self.providers.validate()?;
        if self.session_ttl.is_zero() {
            return Err(ServiceError::Invalid("session ttl must be positive".into()));
        }
        if !self.kb_path.is_file() {
            return Err(ServiceError::Invalid(format!(
                "knowledge base file {} does not exist",
                self.kb_path.display()
            )));
        }
        Ok(())
    }
}

/// Loads the knowledge base, embeds it and wires the answer engine.
pub async fn build_engine(config: &ServiceConfig) -> Result<AnswerEngine, ServiceError> {
    let chunks = read_kb(&config.kb_path)?;
    if chunks.is_empty() {
        return Err(ServiceError::Kb(CorpusError::NoDocuments));
    }
    let embedder = config.providers.embedder().await?;
    let index = match &config.vector_cache {
        Some(path) => {
            let mut cache = VectorCache::open(path).map_err(|e| ServiceError::Engine(e.to_string()))?;
            let index = build_index_cached(chunks, embedder.as_ref(), &mut cache).await;
            cache.save().map_err(|e| ServiceError::Engine(e.to_string()))?;
            index
        }
        None => build_index(chunks, embedder.as_ref()).await,
    }
    .map_err(|e| ServiceError::Engine(e.to_string()))?;
    let templates = match &config.templates_dir {
        Some(dir) => PromptTemplates::from_dir(dir).map_err(|e| ServiceError::Invalid(e.to_string()))?,
        None => PromptTemplates::default(),
    };
    let gateway = Arc::new(Gateway::new(config.providers.completion(), config.providers.gateway_config()));
    let understanding = QueryUnderstanding::new(gateway, templates).with_history_window(config.history_window);
    AnswerEngine::new(Arc::new(index), embedder, understanding, config.retrieval)
        .map_err(|e| ServiceError::Invalid(e.to_string()))
}

//! Chat-completion gateway: provider contract, retries, deadline and
//! concurrency limits, plus the prompt templates used by query understanding.

mod openai;
mod stub;
mod templates;

use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use async_trait::async_trait;
use thiserror::Error;
use tokio::sync::Semaphore;

use crate::retry::RetryPolicy;

pub use openai::OpenAiChat;
pub use stub::RuleBasedLlm;
pub use templates::{render, PromptTemplates};

pub const DEFAULT_TEMPERATURE: f64 = 0.0;
pub const DEFAULT_MAX_TOKENS: u32 = 300;

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("invalid completion request: {0}")]
    InvalidRequest(String),
    #[error("{provider}: request timed out")]
    Timeout { provider: String },
    #[error("{provider}: deadline of {deadline:?} exceeded")]
    DeadlineExceeded { provider: String, deadline: Duration },
    #[error("{provider}: transport error: {message}")]
    Transport { provider: String, message: String },
    #[error("{provider}: API error {status}: {message}")]
    Api {
        provider: String,
        status: u16,
        message: String,
    },
    #[error("prompt template: {0}")]
    Template(String),
}

impl LlmError {
    pub fn is_transient(&self) -> bool {
        match self {
            LlmError::Timeout { .. } | LlmError::Transport { .. } => true,
            LlmError::Api { status, .. } => *status == 429 || *status >= 500,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompletionRequest {
    pub prompt: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub model: String,
}

impl CompletionRequest {
    pub fn new(prompt: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            prompt: prompt.into(),
            temperature: DEFAULT_TEMPERATURE,
            max_tokens: DEFAULT_MAX_TOKENS,
            model: model.into(),
        }
    }

    pub fn validate(&self) -> Result<(), LlmError> {
        if self.prompt.trim().is_empty() {
            return Err(LlmError::InvalidRequest("prompt is empty".into()));
        }
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return Err(LlmError::InvalidRequest(format!("temperature {} is not a non-negative number", self.temperature)));
        }
        if self.max_tokens == 0 {
            return Err(LlmError::InvalidRequest("max_tokens must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompletionResult {
    pub text: String,
    pub provider_name: String,
    pub latency: Duration,
}

#[async_trait]
pub trait CompletionProvider: Send + Sync {
    fn name(&self) -> &str;

    /// One attempt; retries and deadlines are the gateway's job.
    async fn complete(&self, req: &CompletionRequest) -> Result<String, LlmError>;
}

#[derive(Debug, Clone)]
pub struct GatewayConfig {
    pub model: String,
    pub temperature: f64,
    pub max_tokens: u32,
    /// Total time allowed for one completion, retries included.
    pub deadline: Duration,
    pub retry: RetryPolicy,
    pub max_in_flight: usize,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        Self {
            model: "gpt-4".into(),
            temperature: DEFAULT_TEMPERATURE,
            max_tokens: DEFAULT_MAX_TOKENS,
            deadline: Duration::from_secs(30),
            retry: RetryPolicy::default(),
            max_in_flight: 8,
        }
    }
}

pub struct Gateway {
    provider: Arc<dyn CompletionProvider>,
    config: GatewayConfig,
    permits: Semaphore,
}

impl std::fmt::Debug for Gateway {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Gateway")
            .field("provider", &self.provider.name())
            .field("config", &self.config)
            .finish()
    }
}

impl Gateway {
    pub fn new(provider: Arc<dyn CompletionProvider>, config: GatewayConfig) -> Self {
        let permits = Semaphore::new(config.max_in_flight.max(1));
        Self {
            provider,
            config,
            permits,
        }
    }

    /// Gateway over the offline rule-based provider with default settings.
    pub fn stub() -> Self {
        Self::new(Arc::new(RuleBasedLlm), GatewayConfig::default())
    }

    pub fn provider_name(&self) -> &str {
        self.provider.name()
    }

    pub fn config(&self) -> &GatewayConfig {
        &self.config
    }

    /// A request for `prompt` carrying the configured model and sampling defaults.
    pub fn request(&self, prompt: impl Into<String>) -> CompletionRequest {
        CompletionRequest {
            prompt: prompt.into(),
            temperature: self.config.temperature,
            max_tokens: self.config.max_tokens,
            model: self.config.model.clone(),
        }
    }

    pub async fn complete_prompt(&self, prompt: impl Into<String>) -> Result<CompletionResult, LlmError> {
        self.complete(&self.request(prompt)).await
    }

    /// Returns the provider's text verbatim.
    pub async fn complete(&self, req: &CompletionRequest) -> Result<CompletionResult, LlmError> {
        req.validate()?;
        let name = self.provider.name().to_string();
        let started = Instant::now();
        let deadline = self.config.deadline;
        let attempt = async {
            let _permit = self.permits.acquire().await.expect("semaphore never closed");
            self.config
                .retry
                .run(LlmError::is_transient, || self.provider.complete(req))
                .await
        };
        let text = match tokio::time::timeout(deadline, attempt).await {
            Ok(Ok(text)) => text,
            Ok(Err(LlmError::Timeout { .. })) | Err(_) => {
                return Err(LlmError::DeadlineExceeded { provider: name, deadline })
            }
            Ok(Err(e)) => return Err(e),
        };
        Ok(CompletionResult {
            text,
            provider_name: name,
            latency: started.elapsed(),
        })
    }
}

/// Wraps a provider and keeps a copy of every request it receives.
pub struct RecordingProvider<P> {
    inner: P,
    requests: Mutex<Vec<CompletionRequest>>,
}

impl<P> RecordingProvider<P> {
    pub fn new(inner: P) -> Self {
        Self {
            inner,
            requests: Mutex::new(Vec::new()),
        }
    }

    pub fn requests(&self) -> Vec<CompletionRequest> {
        self.requests.lock().expect("poisoned").clone()
    }
}

#[async_trait]
impl<P: CompletionProvider> CompletionProvider for RecordingProvider<P> {
    fn name(&self) -> &str {
        self.inner.name()
    }

    async fn complete(&self, req: &CompletionRequest) -> Result<String, LlmError> {
        self.requests.lock().expect("poisoned").push(req.clone());
        self.inner.complete(req).await
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    struct Scripted {
        fail_first: usize,
        error: fn() -> LlmError,
        calls: AtomicUsize,
        reply: &'static str,
    }

    #[async_trait]
    impl CompletionProvider for Scripted {
        fn name(&self) -> &str {
            "scripted"
        }
        async fn complete(&self, _req: &CompletionRequest) -> Result<String, LlmError> {
            let n = self.calls.fetch_add(1, Ordering::SeqCst);
            if n < self.fail_first {
                Err((self.error)())
            } else {
                Ok(self.reply.to_string())
            }
        }
    }

    fn fast() -> GatewayConfig {
        GatewayConfig {
            retry: RetryPolicy {
                max_retries: 3,
                initial: Duration::from_millis(1),
                max_delay: Duration::from_millis(4),
            },
            ..GatewayConfig::default()
        }
    }

    #[tokio::test]
    async fn output_is_verbatim() {
        let p = Arc::new(Scripted {
            fail_first: 0,
            error: || unreachable!(),
            calls: AtomicUsize::new(0),
            reply: "  1. A?\n\n",
        });
        let g = Gateway::new(p, fast());
        let r = g.complete_prompt("hello").await.unwrap();
        assert_eq!(r.text, "  1. A?\n\n");
        assert_eq!(r.provider_name, "scripted");
    }

    #[tokio::test]
    async fn transient_errors_are_retried() {
        let p = Arc::new(Scripted {
            fail_first: 3,
            error: || LlmError::Api {
                provider: "scripted".into(),
                status: 503,
                message: "busy".into(),
            },
            calls: AtomicUsize::new(0),
            reply: "ok",
        });
        let g = Gateway::new(p.clone(), fast());
        assert_eq!(g.complete_prompt("x").await.unwrap().text, "ok");
        assert_eq!(p.calls.load(Ordering::SeqCst), 4);
    }

    #[tokio::test]
    async fn auth_errors_surface_immediately() {
        let p = Arc::new(Scripted {
            fail_first: 10,
            error: || LlmError::Api {
                provider: "scripted".into(),
                status: 401,
                message: "invalid api key".into(),
            },
            calls: AtomicUsize::new(0),
            reply: "ok",
        });
        let g = Gateway::new(p.clone(), fast());
        let err = g.complete_prompt("x").await.unwrap_err();
        assert!(err.to_string().contains("invalid api key"));
        assert_eq!(p.calls.load(Ordering::SeqCst), 1);
    }

    #[tokio::test]
    async fn repeated_timeouts_become_deadline_error() {
        let p = Arc::new(Scripted {
            fail_first: 10,
            error: || LlmError::Timeout {
                provider: "scripted".into(),
            },
            calls: AtomicUsize::new(0),
            reply: "ok",
        });
        let g = Gateway::new(p.clone(), fast());
        match g.complete_prompt("x").await {
            Err(LlmError::DeadlineExceeded { provider, .. }) => assert_eq!(provider, "scripted"),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(p.calls.load(Ordering::SeqCst), 4);
    }

    struct Hang;

    #[async_trait]
    impl CompletionProvider for Hang {
        fn name(&self) -> &str {
            "hang"
        }
        async fn complete(&self, _req: &CompletionRequest) -> Result<String, LlmError> {
            tokio::time::sleep(Duration::from_secs(3600)).await;
            Ok(String::new())
        }
    }

    #[tokio::test(start_paused = true)]
    async fn total_deadline_is_enforced() {
        let g = Gateway::new(Arc::new(Hang), GatewayConfig::default());
        assert!(matches!(
            g.complete_prompt("x").await,
            Err(LlmError::DeadlineExceeded { deadline, .. }) if deadline == Duration::from_secs(30)
        ));
    }

    #[tokio::test]
    async fn defaults_are_temperature_zero_and_300_tokens() {
        let rec = Arc::new(RecordingProvider::new(RuleBasedLlm));
        let g = Gateway::new(rec.clone(), GatewayConfig::default());
        g.complete_prompt("anything").await.unwrap();
        let reqs = rec.requests();
        assert_eq!(reqs.len(), 1);
        assert_eq!(reqs[0].temperature, 0.0);
        assert_eq!(reqs[0].max_tokens, 300);
    }

    #[tokio::test]
    async fn invalid_requests_are_rejected() {
        let g = Gateway::stub();
        assert!(g.complete_prompt("   ").await.is_err());
        let mut req = g.request("x");
        req.temperature = -0.5;
        assert!(g.complete(&req).await.is_err());
        req.temperature = 0.0;
        req.max_tokens = 0;
        assert!(g.complete(&req).await.is_err());
    }
}

//! HTTP API: sessions, chat, chunk lookup and health.

mod config;
mod sessions;

use std::net::SocketAddr;
use std::sync::{Arc, RwLock};
use std::time::Duration;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path as UrlPath, Request, State};
use axum::http::StatusCode;
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tracing::{error, info};

use crate::answer::{Answer, AnswerEngine, AnswerError};
use crate::corpus::Chunk;

pub use config::{build_engine, ProviderSettings, ServiceConfig, ServiceError, DEFAULT_HISTORY_WINDOW, DEFAULT_SESSION_TTL};
pub use sessions::{SessionStore, SharedSession};

pub const SECRET_HEADER: &str = "x-apr-secret";

/// Passage as sent to clients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassagePayload {
    pub chunk_id: String,
    pub text: String,
    pub score: f64,
    pub doc_title: String,
    pub doc_url: String,
    pub header_path: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionPayload {
    pub sub_query: String,
    pub passages: Vec<PassagePayload>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerPayload {
    pub standalone_query: String,
    pub no_results: bool,
    pub sections: Vec<SectionPayload>,
}

impl From<&Answer> for AnswerPayload {
    fn from(answer: &Answer) -> Self {
        Self {
            standalone_query: answer.standalone_query.text.clone(),
            no_results: answer.no_results,
            sections: answer
                .sections
                .iter()
                .map(|s| SectionPayload {
                    sub_query: s.sub_query.text.clone(),
                    passages: s
                        .passages
                        .iter()
                        .map(|p| PassagePayload {
                            chunk_id: p.chunk.chunk_id.clone(),
                            text: p.chunk.text.clone(),
                            score: (p.score * 1e4).round() / 1e4,
                            doc_title: p.chunk.doc_title.clone(),
                            doc_url: p.chunk.doc_url.clone(),
                            header_path: p.chunk.header_path.clone(),
                        })
                        .collect(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct ChatRequest {
    pub session_id: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionCreated {
    pub session_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub kb_chunks: usize,
    pub provider_names: Vec<String>,
}

/// JSON error body: `{"error": {"code": ..., "message": ...}}`.
#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
        }
    }

    fn not_ready() -> Self {
        Self::new(StatusCode::SERVICE_UNAVAILABLE, "index_not_loaded", "the knowledge base is still loading")
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (
            self.status,
            Json(json!({ "error": { "code": self.code, "message": self.message } })),
        )
            .into_response()
    }
}

impl From<AnswerError> for ApiError {
    fn from(e: AnswerError) -> Self {
        match e {
            AnswerError::EmptyInput => ApiError::new(StatusCode::BAD_REQUEST, "empty_message", e.to_string()),
            AnswerError::Gateway(_) => ApiError::new(StatusCode::BAD_GATEWAY, "gateway_failure", e.to_string()),
            AnswerError::Embedding(_) => ApiError::new(StatusCode::BAD_GATEWAY, "embedding_failure", e.to_string()),
            AnswerError::Config(_) | AnswerError::NoContext => {
                ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "configuration_error", e.to_string())
            }
        }
    }
}

/// Shared state: the engine (absent while loading), sessions and settings.
#[derive(Debug)]
pub struct AppState {
    engine: RwLock<Option<Arc<AnswerEngine>>>,
    sessions: SessionStore,
    provider_names: Vec<String>,
    shared_secret: Option<String>,
}

impl AppState {
    pub fn new(provider_names: Vec<String>, session_ttl: Duration, shared_secret: Option<String>) -> Self {
        Self {
            engine: RwLock::new(None),
            sessions: SessionStore::new(session_ttl),
            provider_names,
            shared_secret,
        }
    }

    pub fn with_engine(engine: AnswerEngine, session_ttl: Duration) -> Self {
        let names = vec![
            engine.embedder().name().to_string(),
            engine.understanding().gateway().provider_name().to_string(),
        ];
        let state = Self::new(names, session_ttl, None);
        state.set_engine(engine);
        state
    }

    pub fn set_engine(&self, engine: AnswerEngine) {
        *self.engine.write().expect("poisoned") = Some(Arc::new(engine));
    }

    pub fn engine(&self) -> Option<Arc<AnswerEngine>> {
        self.engine.read().expect("poisoned").clone()
    }

    pub fn sessions(&self) -> &SessionStore {
        &self.sessions
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    let guarded = Router::new()
        .route("/api/sessions", post(create_session))
        .route("/api/chat", post(chat))
        .route("/api/chunks/{chunk_id}", get(get_chunk))
        .route_layer(middleware::from_fn_with_state(state.clone(), require_secret));
    Router::new()
        .route("/api/health", get(health))
        .merge(guarded)
        .with_state(state)
}

async fn require_secret(State(state): State<Arc<AppState>>, req: Request, next: Next) -> Response {
    if let Some(secret) = &state.shared_secret {
        let given = req.headers().get(SECRET_HEADER).and_then(|v| v.to_str().ok());
        if given != Some(secret.as_str()) {
            return ApiError::new(StatusCode::UNAUTHORIZED, "unauthorized", "missing or wrong shared secret")
                .into_response();
        }
    }
    next.run(req).await
}

async fn health(State(state): State<Arc<AppState>>) -> Json<Health> {
    let engine = state.engine();
    Json(Health {
        status: if engine.is_some() { "ok" } else { "starting" }.to_string(),
        kb_chunks: engine.map(|e| e.index().len()).unwrap_or(0),
        provider_names: state.provider_names.clone(),
    })
}

async fn create_session(State(state): State<Arc<AppState>>) -> Json<SessionCreated> {
    Json(SessionCreated {
        session_id: state.sessions.create(),
    })
}

async fn chat(
    State(state): State<Arc<AppState>>,
    body: Result<Json<ChatRequest>, JsonRejection>,
) -> Result<Json<AnswerPayload>, ApiError> {
    let Json(req) = body.map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "invalid_request", e.body_text()))?;
    let engine = state.engine().ok_or_else(ApiError::not_ready)?;
    if req.message.trim().is_empty() {
        return Err(ApiError::new(StatusCode::BAD_REQUEST, "empty_message", "message is empty"));
    }
    let session = state
        .sessions
        .get(&req.session_id)
        .await
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "unknown_session", "no such session"))?;
    let mut session = session.lock().await;
    session.touch();
    let answer = engine.answer_in_session(&mut session, &req.message).await.map_err(|e| {
        error!(session = %session.session_id, error = %e, "chat request failed");
        ApiError::from(e)
    })?;
    info!(session = %session.session_id, sections = answer.sections.len(), "answered");
    Ok(Json(AnswerPayload::from(&answer)))
}

async fn get_chunk(State(state): State<Arc<AppState>>, UrlPath(chunk_id): UrlPath<String>) -> Result<Json<Chunk>, ApiError> {
    let engine = state.engine().ok_or_else(ApiError::not_ready)?;
    engine
        .index()
        .chunk(&chunk_id)
        .cloned()
        .map(Json)
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "unknown_chunk", format!("no chunk {chunk_id}")))
}

/// Runs the service until ctrl-c or until loading the knowledge base fails.
pub async fn serve(config: ServiceConfig) -> Result<(), ServiceError> {
    config.validate()?;
    let state = Arc::new(AppState::new(
        config.providers.provider_names(),
        config.session_ttl,
        config.shared_secret.clone(),
    ));
    if let Some(path) = config.session_snapshot.as_deref().filter(|p| p.exists()) {
        match state.sessions.load_snapshot(path) {
            Ok(n) => info!(restored = n, "sessions restored"),
            Err(e) => error!(error = %e, "ignoring unreadable session snapshot"),
        }
    }
    let listener = tokio::net::TcpListener::bind(config.bind)
        .await
        .map_err(|e| ServiceError::Invalid(format!("cannot bind {}: {e}", config.bind)))?;
    let addr: SocketAddr = listener.local_addr().map_err(|e| ServiceError::Runtime(e.to_string()))?;
    info!(%addr, "listening");

    let (fail_tx, mut fail_rx) = tokio::sync::mpsc::channel::<ServiceError>(1);
    {
        let state = state.clone();
        let config = config.clone();
        tokio::spawn(async move {
            match build_engine(&config).await {
                Ok(engine) => {
                    info!(chunks = engine.index().len(), "knowledge base loaded");
                    state.set_engine(engine);
                }
                Err(e) => {
                    let _ = fail_tx.send(e).await;
                }
            }
        });
    }
    {
        let state = state.clone();
        tokio::spawn(async move {
            let mut tick = tokio::time::interval(Duration::from_secs(60));
            loop {
                tick.tick().await;
                state.sessions.sweep();
            }
        });
    }

    let failure = Arc::new(std::sync::Mutex::new(None));
    let shutdown = {
        let failure = failure.clone();
        async move {
            tokio::select! {
                _ = tokio::signal::ctrl_c() => {}
                Some(e) = fail_rx.recv() => {
                    error!(error = %e, "failed to load the knowledge base");
                    *failure.lock().expect("poisoned") = Some(e);
                }
            }
        }
    };
    axum::serve(listener, router(state.clone()))
        .with_graceful_shutdown(shutdown)
        .await
        .map_err(|e| ServiceError::Runtime(e.to_string()))?;

    if let Some(path) = config.session_snapshot.as_deref() {
        if let Err(e) = state.sessions.save_snapshot(path).await {
            error!(error = %e, "could not write session snapshot");
        }
    }
    let failed = failure.lock().expect("poisoned").take();
    match failed {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

use std::time::Duration;

use async_trait::async_trait;
use serde::Deserialize;
use serde_json::json;

use super::{CompletionProvider, CompletionRequest, LlmError};

/// OpenAI-compatible `POST {base_url}/chat/completions` client. The prompt is
/// sent as a single user message.
#[derive(Debug, Clone)]
pub struct OpenAiChat {
    base_url: String,
    api_key: Option<String>,
    name: String,
    client: reqwest::Client,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: Message,
}

#[derive(Deserialize)]
struct Message {
    #[serde(default)]
    content: Option<String>,
}

impl OpenAiChat {
    pub fn new(base_url: &str, api_key: Option<String>, request_timeout: Duration) -> Self {
        Self {
            base_url: base_url.trim_end_matches('/').to_string(),
            api_key,
            name: "openai-chat".into(),
            client: reqwest::Client::builder()
                .timeout(request_timeout)
                .build()
                .expect("static client configuration"),
        }
    }

    fn transport(&self, e: reqwest::Error) -> LlmError {
        if e.is_timeout() {
            LlmError::Timeout {
                provider: self.name.clone(),
            }
        } else {
            LlmError::Transport {
                provider: self.name.clone(),
                message: e.to_string(),
            }
        }
    }
}

#[async_trait]
impl CompletionProvider for OpenAiChat {
    fn name(&self) -> &str {
        &self.name
    }

    async fn complete(&self, req: &CompletionRequest) -> Result<String, LlmError> {
        let body = json!({
            "model": req.model,
            "messages": [{ "role": "user", "content": req.prompt }],
            "temperature": req.temperature,
            "max_tokens": req.max_tokens,
        });
        let mut http = self
            .client
            .post(format!("{}/chat/completions", self.base_url))
            .json(&body);
        if let Some(key) = &self.api_key {
            http = http.bearer_auth(key);
        }
        let resp = http.send().await.map_err(|e| self.transport(e))?;
        let status = resp.status();
        if !status.is_success() {
            let raw = resp.text().await.unwrap_or_default();
            // surface the API's own message when the body has the usual shape
            let message = serde_json::from_str::<serde_json::Value>(&raw)
                .ok()
                .and_then(|v| v["error"]["message"].as_str().map(str::to_string))
                .unwrap_or(raw);
            return Err(LlmError::Api {
                provider: self.name.clone(),
                status: status.as_u16(),
                message,
            });
        }
        let parsed: ChatResponse = resp.json().await.map_err(|e| self.transport(e))?;
        Ok(parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .unwrap_or_default())
    }
}

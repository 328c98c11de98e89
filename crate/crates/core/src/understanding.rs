//! Turns the latest user input into a standalone query and splits it into
//! at most three simple sub-queries.

use std::collections::HashSet;
use std::sync::{Arc, LazyLock};

use chrono::{DateTime, Utc};
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::warn;

use crate::llm::{Gateway, LlmError, PromptTemplates};

pub const DEFAULT_HISTORY_WINDOW: usize = 10;
pub const MAX_SUB_QUERIES: usize = 3;

static LIST_ITEM: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\s*\d+[.)](?:\s+|$)(.*)$").expect("static regex"));

#[derive(Debug, Error)]
pub enum UnderstandingError {
    #[error("user input is empty")]
    EmptyInput,
    #[error(transparent)]
    Gateway(#[from] LlmError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatTurn {
    pub role: Role,
    pub content: String,
    pub timestamp: DateTime<Utc>,
}

impl ChatTurn {
    pub fn user(content: impl Into<String>) -> Self {
        Self::new(Role::User, content)
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self::new(Role::Assistant, content)
    }

    fn new(role: Role, content: impl Into<String>) -> Self {
        Self {
            role,
            content: content.into(),
            timestamp: Utc::now(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StandaloneQuery {
    pub text: String,
    /// False when the input was passed through unchanged.
    pub was_rewritten: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SubQuery {
    pub text: String,
    /// 1-based position in the decomposition.
    pub ordinal: u8,
}

/// Renders the last `window` turns as `User: ...` / `Assistant: ...` lines.
pub fn serialize_history(history: &[ChatTurn], window: usize) -> String {
    let start = history.len().saturating_sub(window);
    history[start..]
        .iter()
        .map(|turn| {
            let who = match turn.role {
                Role::User => "User",
                Role::Assistant => "Assistant",
            };
            format!("{who}: {}", turn.content.split_whitespace().collect::<Vec<_>>().join(" "))
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// Items of a numbered list (`1.` or `1)` markers), in order. Never fails.
pub fn parse_numbered_list(text: &str) -> Vec<String> {
    text.lines()
        .filter_map(|line| LIST_ITEM.captures(line))
        .map(|c| c[1].trim().to_string())
        .filter(|item| !item.is_empty())
        .collect()
}

/// Parses model output into 1..=3 sub-queries, dropping case-insensitive
/// duplicates. Falls back to `fallback` when no list item is found.
pub fn sub_queries_from_output(output: &str, fallback: &str) -> Vec<SubQuery> {
    let mut seen = HashSet::new();
    let mut texts: Vec<String> = parse_numbered_list(output)
        .into_iter()
        .filter(|t| seen.insert(t.to_lowercase()))
        .take(MAX_SUB_QUERIES)
        .collect();
    if texts.is_empty() {
        texts.push(fallback.trim().to_string());
    }
    texts
        .into_iter()
        .enumerate()
        .map(|(i, text)| SubQuery {
            text,
            ordinal: (i + 1) as u8,
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct QueryUnderstanding {
    gateway: Arc<Gateway>,
    templates: PromptTemplates,
    history_window: usize,
}

impl QueryUnderstanding {
    pub fn new(gateway: Arc<Gateway>, templates: PromptTemplates) -> Self {
        Self {
            gateway,
            templates,
            history_window: DEFAULT_HISTORY_WINDOW,
        }
    }

    pub fn with_history_window(mut self, turns: usize) -> Self {
        self.history_window = turns;
        self
    }

    pub fn gateway(&self) -> &Arc<Gateway> {
        &self.gateway
    }

    pub fn templates(&self) -> &PromptTemplates {
        &self.templates
    }

    /// Rewrites `input` so it can be understood without `history`. With no
    /// history the input is returned as is and no model call is made.
    pub async fn decontextualize(&self, history: &[ChatTurn], input: &str) -> Result<StandaloneQuery, UnderstandingError> {
        if input.trim().is_empty() {
            return Err(UnderstandingError::EmptyInput);
        }
        if history.is_empty() || self.history_window == 0 {
            return Ok(StandaloneQuery {
                text: input.to_string(),
                was_rewritten: false,
            });
        }
        let prompt = self
            .templates
            .render_decontextualization(&serialize_history(history, self.history_window), input);
        let out = self.gateway.complete_prompt(prompt).await?;
        let text = out.text.trim();
        if text.is_empty() {
            warn!(provider = %out.provider_name, "blank rewrite, using raw input");
            return Ok(StandaloneQuery {
                text: input.to_string(),
                was_rewritten: false,
            });
        }
        Ok(StandaloneQuery {
            text: text.to_string(),
            was_rewritten: true,
        })
    }

    pub async fn decompose(&self, standalone: &StandaloneQuery) -> Result<Vec<SubQuery>, UnderstandingError> {
        if standalone.text.trim().is_empty() {
            return Err(UnderstandingError::EmptyInput);
        }
        let prompt = self.templates.render_decomposition(&standalone.text);
        let out = self.gateway.complete_prompt(prompt).await?;
        Ok(sub_queries_from_output(&out.text, &standalone.text))
    }
}

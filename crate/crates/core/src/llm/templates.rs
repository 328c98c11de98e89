use std::fs;
use std::path::Path;

use super::LlmError;

pub const CONTEXTUAL_QUERY_ISOLATION: &str = "contextual_query_isolation.txt";
pub const DECOMPOSITIONAL_QUERY_GENERATION: &str = "decompositional_query_generation.txt";
pub const RAG_SYNTHESIS: &str = "rag_synthesis.txt";

/// Prompt templates with `{name}` placeholders.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplates {
    /// Placeholders `{chat_history}` and `{question}`.
    pub contextual_query_isolation: String,
    /// Placeholder `{query}`.
    pub decompositional_query_generation: String,
    /// Placeholders `{context}` and `{query}`.
    pub rag_synthesis: String,
}

impl Default for PromptTemplates {
    fn default() -> Self {
        Self {
            contextual_query_isolation: strip_final_newline(include_str!(
                "../../templates/v1/contextual_query_isolation.txt"
            )),
            decompositional_query_generation: strip_final_newline(include_str!(
                "../../templates/v1/decompositional_query_generation.txt"
            )),
            rag_synthesis: strip_final_newline(include_str!("../../templates/v1/rag_synthesis.txt")),
        }
    }
}

impl PromptTemplates {
    /// Loads templates from a directory; files that are absent keep their defaults.
    pub fn from_dir(dir: &Path) -> Result<Self, LlmError> {
        let mut t = Self::default();
        for (name, slot) in [
            (CONTEXTUAL_QUERY_ISOLATION, &mut t.contextual_query_isolation),
            (DECOMPOSITIONAL_QUERY_GENERATION, &mut t.decompositional_query_generation),
            (RAG_SYNTHESIS, &mut t.rag_synthesis),
        ] {
            let path = dir.join(name);
            if path.exists() {
                let raw = fs::read_to_string(&path)
                    .map_err(|e| LlmError::Template(format!("{}: {e}", path.display())))?;
                *slot = strip_final_newline(&raw);
            }
        }
        Ok(t)
    }

    pub fn render_decontextualization(&self, chat_history: &str, question: &str) -> String {
        render(
            &self.contextual_query_isolation,
            &[("chat_history", chat_history), ("question", question)],
        )
    }

    pub fn render_decomposition(&self, query: &str) -> String {
        render(&self.decompositional_query_generation, &[("query", query)])
    }

    pub fn render_rag(&self, context: &str, query: &str) -> String {
        render(&self.rag_synthesis, &[("context", context), ("query", query)])
    }
}

fn strip_final_newline(s: &str) -> String {
    s.strip_suffix('\n')
        .map(|s| s.strip_suffix('\r').unwrap_or(s))
        .unwrap_or(s)
        .to_string()
}

/// Single-pass substitution: placeholder-like text inside values is left alone,
/// as are unknown placeholders.
pub fn render(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let hit = after.find('}').and_then(|close| {
            let name = &after[..close];
            vars.iter()
                .find(|(k, _)| *k == name)
                .map(|(_, v)| (*v, close))
        });
        match hit {
            Some((value, close)) => {
                out.push_str(value);
                rest = &after[close + 1..];
            }
            None => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}

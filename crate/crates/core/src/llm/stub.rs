use std::sync::LazyLock;

use async_trait::async_trait;
use regex::Regex;

use super::{CompletionProvider, CompletionRequest, LlmError};

/// Nouns that third-person pronouns may refer back to.
const NOUNS: &[&str] = &["airline", "flight", "bag", "claim"];
const MAX_QUESTIONS: usize = 3;

static WORD: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"[A-Za-z]+").expect("static regex"));
static SENTENCE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"[^.?!]+[.?!]*").expect("static regex"));
static AND: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i),?\s+and\s+").expect("static regex"));
static PASSAGE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\[\d+\]\s*(.*)$").expect("static regex"));

/// Deterministic rule-based stand-in for a chat model.
///
/// It recognises the three default prompt templates by their section labels:
///
/// * isolation prompts: third-person pronouns in the follow-up input are
///   replaced by "the <noun>" for the most recent of airline/flight/bag/claim
///   mentioned in the chat history;
/// * decomposition prompts: the input is split at sentence ends and at "and"
///   joining two clauses of three or more words, giving at most three numbered
///   questions;
/// * synthesis prompts: the first sentence of each context passage, joined.
///
/// Anything else yields an empty completion.
#[derive(Debug, Clone, Copy, Default)]
pub struct RuleBasedLlm;

impl RuleBasedLlm {
    pub const NAME: &'static str = "rule-based-stub";

    pub fn respond(prompt: &str) -> String {
        if let Some((history, question)) = isolation_parts(prompt) {
            return resolve_pronouns(history, question);
        }
        if let Some(query) = between(prompt, "\nInput: ", "\n\nQuestions:") {
            return decompose(query)
                .iter()
                .enumerate()
                .map(|(i, q)| format!("{}. {q}", i + 1))
                .collect::<Vec<_>>()
                .join("\n");
        }
        if let Some(context) = between(prompt, "Context:\n", "\n\nQuestion:") {
            return synthesize(context);
        }
        String::new()
    }
}

#[async_trait]
impl CompletionProvider for RuleBasedLlm {
    fn name(&self) -> &str {
        Self::NAME
    }

    async fn complete(&self, req: &CompletionRequest) -> Result<String, LlmError> {
        Ok(Self::respond(&req.prompt))
    }
}

fn between<'a>(text: &'a str, start: &str, end: &str) -> Option<&'a str> {
    let from = text.find(start)? + start.len();
    let to = text.rfind(end)?;
    (to >= from).then(|| &text[from..to])
}

fn isolation_parts(prompt: &str) -> Option<(&str, &str)> {
    let history = between(prompt, "Chat History:\n", "\n\nFollow Up Input:\n")?;
    let question = between(prompt, "Follow Up Input:\n", "\n\nText:")?;
    Some((history, question))
}

fn noun_of(word: &str) -> Option<&'static str> {
    let lower = word.to_ascii_lowercase();
    NOUNS
        .iter()
        .find(|n| lower == **n || lower.strip_suffix('s') == Some(**n))
        .copied()
}

fn resolve_pronouns(history: &str, question: &str) -> String {
    let Some(noun) = WORD.find_iter(history).filter_map(|m| noun_of(m.as_str())).last() else {
        return question.trim().to_string();
    };
    let mut out = String::with_capacity(question.len() + 16);
    let mut last = 0;
    for m in WORD.find_iter(question) {
        let word = m.as_str();
        let contraction = question[m.end()..].starts_with('\'');
        let replacement = match word.to_ascii_lowercase().as_str() {
            "they" | "them" | "it" if !contraction => format!("the {noun}"),
            "their" | "its" => format!("the {noun}'s"),
            _ => continue,
        };
        out.push_str(&question[last..m.start()]);
        if word.starts_with(|c: char| c.is_uppercase()) {
            out.push_str(&capitalize(&replacement));
        } else {
            out.push_str(&replacement);
        }
        last = m.end();
    }
    out.push_str(&question[last..]);
    out.trim().to_string()
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

fn word_count(s: &str) -> usize {
    s.split_whitespace().count()
}

fn decompose(query: &str) -> Vec<String> {
    let mut pieces = Vec::new();
    for sentence in SENTENCE.find_iter(query) {
        let mut current = String::new();
        for part in AND.split(sentence.as_str()) {
            if current.is_empty() {
                current = part.to_string();
            } else if word_count(&current) >= 3 && word_count(part) >= 3 {
                pieces.push(std::mem::replace(&mut current, part.to_string()));
            } else {
                current = format!("{current} and {part}");
            }
        }
        pieces.push(current);
    }
    pieces
        .iter()
        .map(|p| p.trim().trim_end_matches(['.', '?', '!', ',', ';', ':']).trim())
        .filter(|p| p.chars().any(char::is_alphanumeric))
        .take(MAX_QUESTIONS)
        .map(|p| format!("{}?", capitalize(p)))
        .collect()
}

fn synthesize(context: &str) -> String {
    let sentences: Vec<&str> = context
        .lines()
        .filter_map(|line| PASSAGE.captures(line).and_then(|c| c.get(1)))
        .map(|m| first_sentence(m.as_str()))
        .filter(|s| !s.is_empty())
        .collect();
    if sentences.is_empty() {
        "I do not know.".to_string()
    } else {
        sentences.join(" ")
    }
}

fn first_sentence(text: &str) -> &str {
    let text = text.trim();
    let bytes = text.as_bytes();
    for (i, b) in bytes.iter().enumerate() {
        if matches!(b, b'.' | b'?' | b'!') && bytes.get(i + 1).is_none_or(|n| n.is_ascii_whitespace()) {
            return &text[..=i];
        }
    }
    text
}

use std::collections::BTreeSet;

use ego_tree::iter::Edge;
use ego_tree::NodeId;
use scraper::{Html, Node, Selector};

use super::{normalize_whitespace, Chunk, CorpusError, DocKind, DocumentRecord};

/// Sections shorter than this many characters are folded into a neighbour.
pub const DEFAULT_MIN_CHUNK_CHARS: usize = 40;

/// Page chrome and non-visible content removed before splitting.
const STRIPPED: &[&str] = &[
    "script", "style", "nav", "footer", "noscript", "template", "title",
];

/// Elements whose boundaries separate words.
const BLOCK: &[&str] = &[
    "address", "article", "aside", "blockquote", "br", "caption", "dd", "details", "dialog",
    "div", "dl", "dt", "fieldset", "figcaption", "figure", "form", "h1", "h2", "h3", "h4", "h5",
    "h6", "header", "hr", "li", "main", "ol", "p", "pre", "section", "summary", "table", "tbody",
    "td", "tfoot", "th", "thead", "tr", "ul",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitOptions {
    /// Header levels (1..=6) that open a new chunk.
    pub levels: BTreeSet<u8>,
    pub min_chunk_chars: usize,
}

impl Default for SplitOptions {
    fn default() -> Self {
        Self {
            levels: [1, 2, 3].into_iter().collect(),
            min_chunk_chars: DEFAULT_MIN_CHUNK_CHARS,
        }
    }
}

impl SplitOptions {
    /// Options that split at the given levels and never merge short sections.
    pub fn unmerged(levels: impl IntoIterator<Item = u8>) -> Self {
        Self {
            levels: levels.into_iter().collect(),
            min_chunk_chars: 0,
        }
    }
}

/// Parses a comma separated list such as `h1,h2,h3`.
pub fn parse_levels(spec: &str) -> Result<BTreeSet<u8>, CorpusError> {
    spec.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.strip_prefix(['h', 'H'])
                .and_then(|n| n.parse::<u8>().ok())
                .filter(|n| (1..=6).contains(n))
                .ok_or_else(|| CorpusError::InvalidLevel(s.to_string()))
        })
        .collect()
}

/// A chunk together with the header texts that opened it.
///
/// Header texts that start a chunk live in its `header_path` rather than its
/// `text`; `headings` records which ones belong to this chunk so that every
/// visible word of the page can be accounted to exactly one section.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Section {
    pub chunk: Chunk,
    pub headings: Vec<String>,
}

pub fn split_by_headers(doc: &DocumentRecord, opts: &SplitOptions) -> Result<Vec<Chunk>, CorpusError> {
    Ok(split_sections(doc, opts)?
        .into_iter()
        .map(|s| s.chunk)
        .collect())
}

pub fn split_sections(doc: &DocumentRecord, opts: &SplitOptions) -> Result<Vec<Section>, CorpusError> {
    let html = Html::parse_document(&doc.body_html);
    let raw = match doc.kind {
        DocKind::StepByStepGuide => {
            let text = body_text(&html);
            if text.is_empty() {
                Vec::new()
            } else {
                vec![RawSection {
                    header_path: Vec::new(),
                    headings: Vec::new(),
                    text,
                }]
            }
        }
        DocKind::Regular => {
            let sections = build_sections(body_events(&html, &opts.levels));
            merge_short(sections, opts.min_chunk_chars)
        }
    };
    if raw.is_empty() {
        return Err(CorpusError::EmptyDocument {
            url: doc.url.clone(),
        });
    }
    Ok(raw
        .into_iter()
        .map(|s| Section {
            chunk: Chunk::new(&doc.url, &doc.title, s.header_path, s.text, doc.kind),
            headings: s.headings,
        })
        .collect())
}

/// Visible body text of a page with whitespace normalized.
pub fn extract_body_text(html: &str) -> String {
    body_text(&Html::parse_document(html))
}

/// Normalized `<title>` text, if present and non-empty.
pub fn extract_title(html: &str) -> Option<String> {
    let doc = Html::parse_document(html);
    let selector = Selector::parse("title").expect("static selector");
    doc.select(&selector)
        .next()
        .map(|t| normalize_whitespace(&t.text().collect::<String>()))
        .filter(|t| !t.is_empty())
}

fn body_text(html: &Html) -> String {
    let mut out = String::new();
    for event in body_events(html, &BTreeSet::new()) {
        if let Event::Text(t) = event {
            out.push_str(&t);
        }
    }
    normalize_whitespace(&out)
}

#[derive(Debug)]
enum Event {
    Text(String),
    Heading { level: u8, text: String },
}

fn heading_level(name: &str) -> Option<u8> {
    match name {
        "h1" => Some(1),
        "h2" => Some(2),
        "h3" => Some(3),
        "h4" => Some(4),
        "h5" => Some(5),
        "h6" => Some(6),
        _ => None,
    }
}

/// Flattens the body into text runs and split-level headings, in document order.
fn body_events(html: &Html, levels: &BTreeSet<u8>) -> Vec<Event> {
    let body_sel = Selector::parse("body").expect("static selector");
    let Some(body) = html.select(&body_sel).next() else {
        return Vec::new();
    };

    let mut events = Vec::new();
    let mut skipping: Option<NodeId> = None;
    // (heading node, level, captured text)
    let mut capture: Option<(NodeId, u8, String)> = None;
    let mut text = String::new();

    for edge in body.traverse() {
        match edge {
            Edge::Open(node) => {
                if skipping.is_some() {
                    continue;
                }
                match node.value() {
                    Node::Text(t) => match capture.as_mut() {
                        Some((_, _, buf)) => buf.push_str(t),
                        None => text.push_str(t),
                    },
                    Node::Element(el) => {
                        let name = el.name();
                        if STRIPPED.contains(&name) {
                            skipping = Some(node.id());
                            continue;
                        }
                        let split_level = heading_level(name).filter(|l| levels.contains(l));
                        if let (Some(level), None) = (split_level, capture.as_ref()) {
                            if !text.is_empty() {
                                events.push(Event::Text(std::mem::take(&mut text)));
                            }
                            capture = Some((node.id(), level, String::new()));
                        } else if BLOCK.contains(&name) {
                            match capture.as_mut() {
                                Some((_, _, buf)) => buf.push(' '),
                                None => text.push(' '),
                            }
                        }
                    }
                    _ => {}
                }
            }
            Edge::Close(node) => {
                if let Some(id) = skipping {
                    if id == node.id() {
                        skipping = None;
                    }
                    continue;
                }
                if matches!(capture, Some((id, _, _)) if id == node.id()) {
                    let (_, level, buf) = capture.take().expect("checked above");
                    events.push(Event::Heading {
                        level,
                        text: normalize_whitespace(&buf),
                    });
                    continue;
                }
                if let Node::Element(el) = node.value() {
                    if BLOCK.contains(&el.name()) {
                        match capture.as_mut() {
                            Some((_, _, buf)) => buf.push(' '),
                            None => text.push(' '),
                        }
                    }
                }
            }
        }
    }
    if !text.is_empty() {
        events.push(Event::Text(text));
    }
    events
}

#[derive(Debug, Clone)]
struct RawSection {
    header_path: Vec<String>,
    headings: Vec<String>,
    text: String,
}

fn build_sections(events: Vec<Event>) -> Vec<RawSection> {
    let mut sections = Vec::new();
    let mut stack: Vec<(u8, String)> = Vec::new();
    // headings seen since the last emitted section
    let mut pending: Vec<String> = Vec::new();
    let mut path: Vec<String> = Vec::new();
    let mut buf = String::new();

    let mut flush = |buf: &mut String, path: &[String], pending: &mut Vec<String>| {
        let text = normalize_whitespace(buf);
        buf.clear();
        if !text.is_empty() {
            sections.push(RawSection {
                header_path: path.to_vec(),
                headings: std::mem::take(pending),
                text,
            });
        }
    };

    for event in events {
        match event {
            Event::Text(t) => buf.push_str(&t),
            Event::Heading { level, text } => {
                if text.is_empty() {
                    buf.push(' ');
                    continue;
                }
                flush(&mut buf, &path, &mut pending);
                while stack.last().is_some_and(|(l, _)| *l >= level) {
                    stack.pop();
                }
                stack.push((level, text.clone()));
                pending.push(text);
                path = stack.iter().map(|(_, t)| t.clone()).collect();
            }
        }
    }
    flush(&mut buf, &path, &mut pending);

    // headings with no text after them stay visible in the last section
    if !pending.is_empty() {
        let tail = pending.join(" ");
        match sections.last_mut() {
            Some(last) => last.text = normalize_whitespace(&format!("{} {tail}", last.text)),
            None => sections.push(RawSection {
                header_path: Vec::new(),
                headings: Vec::new(),
                text: tail,
            }),
        }
    }
    sections
}

/// Folds `second` into `first`; the headings that opened `second` become inline text.
fn join(first: RawSection, second: RawSection) -> RawSection {
    let text = normalize_whitespace(&format!(
        "{} {} {}",
        first.text,
        second.headings.join(" "),
        second.text
    ));
    RawSection {
        header_path: first.header_path,
        headings: first.headings,
        text,
    }
}

fn merge_short(sections: Vec<RawSection>, min_chars: usize) -> Vec<RawSection> {
    let mut out: Vec<RawSection> = Vec::with_capacity(sections.len());
    let mut carry: Option<RawSection> = None;
    for section in sections {
        let section = match carry.take() {
            Some(short) => join(short, section),
            None => section,
        };
        if section.text.chars().count() < min_chars {
            carry = Some(section);
        } else {
            out.push(section);
        }
    }
    if let Some(short) = carry {
        match out.pop() {
            Some(prev) => out.push(join(prev, short)),
            None => out.push(short),
        }
    }
    out
}
